//! Presentations of countably generated modules by finitely many generators
//! inside a free module: the Gram operator, the n^2 m^2 normalisation, and
//! the level/slot reindexing table.

use crate::algebra::AlgebraContext;
use crate::block::BlockOp;
use crate::error::{Error, Result};
use crate::matrix::{cre, hermitian_defect, op_norm, CMatrix, SpectralDecomposition};

/// Generators xi_1..xi_J in a free module A^m over the ambient matrix
/// algebra. Elements of the presented module are coefficient vectors in A^J,
/// standing for sum_j xi_j a_j.
#[derive(Debug, Clone)]
pub struct ModulePresentation {
    ctx: AlgebraContext,
    free_rank: usize,
    generators: Vec<Vec<CMatrix>>,
    scales: Vec<f64>,
}

impl ModulePresentation {
    pub fn new(
        ctx: AlgebraContext,
        free_rank: usize,
        generators: Vec<Vec<CMatrix>>,
    ) -> Result<Self> {
        if generators.is_empty() || free_rank == 0 {
            return Err(Error::InvalidSpec(
                "presentation needs at least one generator and slot".into(),
            ));
        }
        let d = ctx.ambient_dim();
        for (j, g) in generators.iter().enumerate() {
            if g.len() != free_rank {
                return Err(Error::InvalidSpec(format!(
                    "generator {j} has {} slots, free rank is {free_rank}",
                    g.len()
                )));
            }
            for (k, m) in g.iter().enumerate() {
                if m.nrows() != d || m.ncols() != d {
                    return Err(Error::ShapeMismatch(format!(
                        "generator {j} slot {k} is {}x{}, ambient is {d}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        let scales = vec![1.0; generators.len()];
        Ok(ModulePresentation {
            ctx,
            free_rank,
            generators,
            scales,
        })
    }

    pub fn context(&self) -> &AlgebraContext {
        &self.ctx
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn generators(&self) -> &[Vec<CMatrix>] {
        &self.generators
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// <xi_i, xi_j> = sum_k xi_i[k]* xi_j[k].
    pub fn inner_product(&self, i: usize, j: usize) -> CMatrix {
        let d = self.ctx.ambient_dim();
        let mut acc = CMatrix::zeros(d, d);
        for k in 0..self.free_rank {
            acc += self.generators[i][k].adjoint() * &self.generators[j][k];
        }
        acc
    }

    /// The J x J block Gram operator. Checks algebra membership of every
    /// block, Hermitian symmetry and positive semidefiniteness.
    pub fn gram(&self) -> Result<BlockOp> {
        let j_count = self.generator_count();
        let d = self.ctx.ambient_dim();
        let mut g = BlockOp::zeros(d, j_count, j_count);
        for i in 0..j_count {
            for j in 0..j_count {
                let b = self.inner_product(i, j);
                let residual = self.ctx.membership_residual(&b);
                if residual > 1e-8 * (1.0 + b.norm()) {
                    return Err(Error::NotInAlgebra {
                        residual,
                        block: Some((i, j)),
                    });
                }
                g.set_block(i, j, &b);
            }
        }
        let scale = 1.0 + g.matrix().norm();
        let defect = hermitian_defect(g.matrix());
        if defect > 1e-12 * scale {
            return Err(Error::NotHermitian { defect });
        }
        let decomp = SpectralDecomposition::new(g.matrix())?;
        let min_eig = decomp.min_eigenvalue();
        if min_eig < -1e-10 * scale {
            return Err(Error::NotPositive { min_eig });
        }
        Ok(g)
    }

    /// Rescale generators by c_n = 1/(n^2 sqrt(M)) with
    /// M = max(1, max_{n,m} ‖<xi_n, xi_m>‖_delta), so that afterwards
    /// ‖<xi_n, xi_m>‖_delta <= 1/(n^2 m^2).
    pub fn rescale(&self) -> Result<(ModulePresentation, RescaleReport)> {
        let j_count = self.generator_count();
        let mut max_delta_norm: f64 = 1.0;
        let mut degenerate = Vec::new();
        for i in 0..j_count {
            for j in 0..j_count {
                let b = self.inner_product(i, j);
                let dn = self.ctx.delta_norm_unchecked(&b)?;
                max_delta_norm = max_delta_norm.max(dn);
            }
            if op_norm(&self.inner_product(i, i))? < 1e-14 {
                degenerate.push(i);
            }
        }
        let sqrt_m = max_delta_norm.sqrt();
        let mut generators = Vec::with_capacity(j_count);
        let mut scales = Vec::with_capacity(j_count);
        for (idx, g) in self.generators.iter().enumerate() {
            let n = (idx + 1) as f64;
            let c = 1.0 / (n * n * sqrt_m);
            scales.push(self.scales[idx] * c);
            generators.push(g.iter().map(|m| m * cre(c)).collect());
        }
        let pres = ModulePresentation {
            ctx: self.ctx.clone(),
            free_rank: self.free_rank,
            generators,
            scales,
        };
        Ok((
            pres,
            RescaleReport {
                m_constant: max_delta_norm,
                degenerate,
            },
        ))
    }

    /// Check the normalisation ‖<xi_n, xi_m>‖_delta <= 1/(n^2 m^2) + 1e-12.
    pub fn verify_rescaled(&self) -> Result<()> {
        let j_count = self.generator_count();
        for i in 0..j_count {
            for j in 0..j_count {
                let dn = self.ctx.delta_norm_unchecked(&self.inner_product(i, j))?;
                let n2m2 = ((i + 1) * (i + 1) * (j + 1) * (j + 1)) as f64;
                if dn > 1.0 / n2m2 + 1e-12 {
                    return Err(Error::NotRescaled {
                        pair: (i, j),
                        delta_norm: dn,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RescaleReport {
    /// M = max(1, max delta-norm of the Gram entries) before rescaling.
    pub m_constant: f64,
    /// Indices of zero generators (kept; scaling them is harmless).
    pub degenerate: Vec<usize>,
}

/// Row-major bijection between flat indices and (level, slot) pairs.
///
/// Any bijection gives a unitarily equivalent isometry; row-major keeps the
/// block structure contiguous.
#[derive(Debug, Clone)]
pub struct PairingTable {
    levels: usize,
    slots: usize,
    forward: Vec<(usize, usize)>,
}

impl PairingTable {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.levels * self.slots
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// flat -> (level, slot)
    pub fn split(&self, flat: usize) -> (usize, usize) {
        self.forward[flat]
    }

    /// (level, slot) -> flat
    pub fn flatten(&self, level: usize, slot: usize) -> usize {
        level * self.slots + slot
    }
}

pub fn pairing_index(levels: usize, slots: usize) -> Result<PairingTable> {
    if levels == 0 || slots == 0 {
        return Err(Error::InvalidSpec("pairing needs levels, slots >= 1".into()));
    }
    let forward = (0..levels * slots)
        .map(|k| (k / slots, k % slots))
        .collect();
    Ok(PairingTable {
        levels,
        slots,
        forward,
    })
}

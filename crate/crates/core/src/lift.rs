//! Symmetric lifts in finite dimensions: the operator (W* (x) 1) diag(D)
//! (W (x) 1) on X (x) Y for Y = C^d, the regulariser Delta = (W* K^2 W) (x) 1,
//! the commutator-extension identity for blocks of P K^2, the composition
//! identities for D x products, and GNS localization at a state.
//!
//! X (x) Y is carried as C^(J d) with the pairing u* G v; Y^infty truncates to
//! C^(N J d) with the standard pairing. On the stacked vectors W (x) 1 is the
//! same block matrix as W, and the module adjoint W* (x) 1 is the block row
//! of the sqrt(H_n).

use crate::absorption::AbsorptionSystem;
use crate::block::blockwise_delta;
use crate::error::{Error, Result};
use crate::matrix::{
    cre, frobenius, hermitian_defect, hermitize, identity, op_norm, CMatrix, SpectralDecomposition,
};

/// The lift data over an absorption system: the auxiliary operator D on
/// Y = C^d and the regulariser Delta = W* K^2 W acting on X (x) Y.
pub struct LiftSystem<'a> {
    sys: &'a AbsorptionSystem,
    d_op: CMatrix,
    d_hat: CMatrix,
    delta_mat: CMatrix,
}

impl<'a> LiftSystem<'a> {
    /// D must be Hermitian on C^d; it both acts on Y and implements the
    /// derivation [D, .] that the lift couples to.
    pub fn new(sys: &'a AbsorptionSystem, d_op: CMatrix) -> Result<Self> {
        let d = sys.ambient_dim();
        if d_op.nrows() != d || d_op.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "D must be {d} x {d} on the auxiliary space"
            )));
        }
        let defect = hermitian_defect(&d_op);
        if defect > 1e-12 * (1.0 + frobenius(&d_op)) {
            return Err(Error::NotHermitian { defect });
        }
        let j = sys.slots();
        let mut d_hat = CMatrix::zeros(j * d, j * d);
        for b in 0..j {
            d_hat.view_mut((b * d, b * d), (d, d)).copy_from(&d_op);
        }
        let delta_mat = hermitize(&sys.compressed_k_squared());
        Ok(LiftSystem {
            sys,
            d_op,
            d_hat,
            delta_mat,
        })
    }

    pub fn system(&self) -> &AbsorptionSystem {
        self.sys
    }

    pub fn auxiliary_operator(&self) -> &CMatrix {
        &self.d_op
    }

    /// Delta = (W* K^2 W) (x) 1 as a matrix on the stacked X (x) Y.
    pub fn regulariser(&self) -> &CMatrix {
        &self.delta_mat
    }

    pub fn min_eig_regulariser(&self) -> Result<f64> {
        Ok(SpectralDecomposition::new(&self.delta_mat)?.min_eigenvalue())
    }

    /// Residual of Q^2 = Q for Q = P (x) 1, measured without materialising Q:
    /// Q^2 - Q = W (W* W - 1) W* has rank at most J d.
    pub fn projection_residual(&self) -> Result<f64> {
        let jd = self.sys.slots() * self.sys.ambient_dim();
        let g = self.sys.gram().matrix();
        // W*W = G_N G on coefficients
        let wsw = self.sys.chain().last().unwrap().resolvent.clone() * g;
        let mid = &wsw - identity(jd);
        // ‖W mid W*‖ via the small pencil (W* W) mid (W*W)* against W W*^gram
        // use dense assembly on the factored form: U = W . mid, V rows sqrt(H_m)
        // σmax(U V^) with U^U = mid* (G G_N G) mid and V^V = sum H_m = G_N
        let ggng = g * &wsw;
        let r = mid.adjoint() * &ggng * &mid;
        let s = self.sys.chain().last().unwrap().resolvent.clone();
        let s_half = crate::matrix::herm_sqrt(&hermitize(&s))?;
        let pencil = hermitize(&(&s_half * hermitize(&r) * &s_half));
        let top = SpectralDecomposition::new(&pencil)?.max_eigenvalue();
        Ok(top.max(0.0).sqrt())
    }

    /// 1 (x)_grad D = (W* (x) 1) diag(D) (W (x) 1) =
    /// sum_n sqrt(H_n) D_hat sqrt(H_n) G on the stacked space.
    pub fn lift_operator(&self) -> CMatrix {
        let g = self.sys.gram().matrix();
        let jd = self.sys.slots() * self.sys.ambient_dim();
        let mut acc = CMatrix::zeros(jd, jd);
        for level in self.sys.chain() {
            acc += &level.sqrt_increment * &self.d_hat * &level.sqrt_increment * g;
        }
        acc
    }

    /// Symmetry defect of an operator on X (x) Y with respect to the module
    /// pairing: ‖G L - L* G‖. Exact (up to rounding) for the lift.
    pub fn hermiticity_defect(&self, l: &CMatrix) -> Result<f64> {
        let g = self.sys.gram().matrix();
        op_norm(&(g * l - l.adjoint() * g))
    }

    /// Residual of (1 (x)_grad D)(xi (x) eta) = grad(xi)(eta) + xi (x) D eta
    /// in the module norm, together with the defect-law scale it should not
    /// exceed. The derivation here is [D, .], implemented by D itself.
    pub fn lift_vs_connection(&self, xi: &CMatrix, eta: &CMatrix) -> Result<LiftConnectionGap> {
        let d = self.sys.ambient_dim();
        let jd = self.sys.slots() * d;
        if xi.nrows() != jd || xi.ncols() != d {
            return Err(Error::ShapeMismatch("xi must be a coefficient stack".into()));
        }
        if eta.nrows() != d || eta.ncols() != 1 {
            return Err(Error::ShapeMismatch("eta must be a vector on Y".into()));
        }
        let u = xi * eta; // xi (x) eta on the stacked space
        let lhs = self.lift_operator() * &u;

        let w_xi = self.sys.apply_isometry(xi);
        let d_w_xi = blockwise_delta(&w_xi, &self.d_op, d);
        let conn_term = self.sys.apply_isometry_adjoint(&(&d_w_xi * eta));
        let tensor_term = xi * (&self.d_op * eta);
        let resid_vec = lhs - conn_term - tensor_term;
        let g = self.sys.gram().matrix();
        let quad = (resid_vec.adjoint() * g * &resid_vec)[(0, 0)].re;
        let residual = quad.max(0.0).sqrt();

        let norm_xi = self.sys.module_norm(xi)?;
        let norm_eta = eta.norm();
        let d_norm = op_norm(&self.d_op)?;
        let delta_data = op_norm(&blockwise_delta(
            self.sys.gram().matrix(),
            &self.d_op,
            d,
        ))?;
        let scale = self.sys.defect() * norm_xi * norm_eta * (d_norm + delta_data);
        Ok(LiftConnectionGap {
            residual,
            scale,
            constant: if scale > 0.0 { residual / scale } else { 0.0 },
        })
    }

    /// Delta (1 (x)_grad D) Delta together with its certificates: the minimum
    /// eigenvalue of Delta and the commutator-extension residual
    /// ‖[diag(D), iota(rho(T))] - iota(delta(T))‖ for T = P K^2.
    pub fn regularized_lift(&self) -> Result<RegularizedLift> {
        let lift = self.lift_operator();
        let matrix = &self.delta_mat * &lift * &self.delta_mat;
        let min_eig_delta = self.min_eig_regulariser()?;

        // T = P K^2 has level blocks sqrt(H_n) G sqrt(H_m) G^2; assemble it
        // on Y^infty and compare the big commutator with the blockwise delta.
        let d = self.sys.ambient_dim();
        let j = self.sys.slots();
        let n = self.sys.levels();
        let g = self.sys.gram().matrix();
        let g2 = g * g;
        let mut t = CMatrix::zeros(n * j * d, n * j * d);
        for a in 0..n {
            let left = &self.sys.chain()[a].sqrt_increment * g;
            for b in 0..n {
                let block = &left * &self.sys.chain()[b].sqrt_increment * &g2;
                t.view_mut((a * j * d, b * j * d), (j * d, j * d))
                    .copy_from(&block);
            }
        }
        let mut diag_d = CMatrix::zeros(n * j * d, n * j * d);
        for k in 0..n * j {
            diag_d.view_mut((k * d, k * d), (d, d)).copy_from(&self.d_op);
        }
        let commutator = &diag_d * &t - &t * &diag_d;
        let blockwise = blockwise_delta(&t, &self.d_op, d);
        let commutator_residual = op_norm(&(commutator - blockwise))?;

        Ok(RegularizedLift {
            matrix,
            min_eig_delta,
            commutator_residual,
        })
    }

    /// [D, a] for an ambient matrix; the derivation the lift implements.
    pub fn implemented_derivation(&self, a: &CMatrix) -> CMatrix {
        &self.d_op * a - a * &self.d_op
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LiftConnectionGap {
    pub residual: f64,
    /// dfct(N) ‖xi‖ ‖eta‖ (‖D‖ + ‖delta(G)‖) — the defect-law scale.
    pub scale: f64,
    /// residual / scale, the measured constant.
    pub constant: f64,
}

#[derive(Debug, Clone)]
pub struct RegularizedLift {
    pub matrix: CMatrix,
    pub min_eig_delta: f64,
    pub commutator_residual: f64,
}

/// Residuals of the three composition formulas, exact matrix identities:
/// (D x)* = D x - delta(x), cl(x D) = D x - delta(x),
/// cl(x D x) = D x^2 - delta(x) x.
#[derive(Debug, Clone, Copy)]
pub struct CompositionReport {
    pub adjoint_residual: f64,
    pub closure_residual: f64,
    pub sandwich_residual: f64,
}

impl CompositionReport {
    pub fn max(&self) -> f64 {
        self.adjoint_residual
            .max(self.closure_residual)
            .max(self.sandwich_residual)
    }
}

pub fn composition_identities(d_op: &CMatrix, x: &CMatrix) -> Result<CompositionReport> {
    for m in [d_op, x] {
        let defect = hermitian_defect(m);
        if defect > 1e-12 * (1.0 + frobenius(m)) {
            return Err(Error::NotHermitian { defect });
        }
    }
    if d_op.nrows() != x.nrows() {
        return Err(Error::ShapeMismatch("D and x must act on the same space".into()));
    }
    let dx = d_op * x;
    let delta_x = d_op * x - x * d_op;
    let adjoint_residual = op_norm(&(dx.adjoint() - (&dx - &delta_x)))?;
    let closure_residual = op_norm(&(x * d_op - (&dx - &delta_x)))?;
    let sandwich_residual = op_norm(&(x * d_op * x - (d_op * x * x - &delta_x * x)))?;
    Ok(CompositionReport {
        adjoint_residual,
        closure_residual,
        sandwich_residual,
    })
}

/// GNS localization of M_d at a density matrix: the Hilbert space completion
/// of M_d under <a,b> = tr(sigma a* b), with left multiplication as the
/// representation.
pub struct GnsSpace {
    state: CMatrix,
    ambient: usize,
    /// Orthonormal basis of the quotient, as matrices.
    basis: Vec<CMatrix>,
}

impl GnsSpace {
    pub fn new(sigma: &CMatrix) -> Result<Self> {
        let d = sigma.nrows();
        if d == 0 || sigma.ncols() != d {
            return Err(Error::InvalidState("state must be a square matrix".into()));
        }
        let trace: f64 = (0..d).map(|i| sigma[(i, i)].re).sum();
        let trace_im: f64 = (0..d).map(|i| sigma[(i, i)].im).sum();
        if (trace - 1.0).abs() > 1e-12 || trace_im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "state must have unit trace, got {trace}"
            )));
        }
        let decomp = SpectralDecomposition::new(sigma)?;
        if decomp.min_eigenvalue() < -1e-12 {
            return Err(Error::NotPositive {
                min_eig: decomp.min_eigenvalue(),
            });
        }

        // Gram matrix of the matrix units under the state pairing
        let units: Vec<CMatrix> = (0..d * d)
            .map(|k| crate::matrix::matrix_unit(d, k / d, k % d))
            .collect();
        let mut gram = CMatrix::zeros(d * d, d * d);
        for (i, a) in units.iter().enumerate() {
            for (j, b) in units.iter().enumerate() {
                gram[(i, j)] = state_inner(sigma, a, b);
            }
        }
        let gram_decomp = SpectralDecomposition::new(&hermitize(&gram))?;
        let cutoff = 1e-12 * gram_decomp.max_eigenvalue().max(1e-300);
        let mut basis = Vec::new();
        for (idx, &ev) in gram_decomp.eigenvalues.iter().enumerate() {
            if ev > cutoff {
                let col = gram_decomp.eigenvectors.column(idx);
                let mut m = CMatrix::zeros(d, d);
                for (k, unit) in units.iter().enumerate() {
                    m += unit * col[k];
                }
                basis.push(m * cre(1.0 / ev.sqrt()));
            }
        }
        Ok(GnsSpace {
            state: sigma.clone(),
            ambient: d,
            basis,
        })
    }

    /// Hilbert-space dimension of the localization: d * rank(sigma).
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn state(&self) -> &CMatrix {
        &self.state
    }

    /// Coordinates of the class [a] in the orthonormal basis.
    pub fn class_of(&self, a: &CMatrix) -> Vec<crate::matrix::C64> {
        self.basis
            .iter()
            .map(|v| state_inner(&self.state, v, a))
            .collect()
    }

    /// The localized matrix of left multiplication by a.
    pub fn rep(&self, a: &CMatrix) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (j, vb) in self.basis.iter().enumerate() {
            let avb = a * vb;
            for (i, va) in self.basis.iter().enumerate() {
                out[(i, j)] = state_inner(&self.state, va, &avb);
            }
        }
        out
    }

    /// Worst *-homomorphism residual over all pairs of matrix units.
    pub fn multiplicativity_residual(&self) -> Result<f64> {
        let d = self.ambient;
        let mut worst = 0.0f64;
        for i in 0..d * d {
            let a = crate::matrix::matrix_unit(d, i / d, i % d);
            let star = op_norm(&(self.rep(&a.adjoint()) - self.rep(&a).adjoint()))?;
            worst = worst.max(star);
            for j in 0..d * d {
                let b = crate::matrix::matrix_unit(d, j / d, j % d);
                let lhs = self.rep(&(&a * &b));
                let rhs = self.rep(&a) * self.rep(&b);
                worst = worst.max(op_norm(&(lhs - rhs))?);
            }
        }
        Ok(worst)
    }
}

fn state_inner(sigma: &CMatrix, a: &CMatrix, b: &CMatrix) -> crate::matrix::C64 {
    let m = sigma * a.adjoint() * b;
    let mut tr = crate::matrix::czero();
    for i in 0..m.nrows() {
        tr += m[(i, i)];
    }
    tr
}

/// Localize the listed operators (acting by left multiplication) at the
/// state; the localized-adjoint identity ((D x)_sigma)* = (x D)_sigma is then
/// checked against these matrices by the callers.
pub fn gns_localize(sigma: &CMatrix, ops: &[CMatrix]) -> Result<(GnsSpace, Vec<CMatrix>)> {
    let space = GnsSpace::new(sigma)?;
    let localized = ops.iter().map(|op| space.rep(op)).collect();
    Ok((space, localized))
}

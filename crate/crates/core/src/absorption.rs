//! The absorption engine: resolvent chain G_n = (G + 1/n)^(-1), increments
//! H_n with their square roots, the truncated isometry W with level blocks
//! sqrt(H_n) G, the regulariser K = diag(G), the projection P = W W*, frame
//! vectors, and the derivative-decay and tail experiments.
//!
//! Everything on the presented module is expressed through coefficient
//! vectors in A^J. On those, Phi acts as G and Phi* as the formal sum, so the
//! adjoint of W is the block row [sqrt(H_1), ..., sqrt(H_N)] rather than the
//! conjugate transpose of its matrix.

use crate::algebra::AlgebraContext;
use crate::block::{blockwise_delta, BlockOp};
use crate::calculus::{calc_derivative_spectral, inv_sqrt_derivative_integral, QuadratureSpec, ScalarFn};
use crate::error::{Error, Result};
use crate::matrix::{
    cre, herm_sqrt, hermitize, op_norm, shifted_inverse, CMatrix, SpectralDecomposition,
};
use crate::presentation::{pairing_index, ModulePresentation, PairingTable};

/// One level of the resolvent chain.
#[derive(Debug, Clone)]
pub struct ChainLevel {
    /// G_n = (G + 1/n)^(-1)
    pub resolvent: CMatrix,
    /// H_n = G_n - G_{n-1}, with G_0 = 0
    pub increment: CMatrix,
    /// positive square root of H_n
    pub sqrt_increment: CMatrix,
}

/// Build the chain G_n, H_n, sqrt(H_n) for n = 1..=levels.
pub fn resolvent_chain(g: &CMatrix, levels: usize) -> Result<Vec<ChainLevel>> {
    if levels == 0 {
        return Err(Error::InvalidSpec("chain needs at least one level".into()));
    }
    let decomp = SpectralDecomposition::new(g)?;
    let scale = 1.0 + g.norm();
    if decomp.min_eigenvalue() < -1e-10 * scale {
        return Err(Error::NotPositive {
            min_eig: decomp.min_eigenvalue(),
        });
    }
    let mut chain = Vec::with_capacity(levels);
    let mut prev = CMatrix::zeros(g.nrows(), g.ncols());
    for n in 1..=levels {
        let resolvent = shifted_inverse(g, 1.0 / n as f64)?;
        let increment = hermitize(&(&resolvent - &prev));
        let sqrt_increment = herm_sqrt(&increment)?;
        prev = resolvent.clone();
        chain.push(ChainLevel {
            resolvent,
            increment,
            sqrt_increment,
        });
    }
    Ok(chain)
}

/// ‖G (G + 1/N)^(-1) G - G‖, the isometry defect at truncation level N.
/// Bounded by 1/N for PSD G.
pub fn isometry_defect(g: &CMatrix, level: usize) -> Result<f64> {
    let resolvent = shifted_inverse(g, 1.0 / level as f64)?;
    op_norm(&(g * resolvent * g - g))
}

/// The assembled truncation: presentation, Gram, chain, isometry and frame.
#[derive(Debug, Clone)]
pub struct AbsorptionSystem {
    pres: ModulePresentation,
    gram: BlockOp,
    gram_decomp: SpectralDecomposition,
    chain: Vec<ChainLevel>,
    pairing: PairingTable,
    defect: f64,
}

/// Assemble the absorption system at truncation level `levels` from a
/// rescaled presentation.
pub fn build_isometry(pres: &ModulePresentation, levels: usize) -> Result<AbsorptionSystem> {
    pres.verify_rescaled()?;
    let gram = pres.gram()?;
    let gram_decomp = SpectralDecomposition::new(gram.matrix())?;
    let chain = resolvent_chain(gram.matrix(), levels)?;
    let pairing = pairing_index(levels, pres.generator_count())?;
    let defect = isometry_defect(gram.matrix(), levels)?;
    Ok(AbsorptionSystem {
        pres: pres.clone(),
        gram,
        gram_decomp,
        chain,
        pairing,
        defect,
    })
}

impl AbsorptionSystem {
    pub fn presentation(&self) -> &ModulePresentation {
        &self.pres
    }

    pub fn context(&self) -> &AlgebraContext {
        self.pres.context()
    }

    pub fn gram(&self) -> &BlockOp {
        &self.gram
    }

    pub fn gram_decomposition(&self) -> &SpectralDecomposition {
        &self.gram_decomp
    }

    pub fn chain(&self) -> &[ChainLevel] {
        &self.chain
    }

    pub fn levels(&self) -> usize {
        self.chain.len()
    }

    pub fn slots(&self) -> usize {
        self.pres.generator_count()
    }

    pub fn ambient_dim(&self) -> usize {
        self.pres.context().ambient_dim()
    }

    pub fn pairing(&self) -> &PairingTable {
        &self.pairing
    }

    /// dfct(N) = ‖G G_N G - G‖ at the system's truncation level.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Spectral condition number of G; None when G is numerically singular.
    pub fn gram_condition(&self) -> Option<f64> {
        let max = self.gram_decomp.max_eigenvalue();
        let min = self.gram_decomp.min_eigenvalue();
        if min <= 1e-12 * (1.0 + max) {
            None
        } else {
            Some(max / min)
        }
    }

    /// The isometry as an (N J) x J block matrix with level blocks
    /// sqrt(H_n) G.
    pub fn isometry(&self) -> BlockOp {
        let d = self.ambient_dim();
        let j = self.slots();
        let n = self.levels();
        let mut w = CMatrix::zeros(n * j * d, j * d);
        for (lvl, level) in self.chain.iter().enumerate() {
            let block = &level.sqrt_increment * self.gram.matrix();
            w.view_mut((lvl * j * d, 0), (j * d, j * d)).copy_from(&block);
        }
        BlockOp::from_matrix(w, d).unwrap()
    }

    /// W x for a coefficient block-column x (J*d rows).
    pub fn apply_isometry(&self, x: &CMatrix) -> CMatrix {
        let jd = self.slots() * self.ambient_dim();
        assert_eq!(x.nrows(), jd, "coefficient vector has wrong height");
        let gx = self.gram.matrix() * x;
        let mut out = CMatrix::zeros(self.levels() * jd, x.ncols());
        for (lvl, level) in self.chain.iter().enumerate() {
            let piece = &level.sqrt_increment * &gx;
            out.view_mut((lvl * jd, 0), (jd, x.ncols())).copy_from(&piece);
        }
        out
    }

    /// W* y = sum_n sqrt(H_n) y_n (the module adjoint, not the conjugate
    /// transpose of the coefficient matrix).
    pub fn apply_isometry_adjoint(&self, y: &CMatrix) -> CMatrix {
        let jd = self.slots() * self.ambient_dim();
        assert_eq!(y.nrows(), self.levels() * jd, "stack has wrong height");
        let mut out = CMatrix::zeros(jd, y.ncols());
        for (lvl, level) in self.chain.iter().enumerate() {
            let piece: CMatrix = y.view((lvl * jd, 0), (jd, y.ncols())).into();
            out += &level.sqrt_increment * piece;
        }
        out
    }

    /// P y = W W* y without materialising P.
    pub fn apply_projection(&self, y: &CMatrix) -> CMatrix {
        let pulled = self.apply_isometry_adjoint(y);
        let jd = self.slots() * self.ambient_dim();
        let gx = self.gram.matrix() * pulled;
        let mut out = CMatrix::zeros(y.nrows(), y.ncols());
        for (lvl, level) in self.chain.iter().enumerate() {
            let piece = &level.sqrt_increment * &gx;
            out.view_mut((lvl * jd, 0), (jd, y.ncols())).copy_from(&piece);
        }
        out
    }

    /// Frame vector zeta_k as a coefficient block-column; its blocks are the
    /// slot column of sqrt(H_n) at the level given by the pairing table.
    pub fn zeta(&self, flat: usize) -> CMatrix {
        let (level, slot) = self.pairing.split(flat);
        let d = self.ambient_dim();
        let j = self.slots();
        let sqrt_h = &self.chain[level].sqrt_increment;
        let mut out = CMatrix::zeros(j * d, d);
        for i in 0..j {
            let b: CMatrix = sqrt_h.view((i * d, slot * d), (d, d)).into();
            out.view_mut((i * d, 0), (d, d)).copy_from(&b);
        }
        out
    }

    /// Module inner product <a, b> = a* G b of coefficient block-columns.
    pub fn module_inner(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        a.adjoint() * self.gram.matrix() * b
    }

    /// Module norm ‖a‖ = ‖<a,a>‖^(1/2).
    pub fn module_norm(&self, a: &CMatrix) -> Result<f64> {
        Ok(op_norm(&self.module_inner(a, a))?.sqrt())
    }

    /// W* K W = sum_n sqrt(H_n) G sqrt(H_n) G, computed as the honest sum.
    pub fn compressed_k(&self) -> CMatrix {
        let g = self.gram.matrix();
        let jd = self.slots() * self.ambient_dim();
        let mut acc = CMatrix::zeros(jd, jd);
        for level in &self.chain {
            acc += &level.sqrt_increment * g * &level.sqrt_increment * g;
        }
        acc
    }

    /// W* K^2 W = sum_n sqrt(H_n) G^2 sqrt(H_n) G.
    pub fn compressed_k_squared(&self) -> CMatrix {
        let g = self.gram.matrix();
        let g2 = g * g;
        let jd = self.slots() * self.ambient_dim();
        let mut acc = CMatrix::zeros(jd, jd);
        for level in &self.chain {
            acc += &level.sqrt_increment * &g2 * &level.sqrt_increment * g;
        }
        acc
    }

    /// Residual of sum_{n<=N} H_n = (G + 1/N)^(-1) by direct summation.
    pub fn telescoping_residual(&self) -> Result<f64> {
        let jd = self.slots() * self.ambient_dim();
        let mut acc = CMatrix::zeros(jd, jd);
        for level in &self.chain {
            acc += &level.increment;
        }
        op_norm(&(acc - &self.chain.last().unwrap().resolvent))
    }

    /// K, P and the differentiable-absorption certificates. Materialises P,
    /// so keep the level count moderate.
    pub fn build_k(&self) -> Result<KSystem> {
        let d = self.ambient_dim();
        let j = self.slots();
        let n = self.levels();
        let g = self.gram.matrix();

        let mut k = BlockOp::zeros(d, n * j, n * j);
        for lvl in 0..n {
            k.matrix_mut()
                .view_mut((lvl * j * d, lvl * j * d), (j * d, j * d))
                .copy_from(g);
        }

        let mut p = CMatrix::zeros(n * j * d, n * j * d);
        for a in 0..n {
            for b in 0..n {
                let block = &self.chain[a].sqrt_increment * g * &self.chain[b].sqrt_increment;
                p.view_mut((a * j * d, b * j * d), (j * d, j * d)).copy_from(&block);
            }
        }

        // Frobenius upper bound on ‖KP - PK‖, streamed blockwise; every block
        // is a product of functions of G, so this is pure rounding.
        let mut fro2 = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let q = &self.chain[a].sqrt_increment * g * &self.chain[b].sqrt_increment;
                let comm = g * &q - &q * g;
                fro2 += comm.norm_squared();
            }
        }

        let wkw = hermitize(&self.compressed_k());
        let min_eig_wkw = SpectralDecomposition::new(&wkw)?.min_eigenvalue();

        Ok(KSystem {
            k,
            p: BlockOp::from_matrix(p, d).unwrap(),
            commutation_residual: fro2.sqrt(),
            min_eig_wkw,
        })
    }

    /// r_n = ‖delta(sqrt(H_n) G^2)‖ for the given levels, each computed by
    /// both derivative engines, plus the fitted log-log slope.
    pub fn decay_profile(&self, ns: &[usize], quad: &QuadratureSpec) -> Result<DecayProfile> {
        let g = self.gram.matrix();
        let d0 = self.context().derivation_generator();
        let d = self.ambient_dim();
        let dg = blockwise_delta(g, d0, d);
        let decomp = &self.gram_decomp;

        let mut rows = Vec::with_capacity(ns.len());
        for &n in ns {
            if n == 0 || n > self.levels() {
                return Err(Error::InvalidSpec(format!(
                    "decay level {n} outside chain length {}",
                    self.levels()
                )));
            }
            let sqrt_h = &self.chain[n - 1].sqrt_increment;
            let nf = n as f64;
            let inv_sqrt_n = decomp.apply(|x| (1.0 + nf * x).powf(-0.5));
            let inv_sqrt_nm1 = decomp.apply(|x| (1.0 + (nf - 1.0) * x).powf(-0.5));

            let term1 = &dg * sqrt_h * g + g * sqrt_h * &dg;

            let spectral_n = calc_derivative_spectral(g, &dg, &ScalarFn::inv_sqrt_shift(nf))?;
            let spectral_terms = if n >= 2 {
                let spectral_nm1 =
                    calc_derivative_spectral(g, &dg, &ScalarFn::inv_sqrt_shift(nf - 1.0))?;
                g * &spectral_n * &inv_sqrt_nm1 * g + g * &inv_sqrt_n * &spectral_nm1 * g
            } else {
                g * &spectral_n * &inv_sqrt_nm1 * g
            };
            let r_spectral = op_norm(&(&term1 + &spectral_terms))?;

            let integral_n = inv_sqrt_derivative_integral(g, &dg, n as u32, quad)?;
            let integral_terms = if n >= 2 {
                let integral_nm1 =
                    inv_sqrt_derivative_integral(g, &dg, (n - 1) as u32, quad)?;
                g * &integral_n * &inv_sqrt_nm1 * g + g * &inv_sqrt_n * &integral_nm1 * g
            } else {
                g * &integral_n * &inv_sqrt_nm1 * g
            };
            let r_integral = op_norm(&(&term1 + &integral_terms))?;

            rows.push(DecayRow {
                n,
                r_spectral,
                r_integral,
            });
        }
        let slope = fit_upper_half_slope(&rows);
        Ok(DecayProfile { rows, slope })
    }

    /// ‖delta(diag(G)^2 (V_{n2} V_{n2}* - V_{n1} V_{n1}*))‖ through a
    /// low-rank factorisation; exact up to rounding, O(levels) memory.
    pub fn diff_compact_tail(&self, n1: usize, n2: usize) -> Result<f64> {
        if !(n1 < n2 && n2 <= self.levels()) {
            return Err(Error::InvalidSpec(format!(
                "tail needs n1 < n2 <= {}, got ({n1}, {n2})",
                self.levels()
            )));
        }
        let g = self.gram.matrix();
        let d0 = self.context().derivation_generator();
        let d = self.ambient_dim();
        let g2 = g * g;

        // T_N = A_N C_N* with level blocks A_n = G^2 sqrt(H_n), C_n = sqrt(H_n) G.
        // delta(T_2 - T_1) = U V* with the eight level stacks below.
        let a_stack: Vec<CMatrix> = (0..n2)
            .map(|i| &g2 * &self.chain[i].sqrt_increment)
            .collect();
        let c_stack: Vec<CMatrix> = (0..n2)
            .map(|i| &self.chain[i].sqrt_increment * g)
            .collect();
        let da_stack: Vec<CMatrix> = a_stack.iter().map(|m| blockwise_delta(m, d0, d)).collect();
        let dc_stack: Vec<CMatrix> = c_stack.iter().map(|m| blockwise_delta(m, d0, d)).collect();

        // groups of (stack, active levels): X = sum_g sign_g A_g C_g*
        let u_groups: [(&[CMatrix], usize); 4] = [
            (&da_stack, n2),
            (&a_stack, n2),
            (&da_stack, n1),
            (&a_stack, n1),
        ];
        let v_groups: [(&[CMatrix], usize, f64); 4] = [
            (&c_stack, n2, 1.0),
            (&dc_stack, n2, -1.0),
            (&c_stack, n1, -1.0),
            (&dc_stack, n1, 1.0),
        ];
        let jd = self.slots() * d;
        let mut r = CMatrix::zeros(4 * jd, 4 * jd);
        let mut s = CMatrix::zeros(4 * jd, 4 * jd);
        for (gi, (ug, ulen)) in u_groups.iter().enumerate() {
            for (gj, (vg, vlen)) in u_groups.iter().enumerate() {
                let mut acc = CMatrix::zeros(jd, jd);
                for lvl in 0..(*ulen).min(*vlen) {
                    acc += ug[lvl].adjoint() * &vg[lvl];
                }
                r.view_mut((gi * jd, gj * jd), (jd, jd)).copy_from(&acc);
            }
        }
        for (gi, (ug, ulen, si)) in v_groups.iter().enumerate() {
            for (gj, (vg, vlen, sj)) in v_groups.iter().enumerate() {
                let mut acc = CMatrix::zeros(jd, jd);
                for lvl in 0..(*ulen).min(*vlen) {
                    acc += ug[lvl].adjoint() * &vg[lvl];
                }
                s.view_mut((gi * jd, gj * jd), (jd, jd))
                    .copy_from(&(acc * cre(si * sj)));
            }
        }
        let s_half = herm_sqrt(&hermitize(&s))?;
        let pencil = hermitize(&(&s_half * hermitize(&r) * &s_half));
        let top = SpectralDecomposition::new(&pencil)?.max_eigenvalue();
        Ok(top.max(0.0).sqrt())
    }

    /// Per-level upper bound sum_{(n,m) new} (r_n g_m + q_n e_m) dominating
    /// the tail norm via block subadditivity.
    pub fn tail_block_bound(&self, n1: usize, n2: usize) -> Result<f64> {
        let g = self.gram.matrix();
        let d0 = self.context().derivation_generator();
        let d = self.ambient_dim();
        let g2 = g * g;
        let mut r = vec![0.0; n2];
        let mut q = vec![0.0; n2];
        let mut gm = vec![0.0; n2];
        let mut em = vec![0.0; n2];
        for i in 0..n2 {
            let a = &g2 * &self.chain[i].sqrt_increment;
            let c = &self.chain[i].sqrt_increment * g;
            r[i] = op_norm(&blockwise_delta(&a, d0, d))?;
            q[i] = op_norm(&a)?;
            gm[i] = op_norm(&c)?;
            em[i] = op_norm(&blockwise_delta(&c, d0, d))?;
        }
        let mut bound = 0.0;
        for n in 0..n2 {
            for m in 0..n2 {
                if n < n1 && m < n1 {
                    continue;
                }
                bound += r[n] * gm[m] + q[n] * em[m];
            }
        }
        Ok(bound)
    }
}

/// K = diag(G), P = W W*, and the certificates of the absorption theorem.
#[derive(Debug, Clone)]
pub struct KSystem {
    pub k: BlockOp,
    pub p: BlockOp,
    /// Frobenius bound on ‖KP - PK‖ (dominates the operator norm).
    pub commutation_residual: f64,
    /// Smallest eigenvalue of W* K W; positive iff G is invertible.
    pub min_eig_wkw: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DecayRow {
    pub n: usize,
    pub r_spectral: f64,
    pub r_integral: f64,
}

#[derive(Debug, Clone)]
pub struct DecayProfile {
    pub rows: Vec<DecayRow>,
    /// Log-log slope fitted over the upper half of the range; None when the
    /// profile is exactly zero.
    pub slope: Option<f64>,
}

impl DecayProfile {
    pub fn is_exact_zero(&self) -> bool {
        self.rows.iter().all(|r| r.r_spectral < 1e-14)
    }

    pub fn max_agreement_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.r_spectral - r.r_integral).abs())
            .fold(0.0, f64::max)
    }
}

fn fit_upper_half_slope(rows: &[DecayRow]) -> Option<f64> {
    let live: Vec<&DecayRow> = rows.iter().filter(|r| r.r_spectral > 1e-14).collect();
    if live.len() < 2 {
        return None;
    }
    let ln_min = (live.first().unwrap().n as f64).ln();
    let ln_max = (live.last().unwrap().n as f64).ln();
    let mid = 0.5 * (ln_min + ln_max);
    let pts: Vec<(f64, f64)> = live
        .iter()
        .filter(|r| (r.n as f64).ln() >= mid - 1e-12)
        .map(|r| ((r.n as f64).ln(), r.r_spectral.ln()))
        .collect();
    let pts = if pts.len() >= 2 {
        pts
    } else {
        live.iter()
            .map(|r| ((r.n as f64).ln(), r.r_spectral.ln()))
            .collect()
    };
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        None
    } else {
        Some(num / den)
    }
}

/// Geometric grid of levels in [lo, hi] with ratio about 2^(1/4); always
/// contains both endpoints.
pub fn geometric_levels(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut x = lo as f64;
    while (x as usize) < hi {
        let n = x.round() as usize;
        if out.last() != Some(&n) {
            out.push(n);
        }
        x *= 2.0f64.powf(0.25);
    }
    if out.last() != Some(&hi) {
        out.push(hi);
    }
    out
}

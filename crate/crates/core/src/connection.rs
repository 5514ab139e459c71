//! The Grassmann connection at truncation: the form algebra generated by the
//! algebra and its derivatives, the smooth submodule Im(W* K^2), the
//! connection itself, and the Leibniz/Hermitian residual checks.
//!
//! Tensors in X (x) Omega are carried in the frame representation: an element
//! sum_k zeta_k (x) w_k is stored as the stack of its slots w_k. The slot
//! stack of the connection value of xi is the frame re-expansion
//! P . delta(W xi); the defect of the Leibniz rule at truncation is exactly
//! (P - 1) acting on the tensor term, which the defect law bounds.

use crate::absorption::AbsorptionSystem;
use crate::algebra::{orthonormalize, AlgebraContext};
use crate::error::{Error, Result};
use crate::matrix::{frobenius, op_norm, CMatrix};

/// The *-subalgebra of M_d generated by the algebra and the image of the
/// derivation; the truncation of the continuous-forms algebra.
#[derive(Debug, Clone)]
pub struct OmegaAlgebra {
    ambient: usize,
    ortho: Vec<CMatrix>,
}

/// Iterated span closure of rho(A) and delta(A) under products and adjoints;
/// stabilises after at most d^2 rounds.
pub fn omega_algebra(ctx: &AlgebraContext) -> OmegaAlgebra {
    let d = ctx.ambient_dim();
    let mut seed: Vec<CMatrix> = ctx.basis().to_vec();
    for b in ctx.basis() {
        let db = ctx.delta_unchecked(b);
        if frobenius(&db) > 1e-14 {
            seed.push(db);
        }
    }
    let mut ortho = orthonormalize(&seed).expect("algebra basis is nonempty");
    for _round in 0..d * d {
        let mut extended = ortho.clone();
        for a in &ortho {
            extended.push(a.adjoint());
            for b in &ortho {
                extended.push(a * b);
            }
        }
        let next = orthonormalize(&extended).expect("closure keeps the span");
        if next.len() == ortho.len() {
            ortho = next;
            break;
        }
        ortho = next;
    }
    OmegaAlgebra { ambient: d, ortho }
}

impl OmegaAlgebra {
    pub fn dim(&self) -> usize {
        self.ortho.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn membership_residual(&self, m: &CMatrix) -> f64 {
        let mut v = m.clone();
        for _ in 0..2 {
            for b in &self.ortho {
                let c = crate::algebra::frob_inner(b, &v);
                v -= b * c;
            }
        }
        frobenius(&v)
    }
}

/// A frame-indexed slot stack representing an element of X (x) Omega.
#[derive(Debug, Clone)]
pub struct ConnectionValue {
    /// (levels * slots * d) x d stack; slot k is the d x d chunk at row k*d.
    slots: CMatrix,
    block: usize,
}

impl ConnectionValue {
    pub fn slot(&self, k: usize) -> CMatrix {
        self.slots
            .view((k * self.block, 0), (self.block, self.block))
            .into()
    }

    pub fn slot_count(&self) -> usize {
        self.slots.nrows() / self.block
    }

    pub fn stack(&self) -> &CMatrix {
        &self.slots
    }

    /// Norm of the slot vector: ‖sum_k slot_k* slot_k‖^(1/2), which is the
    /// operator norm of the stacked matrix.
    pub fn norm(&self) -> Result<f64> {
        op_norm(&self.slots)
    }
}

/// xi = W* K^2 x for a block column x over the algebra; the sampled element
/// of the smooth submodule.
pub fn smooth_sample(sys: &AbsorptionSystem, x: &CMatrix) -> Result<CMatrix> {
    let d = sys.ambient_dim();
    let jd = sys.slots() * d;
    if x.nrows() != sys.levels() * jd || x.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "sample stack must be {} x {d}",
            sys.levels() * jd
        )));
    }
    require_blocks_in_algebra(sys.context(), x)?;
    let g = sys.gram().matrix();
    let g2 = g * g;
    let mut out = CMatrix::zeros(jd, d);
    for (lvl, level) in sys.chain().iter().enumerate() {
        let piece: CMatrix = x.view((lvl * jd, 0), (jd, d)).into();
        out += &level.sqrt_increment * &g2 * piece;
    }
    Ok(out)
}

fn require_blocks_in_algebra(ctx: &AlgebraContext, stack: &CMatrix) -> Result<()> {
    let d = ctx.ambient_dim();
    for k in 0..stack.nrows() / d {
        let b: CMatrix = stack.view((k * d, 0), (d, d)).into();
        let residual = ctx.membership_residual(&b);
        if residual > 1e-8 * (1.0 + frobenius(&b)) {
            return Err(Error::NotInAlgebra {
                residual,
                block: Some((k, 0)),
            });
        }
    }
    Ok(())
}

/// The Grassmann connection value of xi: slots delta(<zeta_k, xi>)
/// re-expanded through the frame, i.e. P . delta(W xi).
pub fn grassmann(sys: &AbsorptionSystem, xi: &CMatrix) -> Result<ConnectionValue> {
    let d = sys.ambient_dim();
    let w_xi = sys.apply_isometry(xi);
    require_blocks_in_algebra(sys.context(), &w_xi)?;
    let raw = crate::block::blockwise_delta(&w_xi, sys.context().derivation_generator(), d);
    let slots = sys.apply_projection(&raw);
    Ok(ConnectionValue { slots, block: d })
}

/// T_eta* applied to a connection value: sum_k <eta, zeta_k> w_k, computed as
/// (W eta)* . slots.
pub fn apply_pairing(sys: &AbsorptionSystem, eta: &CMatrix, value: &ConnectionValue) -> CMatrix {
    sys.apply_isometry(eta).adjoint() * value.stack()
}

/// Norm of the Leibniz defect of the connection at (xi, a):
/// grassmann(xi a) - grassmann(xi) a - xi (x) delta(a).
pub fn leibniz_residual(sys: &AbsorptionSystem, xi: &CMatrix, a: &CMatrix) -> Result<f64> {
    let da = sys.context().derive(a)?;
    let lhs = grassmann(sys, &(xi * a))?;
    let conn = grassmann(sys, xi)?;
    // the elementary tensor xi (x) delta(a) has direct frame slots (W xi) da
    let tensor = sys.apply_isometry(xi) * &da;
    op_norm(&(lhs.stack() - conn.stack() * a - tensor))
}

/// Norm of the Hermitian defect of the connection at (xi, eta):
/// delta(<xi, eta>) - T_xi* grad(eta) + (T_eta* grad(xi))*.
pub fn hermitian_residual(sys: &AbsorptionSystem, xi: &CMatrix, eta: &CMatrix) -> Result<f64> {
    let inner = sys.module_inner(xi, eta);
    let d_inner = sys.context().delta_unchecked(&inner);
    let grad_eta = grassmann(sys, eta)?;
    let grad_xi = grassmann(sys, xi)?;
    let defect =
        d_inner - apply_pairing(sys, xi, &grad_eta) + apply_pairing(sys, eta, &grad_xi).adjoint();
    op_norm(&defect)
}

/// The bound 2 dfct(N) ‖xi‖ ‖a‖_delta kappa(G) from the defect law; None for
/// singular Gram operators.
pub fn leibniz_bound(sys: &AbsorptionSystem, xi: &CMatrix, a: &CMatrix) -> Result<Option<f64>> {
    let kappa = match sys.gram_condition() {
        Some(k) => k,
        None => return Ok(None),
    };
    let norm_xi = sys.module_norm(xi)?;
    let a_delta = sys.context().delta_norm(a)?;
    Ok(Some(2.0 * sys.defect() * norm_xi * a_delta * kappa))
}

/// Same bound shape for the Hermitian defect, with the delta-norm data of the
/// second argument measured through its frame image:
/// 2 dfct(N) ‖xi‖ (‖W eta‖ + ‖delta(W eta)‖) kappa(G).
pub fn hermitian_bound(sys: &AbsorptionSystem, xi: &CMatrix, eta: &CMatrix) -> Result<Option<f64>> {
    let kappa = match sys.gram_condition() {
        Some(k) => k,
        None => return Ok(None),
    };
    let norm_xi = sys.module_norm(xi)?;
    let w_eta = sys.apply_isometry(eta);
    let d_w_eta =
        crate::block::blockwise_delta(&w_eta, sys.context().derivation_generator(), sys.ambient_dim());
    let eta_delta = op_norm(&w_eta)? + op_norm(&d_w_eta)?;
    Ok(Some(2.0 * sys.defect() * norm_xi * eta_delta * kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorption::build_isometry;
    use crate::algebra::{builtin_instance, InstanceSpec};
    use crate::matrix::{cre, identity, op_norm};
    use crate::presentation::ModulePresentation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rescaled(spec: &InstanceSpec) -> ModulePresentation {
        let (_, pres) = builtin_instance(spec).unwrap();
        pres.rescale().unwrap().0
    }

    fn random_stack(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            crate::matrix::C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn omega_of_trivial_derivation_is_the_algebra() {
        let (ctx, _) = builtin_instance(&InstanceSpec::Scalar { scale: 1.0 }).unwrap();
        let omega = omega_algebra(&ctx);
        assert_eq!(omega.dim(), ctx.span_dim());
    }

    #[test]
    fn omega_of_pauli_saturates_at_four() {
        let (ctx, _) = builtin_instance(&InstanceSpec::Pauli).unwrap();
        let omega = omega_algebra(&ctx);
        assert_eq!(omega.dim(), 4);
    }

    #[test]
    fn omega_closure_is_idempotent_and_contains_products() {
        let (ctx, _) = builtin_instance(&InstanceSpec::ClockShift { dim: 3 }).unwrap();
        let omega = omega_algebra(&ctx);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let mut a = CMatrix::zeros(3, 3);
            let mut b = CMatrix::zeros(3, 3);
            for base in ctx.basis() {
                a += base * crate::matrix::C64::new(rng.gen_range(-1.0..1.0), 0.0);
                b += base * crate::matrix::C64::new(rng.gen_range(-1.0..1.0), 0.0);
            }
            let prod = &a * ctx.delta_unchecked(&b);
            assert!(omega.membership_residual(&prod) <= 1e-10 * (1.0 + prod.norm()));
        }
    }

    #[test]
    fn omega_on_proper_subalgebra_grows_beyond_it() {
        // diagonal algebra with an off-diagonal derivation generator
        let basis = vec![
            crate::matrix::matrix_unit(2, 0, 0),
            crate::matrix::matrix_unit(2, 1, 1),
        ];
        let mut d0 = CMatrix::zeros(2, 2);
        d0[(0, 1)] = cre(1.0);
        d0[(1, 0)] = cre(1.0);
        let ctx = crate::algebra::AlgebraContext::new("diag", basis, d0).unwrap();
        let omega = omega_algebra(&ctx);
        assert!(omega.dim() > ctx.span_dim());
    }

    #[test]
    fn smooth_sample_zero_is_zero() {
        let pres = rescaled(&InstanceSpec::Pauli);
        let sys = build_isometry(&pres, 6).unwrap();
        let jd = sys.slots() * sys.ambient_dim();
        let x = CMatrix::zeros(sys.levels() * jd, sys.ambient_dim());
        let xi = smooth_sample(&sys, &x).unwrap();
        assert!(op_norm(&xi).unwrap() < 1e-15);
    }

    #[test]
    fn smooth_density_certificate_for_invertible_gram() {
        let pres = rescaled(&InstanceSpec::Pauli);
        let sys = build_isometry(&pres, 12).unwrap();
        let wk2w = crate::matrix::hermitize(&sys.compressed_k_squared());
        let min = crate::matrix::SpectralDecomposition::new(&wk2w)
            .unwrap()
            .min_eigenvalue();
        assert!(min > 1e-8);
    }

    #[test]
    fn sampled_inner_products_stay_in_algebra() {
        let pres = rescaled(&InstanceSpec::ClockShift { dim: 3 });
        let sys = build_isometry(&pres, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let jd = sys.slots() * sys.ambient_dim();
        let x = random_stack(&mut rng, sys.levels() * jd, sys.ambient_dim());
        let xi = smooth_sample(&sys, &x).unwrap();
        let inner = sys.module_inner(&xi, &xi);
        let residual = sys.context().membership_residual(&inner);
        assert!(residual <= 1e-8 * (1.0 + inner.norm()));
        // W(xi) has every block in the algebra
        require_blocks_in_algebra(sys.context(), &sys.apply_isometry(&xi)).unwrap();
    }

    #[test]
    fn grassmann_vanishes_without_derivation() {
        let pres = rescaled(&InstanceSpec::Scalar { scale: 1.0 });
        let sys = build_isometry(&pres, 8).unwrap();
        let xi = CMatrix::from_element(1, 1, cre(0.7));
        let value = grassmann(&sys, &xi).unwrap();
        assert!(value.norm().unwrap() < 1e-14);
    }

    #[test]
    fn grassmann_matches_alternate_evaluation_order() {
        // primary path: P delta(W xi); alternate: W (W* delta(W xi))
        // computed through the frame vectors one slot at a time
        let pres = rescaled(&InstanceSpec::Pauli);
        let sys = build_isometry(&pres, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let jd = sys.slots() * sys.ambient_dim();
        let xi = random_stack(&mut rng, jd, sys.ambient_dim());
        let value = grassmann(&sys, &xi).unwrap();

        let d = sys.ambient_dim();
        let raw = crate::block::blockwise_delta(
            &sys.apply_isometry(&xi),
            sys.context().derivation_generator(),
            d,
        );
        // tensor (W* (x) 1) raw = sum_k zeta_k (x) raw_k; its slot j is
        // sum_k <zeta_j, zeta_k> raw_k
        let mut slots = CMatrix::zeros(sys.pairing().len() * d, d);
        for j in 0..sys.pairing().len() {
            let zeta_j = sys.zeta(j);
            let mut acc = CMatrix::zeros(d, d);
            for k in 0..sys.pairing().len() {
                let raw_k: CMatrix = raw.view((k * d, 0), (d, d)).into();
                acc += sys.module_inner(&zeta_j, &sys.zeta(k)) * raw_k;
            }
            slots.view_mut((j * d, 0), (d, d)).copy_from(&acc);
        }
        assert!((value.stack() - &slots).norm() <= 1e-12 * (1.0 + slots.norm()));
    }

    #[test]
    fn grassmann_is_linear() {
        let pres = rescaled(&InstanceSpec::Pauli);
        let sys = build_isometry(&pres, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let jd = sys.slots() * sys.ambient_dim();
        let a = random_stack(&mut rng, jd, sys.ambient_dim());
        let b = random_stack(&mut rng, jd, sys.ambient_dim());
        let va = grassmann(&sys, &a).unwrap();
        let vb = grassmann(&sys, &b).unwrap();
        let vsum = grassmann(&sys, &(&a * cre(2.0) + &b)).unwrap();
        let gap = (va.stack() * cre(2.0) + vb.stack() - vsum.stack()).norm();
        assert!(gap < 1e-12 * (1.0 + vsum.stack().norm()));
    }

    #[test]
    fn leibniz_residual_tiny_for_identity_action() {
        let pres = rescaled(&InstanceSpec::Pauli);
        let sys = build_isometry(&pres, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let jd = sys.slots() * sys.ambient_dim();
        let xi = random_stack(&mut rng, jd, sys.ambient_dim());
        let r = leibniz_residual(&sys, &xi, &identity(2)).unwrap();
        assert!(r <= 1e-12);
    }

    #[test]
    fn leibniz_residual_equals_projection_defect_on_tensor_term() {
        // the only defect source is (P - 1) acting on xi (x) delta(a)
        let pres = rescaled(&InstanceSpec::Pauli);
        let sys = build_isometry(&pres, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let jd = sys.slots() * sys.ambient_dim();
        let xi = random_stack(&mut rng, jd, sys.ambient_dim());
        let a = crate::matrix::hermitize(&random_stack(&mut rng, 2, 2));
        let residual = leibniz_residual(&sys, &xi, &a).unwrap();
        let da = sys.context().derive(&a).unwrap();
        let tensor = sys.apply_isometry(&xi) * &da;
        let oracle = op_norm(&(sys.apply_projection(&tensor) - &tensor)).unwrap();
        assert!((residual - oracle).abs() <= 1e-11 * (1.0 + oracle));
    }

    #[test]
    fn residuals_vanish_for_trivial_derivation() {
        let pres = rescaled(&InstanceSpec::Scalar { scale: 1.0 });
        let sys = build_isometry(&pres, 8).unwrap();
        let xi = CMatrix::from_element(1, 1, cre(0.9));
        let eta = CMatrix::from_element(1, 1, cre(-0.4));
        let a = CMatrix::from_element(1, 1, cre(0.3));
        assert!(leibniz_residual(&sys, &xi, &a).unwrap() <= 1e-12);
        assert!(hermitian_residual(&sys, &xi, &eta).unwrap() <= 1e-12);
    }

    #[test]
    fn hermitian_residual_zero_probe() {
        let pres = rescaled(&InstanceSpec::Pauli);
        let sys = build_isometry(&pres, 8).unwrap();
        let jd = sys.slots() * sys.ambient_dim();
        let zero = CMatrix::zeros(jd, sys.ambient_dim());
        assert!(hermitian_residual(&sys, &zero, &zero).unwrap() == 0.0);
    }

    #[test]
    fn leibniz_residual_times_n_stays_bounded() {
        // residual ~ c/N: the product residual*N converges from below, so the
        // value measured at N = 8 bounds the range up to a 1.25 margin
        let pres = rescaled(&InstanceSpec::Pauli);
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let a = crate::matrix::hermitize(&random_stack(&mut rng, 2, 2));
        let mut reference = 0.0f64;
        for n in [8usize, 16, 32, 64, 128] {
            let sys = build_isometry(&pres, n).unwrap();
            let jd = sys.slots() * sys.ambient_dim();
            let mut x = CMatrix::zeros(sys.levels() * jd, sys.ambient_dim());
            for i in 0..jd {
                x[(i, i % sys.ambient_dim())] = cre(1.0 + i as f64 * 0.25);
            }
            let xi = smooth_sample(&sys, &x).unwrap();
            let weighted = leibniz_residual(&sys, &xi, &a).unwrap() * n as f64;
            if n == 8 {
                reference = weighted;
            } else {
                assert!(weighted <= 1.25 * reference, "N={n}: {weighted} vs {reference}");
            }
        }
    }

    #[test]
    fn residuals_respect_bound_and_decrease_on_pauli() {
        let pres = rescaled(&InstanceSpec::Pauli);
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let a = crate::matrix::hermitize(&random_stack(&mut rng, 2, 2));
        // fixed level-one sample so xi is identical across truncations
        let mut prev_l = f64::INFINITY;
        let mut prev_h = f64::INFINITY;
        for n in [8usize, 16, 32, 64] {
            let sys = build_isometry(&pres, n).unwrap();
            let jd = sys.slots() * sys.ambient_dim();
            let mut x = CMatrix::zeros(sys.levels() * jd, sys.ambient_dim());
            for i in 0..jd {
                x[(i, i % sys.ambient_dim())] = cre(1.0 + i as f64 * 0.25);
            }
            let xi = smooth_sample(&sys, &x).unwrap();
            let eta = xi.clone() * cre(0.5);
            let l = leibniz_residual(&sys, &xi, &a).unwrap();
            let h = hermitian_residual(&sys, &xi, &eta).unwrap();
            let lb = leibniz_bound(&sys, &xi, &a).unwrap().unwrap();
            let hb = hermitian_bound(&sys, &xi, &eta).unwrap().unwrap();
            assert!(l <= lb, "N={n}: leibniz {l:.3e} above bound {lb:.3e}");
            assert!(h <= hb, "N={n}: hermitian {h:.3e} above bound {hb:.3e}");
            assert!(l < prev_l, "leibniz residual must decrease");
            assert!(h <= prev_h + 1e-15, "hermitian residual must decrease");
            prev_l = l;
            prev_h = h;
        }
    }
}

//! Algebra contexts: a *-subalgebra of M_d(C) together with the commutator
//! derivation delta(a) = [D0, a] for a fixed Hermitian D0, the delta-norm,
//! and the catalog of built-in instances.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{cre, frobenius, hermitian_defect, identity, matrix_unit, op_norm, CMatrix};
use crate::presentation::ModulePresentation;

const MEMBERSHIP_TOL: f64 = 1e-8;

/// A *-subalgebra of M_d(C) with derivation generator D0.
///
/// `basis` spans the algebra; membership is measured as the Frobenius
/// distance to the span. The derivation is always of commutator form, which
/// makes delta(a*) = -delta(a)* automatic; closedness is trivial in finite
/// dimensions.
#[derive(Debug, Clone)]
pub struct AlgebraContext {
    name: String,
    dim: usize,
    basis: Vec<CMatrix>,
    ortho: Vec<CMatrix>,
    d0: CMatrix,
}

impl AlgebraContext {
    pub fn new(name: &str, basis: Vec<CMatrix>, d0: CMatrix) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidSpec("algebra basis is empty".into()));
        }
        let dim = d0.nrows();
        if d0.ncols() != dim || dim == 0 {
            return Err(Error::InvalidSpec("D0 must be square and non-empty".into()));
        }
        for (k, b) in basis.iter().enumerate() {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::InvalidSpec(format!(
                    "basis element {k} is {}x{}, ambient dimension is {dim}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        let d0_defect = hermitian_defect(&d0);
        if d0_defect > 1e-12 * (1.0 + frobenius(&d0)) {
            return Err(Error::NotHermitian { defect: d0_defect });
        }
        let ortho = orthonormalize(&basis)
            .ok_or_else(|| Error::InvalidSpec("algebra basis has rank zero".into()))?;
        let ctx = AlgebraContext {
            name: name.to_string(),
            dim,
            basis,
            ortho,
            d0,
        };
        ctx.check_closure()?;
        Ok(ctx)
    }

    fn check_closure(&self) -> Result<()> {
        for a in &self.basis {
            let r = self.membership_residual(&a.adjoint());
            if r > 1e-10 * (1.0 + frobenius(a)) {
                return Err(Error::NotInAlgebra {
                    residual: r,
                    block: None,
                });
            }
            // antisymmetry delta(a*) = -delta(a)*, automatic for commutators
            let lhs = self.delta_unchecked(&a.adjoint());
            let rhs = -self.delta_unchecked(a).adjoint();
            if frobenius(&(lhs - rhs)) > 1e-12 * (1.0 + frobenius(a) * frobenius(&self.d0)) {
                return Err(Error::Numeric("derivation antisymmetry failed".into()));
            }
        }
        for a in &self.basis {
            for b in &self.basis {
                let p = a * b;
                let r = self.membership_residual(&p);
                if r > 1e-10 * (1.0 + frobenius(&p)) {
                    return Err(Error::NotInAlgebra {
                        residual: r,
                        block: None,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Linear dimension of the algebra as a complex vector space.
    pub fn span_dim(&self) -> usize {
        self.ortho.len()
    }

    pub fn derivation_generator(&self) -> &CMatrix {
        &self.d0
    }

    /// Frobenius-orthogonal projection of m onto the span of the basis.
    pub fn project(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for b in &self.ortho {
            let coeff = frob_inner(b, m);
            out += b * coeff;
        }
        out
    }

    /// Frobenius distance of m to the algebra span.
    pub fn membership_residual(&self, m: &CMatrix) -> f64 {
        frobenius(&(m - self.project(m)))
    }

    fn require_member(&self, a: &CMatrix) -> Result<()> {
        let residual = self.membership_residual(a);
        if residual > MEMBERSHIP_TOL * (1.0 + frobenius(a)) {
            return Err(Error::NotInAlgebra {
                residual,
                block: None,
            });
        }
        Ok(())
    }

    /// delta(a) = D0 a - a D0 for a in the algebra.
    pub fn derive(&self, a: &CMatrix) -> Result<CMatrix> {
        self.require_member(a)?;
        Ok(self.delta_unchecked(a))
    }

    /// The commutator extension of delta to all of M_d; used on blocks of
    /// chain operators, which live in the closure rather than the span.
    pub fn delta_unchecked(&self, m: &CMatrix) -> CMatrix {
        &self.d0 * m - m * &self.d0
    }

    /// ‖a‖ + ‖delta(a)‖.
    pub fn delta_norm(&self, a: &CMatrix) -> Result<f64> {
        self.require_member(a)?;
        Ok(op_norm(a)? + op_norm(&self.delta_unchecked(a))?)
    }

    /// delta-norm through the commutator extension, no membership check.
    pub fn delta_norm_unchecked(&self, m: &CMatrix) -> Result<f64> {
        Ok(op_norm(m)? + op_norm(&self.delta_unchecked(m))?)
    }
}

pub(crate) fn frob_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        s += x.conj() * y;
    }
    s
}

/// Modified Gram-Schmidt with reorthogonalisation over the Frobenius inner
/// product. Near-dependent directions are dropped.
pub(crate) fn orthonormalize(mats: &[CMatrix]) -> Option<Vec<CMatrix>> {
    let mut ortho: Vec<CMatrix> = Vec::new();
    for m in mats {
        let mut v = m.clone();
        for _ in 0..2 {
            for b in &ortho {
                let c = frob_inner(b, &v);
                v -= b * c;
            }
        }
        let n = frobenius(&v);
        if n > 1e-10 * (1.0 + frobenius(m)) {
            ortho.push(v / cre(n));
        }
    }
    if ortho.is_empty() {
        None
    } else {
        Some(ortho)
    }
}

/// Selector for the built-in instance catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    /// d = 1, trivial derivation, one generator of the given scale.
    Scalar { scale: f64 },
    /// d = 2, D0 = diag(1,-1), full M_2, two generators in free rank two.
    Pauli,
    /// Full M_d spanned by clock-shift monomials, D0 = diag(0..d-1),
    /// four generators in free rank two.
    ClockShift { dim: usize },
    /// X = p A^m for a non-trivial projection p; the Gram operator is
    /// singular by construction.
    Projective { dim: usize },
}

impl InstanceSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.find('(') {
            Some(i) => {
                if !s.ends_with(')') {
                    return Err(Error::InvalidSpec(format!("malformed instance `{s}`")));
                }
                (&s[..i], Some(&s[i + 1..s.len() - 1]))
            }
            None => (s, None),
        };
        match head {
            "scalar" => {
                let scale = match arg {
                    None => 1.0,
                    Some(a) => a
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidSpec(format!("bad scalar scale `{a}`")))?,
                };
                if scale <= 0.0 {
                    return Err(Error::InvalidSpec("scalar scale must be positive".into()));
                }
                Ok(InstanceSpec::Scalar { scale })
            }
            "pauli" => Ok(InstanceSpec::Pauli),
            "clockshift" => {
                let dim = parse_dim(arg)?;
                if dim < 2 {
                    return Err(Error::InvalidSpec("clockshift needs dimension >= 2".into()));
                }
                Ok(InstanceSpec::ClockShift { dim })
            }
            "projective" => {
                let dim = parse_dim(arg)?;
                if dim < 2 {
                    return Err(Error::InvalidSpec("projective needs dimension >= 2".into()));
                }
                Ok(InstanceSpec::Projective { dim })
            }
            other => Err(Error::InvalidSpec(format!("unknown instance kind `{other}`"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            InstanceSpec::Scalar { scale } if (*scale - 1.0).abs() < 1e-15 => "scalar".into(),
            InstanceSpec::Scalar { scale } => format!("scalar({scale})"),
            InstanceSpec::Pauli => "pauli".into(),
            InstanceSpec::ClockShift { dim } => format!("clockshift({dim})"),
            InstanceSpec::Projective { dim } => format!("projective({dim})"),
        }
    }
}

fn parse_dim(arg: Option<&str>) -> Result<usize> {
    match arg {
        Some(a) => a
            .parse::<usize>()
            .map_err(|_| Error::InvalidSpec(format!("bad dimension `{a}`"))),
        None => Err(Error::InvalidSpec("missing dimension argument".into())),
    }
}

/// The fixed catalog used by the experiment runner and the acceptance suite.
pub fn builtin_suite() -> Vec<InstanceSpec> {
    vec![
        InstanceSpec::Scalar { scale: 1.0 },
        InstanceSpec::Pauli,
        InstanceSpec::ClockShift { dim: 8 },
        InstanceSpec::Projective { dim: 4 },
    ]
}

/// Construct a catalog instance: the algebra context and an (unrescaled)
/// module presentation satisfying all presentation invariants.
pub fn builtin_instance(spec: &InstanceSpec) -> Result<(AlgebraContext, ModulePresentation)> {
    match spec {
        InstanceSpec::Scalar { scale } => {
            let ctx = AlgebraContext::new("scalar", vec![identity(1)], CMatrix::zeros(1, 1))?;
            let gens = vec![vec![identity(1) * cre(*scale)]];
            let pres = ModulePresentation::new(ctx.clone(), 1, gens)?;
            Ok((ctx, pres))
        }
        InstanceSpec::Pauli => {
            let (sx, sy, sz) = pauli_matrices();
            let mut d0 = CMatrix::zeros(2, 2);
            d0[(0, 0)] = cre(1.0);
            d0[(1, 1)] = cre(-1.0);
            let basis = vec![identity(2), sx.clone(), sy.clone(), sz.clone()];
            let ctx = AlgebraContext::new("pauli", basis, d0)?;
            // Diagonal Gram blocks are exactly 1 in delta-norm, so the
            // rescale constant is 1; the coupling block carries the
            // derivation content.
            let (p, q) = (0.2, (1.0f64 - 0.04).sqrt());
            let (r, s) = (0.99, (1.0f64 - 0.9801).sqrt());
            let gens = vec![
                vec![identity(2) * cre(p), sx * cre(q)],
                vec![sy * cre(r), sz * cre(s)],
            ];
            let pres = ModulePresentation::new(ctx.clone(), 2, gens)?;
            Ok((ctx, pres))
        }
        InstanceSpec::ClockShift { dim } => {
            let d = *dim;
            let u = clock(d);
            let v = shift(d);
            let mut basis = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    basis.push(power(&u, a) * power(&v, b));
                }
            }
            let d0 = CMatrix::from_fn(d, d, |i, j| if i == j { cre(i as f64) } else { cre(0.0) });
            let ctx = AlgebraContext::new(&format!("clockshift({d})"), basis, d0)?;
            // Slot-disjoint generators keep every diagonal Gram block a
            // multiple of the identity; couplings to the slow-decaying
            // generators are derivation-free by arrangement.
            let (a, b) = (0.12, (1.0f64 - 0.12 * 0.12).sqrt());
            let (t, w) = (0.8, 0.9);
            let zero = CMatrix::zeros(d, d);
            let gens = vec![
                vec![v.clone(), zero.clone()],
                vec![&u * cre(a), &v * &v * cre(b)],
                vec![&v * &u * cre(t), zero.clone()],
                vec![zero, &v * &v * &u * cre(w)],
            ];
            let pres = ModulePresentation::new(ctx.clone(), 2, gens)?;
            Ok((ctx, pres))
        }
        InstanceSpec::Projective { dim } => {
            let d = *dim;
            let mut basis = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    basis.push(matrix_unit(d, i, j));
                }
            }
            let d0 = CMatrix::from_fn(d, d, |i, j| if i == j { cre(i as f64) } else { cre(0.0) });
            let ctx = AlgebraContext::new(&format!("projective({d})"), basis, d0)?;
            // p = (1 + F)/2 for the pair-flip involution F; p does not
            // commute with D0, so the Gram operator has derivation content.
            let mut flip = CMatrix::zeros(d, d);
            let mut i = 0;
            while i + 1 < d {
                flip[(i, i + 1)] = cre(1.0);
                flip[(i + 1, i)] = cre(1.0);
                i += 2;
            }
            if d % 2 == 1 {
                flip[(d - 1, d - 1)] = cre(1.0);
            }
            let p = (identity(d) + flip) * cre(0.5);
            let zero = CMatrix::zeros(d, d);
            let gens = vec![vec![p.clone(), zero.clone()], vec![zero, p]];
            let pres = ModulePresentation::new(ctx.clone(), 2, gens)?;
            Ok((ctx, pres))
        }
    }
}

/// Single-generator presentation with identity Gram over full M_d and
/// D0 = diag(1, -1, 1, ...). Already rescaled (the delta-norm of the Gram
/// entry is exactly 1), with dfct(N) = 1/(N+1) in closed form.
pub fn identity_instance(d: usize) -> Result<(AlgebraContext, ModulePresentation)> {
    if d == 0 {
        return Err(Error::InvalidSpec("dimension must be positive".into()));
    }
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            basis.push(matrix_unit(d, i, j));
        }
    }
    let d0 = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            cre(if i % 2 == 0 { 1.0 } else { -1.0 })
        } else {
            cre(0.0)
        }
    });
    let ctx = AlgebraContext::new(&format!("identity({d})"), basis, d0)?;
    let pres = ModulePresentation::new(ctx.clone(), 1, vec![vec![identity(d)]])?;
    Ok((ctx, pres))
}

fn pauli_matrices() -> (CMatrix, CMatrix, CMatrix) {
    let mut sx = CMatrix::zeros(2, 2);
    sx[(0, 1)] = cre(1.0);
    sx[(1, 0)] = cre(1.0);
    let mut sy = CMatrix::zeros(2, 2);
    sy[(0, 1)] = Complex64::new(0.0, -1.0);
    sy[(1, 0)] = Complex64::new(0.0, 1.0);
    let mut sz = CMatrix::zeros(2, 2);
    sz[(0, 0)] = cre(1.0);
    sz[(1, 1)] = cre(-1.0);
    (sx, sy, sz)
}

/// Clock matrix diag(1, w, ..., w^{d-1}) for w = exp(2 pi i / d).
pub fn clock(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / d as f64)
        } else {
            cre(0.0)
        }
    })
}

/// Cyclic shift e_j -> e_{j+1 mod d}.
pub fn shift(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| {
        if i == (j + 1) % d {
            cre(1.0)
        } else {
            cre(0.0)
        }
    })
}

fn power(m: &CMatrix, k: usize) -> CMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_member(ctx: &AlgebraContext, rng: &mut impl Rng) -> CMatrix {
        let mut m = CMatrix::zeros(ctx.ambient_dim(), ctx.ambient_dim());
        for b in ctx.basis() {
            m += b * Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        m
    }

    #[test]
    fn identity_commutes() {
        let (ctx, _) = builtin_instance(&InstanceSpec::Pauli).unwrap();
        let d = ctx.derive(&identity(2)).unwrap();
        assert!(op_norm(&d).unwrap() < 1e-15);
        assert!((ctx.delta_norm(&identity(2)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_e12_commutator() {
        let (ctx, _) = builtin_instance(&InstanceSpec::Pauli).unwrap();
        let e12 = matrix_unit(2, 0, 1);
        let d = ctx.derive(&e12).unwrap();
        assert!(op_norm(&(&d - &(e12.clone() * cre(2.0)))).unwrap() < 1e-14);
        // ‖e12‖_delta = 1 + 2
        assert!((ctx.delta_norm(&e12).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn derive_rejects_non_members() {
        let basis = vec![identity(2)];
        let ctx = AlgebraContext::new("diag", basis, CMatrix::zeros(2, 2)).unwrap();
        let outside = matrix_unit(2, 0, 1);
        assert!(matches!(
            ctx.derive(&outside),
            Err(Error::NotInAlgebra { .. })
        ));
    }

    #[test]
    fn antisymmetry_on_random_clockshift_elements() {
        let (ctx, _) = builtin_instance(&InstanceSpec::ClockShift { dim: 4 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = random_member(&ctx, &mut rng);
            let lhs = ctx.derive(&a.adjoint()).unwrap();
            let rhs = -ctx.derive(&a).unwrap().adjoint();
            assert!(op_norm(&(lhs - rhs)).unwrap() <= 1e-12 * (1.0 + frobenius(&a)));
        }
    }

    #[test]
    fn leibniz_rule_for_commutator() {
        let (ctx, _) = builtin_instance(&InstanceSpec::ClockShift { dim: 3 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_member(&ctx, &mut rng);
            let b = random_member(&ctx, &mut rng);
            let lhs = ctx.derive(&(&a * &b)).unwrap();
            let rhs = ctx.derive(&a).unwrap() * &b + &a * ctx.derive(&b).unwrap();
            let scale = 1.0 + frobenius(&a) * frobenius(&b);
            assert!(op_norm(&(lhs - rhs)).unwrap() <= 1e-12 * scale * 10.0);
        }
    }

    #[test]
    fn delta_norm_is_submultiplicative_and_star_invariant() {
        let (ctx, _) = builtin_instance(&InstanceSpec::Pauli).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = random_member(&ctx, &mut rng);
            let b = random_member(&ctx, &mut rng);
            let nab = ctx.delta_norm(&(&a * &b)).unwrap();
            let na = ctx.delta_norm(&a).unwrap();
            let nb = ctx.delta_norm(&b).unwrap();
            assert!(nab <= na * nb + 1e-10);
            assert!((ctx.delta_norm(&a.adjoint()).unwrap() - na).abs() <= 1e-12 * (1.0 + na));
        }
    }

    #[test]
    fn instance_parsing_roundtrip() {
        for s in ["scalar", "scalar(2)", "pauli", "clockshift(8)", "projective(4)"] {
            let spec = InstanceSpec::parse(s).unwrap();
            assert_eq!(InstanceSpec::parse(&spec.name()).unwrap(), spec);
        }
        assert!(InstanceSpec::parse("torus").is_err());
        assert!(InstanceSpec::parse("clockshift(1)").is_err());
        assert!(InstanceSpec::parse("clockshift").is_err());
    }

    #[test]
    fn clockshift_basis_spans_full_matrix_algebra() {
        let (ctx, _) = builtin_instance(&InstanceSpec::ClockShift { dim: 5 }).unwrap();
        assert_eq!(ctx.span_dim(), 25);
    }
}

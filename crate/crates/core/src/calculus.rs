//! Derivatives of functional calculus: the divided-difference (Daleckii-Krein)
//! engine and the resolvent-integral engine for f(x) = (1 + n x)^(-1/2).
//!
//! Both compute the derivative of f(G) along a perturbation dG of a Hermitian
//! matrix G. They are kept independent so each can serve as an oracle for the
//! other.

use crate::error::{Error, Result};
use crate::matrix::{cre, op_norm, CMatrix, SpectralDecomposition};

/// A scalar function with derivative and an optional closed domain interval.
pub struct ScalarFn {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    df: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    domain: Option<(f64, f64)>,
}

impl ScalarFn {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFn {
            f: Box::new(f),
            df: Box::new(df),
            domain: None,
        }
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = Some((lo, hi));
        self
    }

    pub fn identity() -> Self {
        ScalarFn::new(|x| x, |_| 1.0)
    }

    /// sqrt on [0, inf); slightly negative inputs are outside the domain.
    pub fn sqrt() -> Self {
        ScalarFn::new(f64::sqrt, |x| 0.5 / x.sqrt()).with_domain(0.0, f64::INFINITY)
    }

    /// x -> (1 + n x)^(-1/2) on (-1/n, inf); defined for any real n > 0.
    pub fn inv_sqrt_shift(n: f64) -> Self {
        ScalarFn::new(
            move |x| (1.0 + n * x).powf(-0.5),
            move |x| -0.5 * n * (1.0 + n * x).powf(-1.5),
        )
        .with_domain(-1.0 / n + f64::EPSILON, f64::INFINITY)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok((self.f)(x))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok((self.df)(x))
    }

    fn check(&self, x: f64) -> Result<()> {
        if let Some((lo, hi)) = self.domain {
            if x < lo || x > hi {
                return Err(Error::OutOfDomain { point: x });
            }
        }
        Ok(())
    }
}

/// Derivative of G -> f(G) along dG through divided differences.
///
/// In the eigenbasis of G, entry (i,j) is (f(l_i)-f(l_j))/(l_i-l_j) times the
/// transformed perturbation; pairs closer than 1e-10*(1+‖G‖) use f' at the
/// mean eigenvalue.
pub fn calc_derivative_spectral(g: &CMatrix, dg: &CMatrix, f: &ScalarFn) -> Result<CMatrix> {
    if g.nrows() != dg.nrows() || g.ncols() != dg.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "G is {}x{}, dG is {}x{}",
            g.nrows(),
            g.ncols(),
            dg.nrows(),
            dg.ncols()
        )));
    }
    let decomp = SpectralDecomposition::new(g)?;
    let n = decomp.dim();
    let close = 1e-10 * (1.0 + op_norm(g)?);
    let mut values = Vec::with_capacity(n);
    for &l in &decomp.eigenvalues {
        values.push(f.eval(l)?);
    }
    let mut kernel = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (decomp.eigenvalues[i], decomp.eigenvalues[j]);
            let k = if (li - lj).abs() <= close {
                f.deriv(0.5 * (li + lj))?
            } else {
                (values[i] - values[j]) / (li - lj)
            };
            kernel[(i, j)] = cre(k);
        }
    }
    let dg_eig = decomp.into_eigenbasis(dg);
    let scaled = dg_eig.zip_map(&kernel, |d, k| d * k);
    Ok(decomp.out_of_eigenbasis(&scaled))
}

/// Node-count policy for the resolvent-integral engine.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Refinement stops when successive values differ by less than this.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            initial_nodes: 32,
            max_nodes: 1024,
            tol: 1e-10,
        }
    }
}

/// Derivative of G -> (1 + n G)^(-1/2) along dG via
///   -(n/pi) * Int_0^inf l^(-1/2) (1+l+nG)^(-1) dG (1+l+nG)^(-1) dl.
///
/// The substitution l = tan^2(t) maps (0,inf) to (0,pi/2) and removes both the
/// endpoint singularity and the tail; Gauss-Legendre nodes are then doubled
/// until two refinements agree.
pub fn inv_sqrt_derivative_integral(
    g: &CMatrix,
    dg: &CMatrix,
    n: u32,
    quad: &QuadratureSpec,
) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidSpec("integral engine needs n >= 1".into()));
    }
    if g.nrows() != dg.nrows() || g.ncols() != dg.ncols() {
        return Err(Error::ShapeMismatch("G and dG differ".into()));
    }
    let d = g.nrows();
    if d == 0 {
        return Err(Error::EmptyMatrix);
    }
    let nf = n as f64;

    let evaluate = |nodes: usize| -> Result<CMatrix> {
        let (xs, ws) = gauss_legendre(nodes);
        let mut acc = CMatrix::zeros(d, d);
        for (&x, &w) in xs.iter().zip(ws.iter()) {
            // map [-1,1] -> (0, pi/2)
            let theta = 0.25 * std::f64::consts::PI * (x + 1.0);
            let jac = 0.25 * std::f64::consts::PI;
            let tan = theta.tan();
            let lambda = tan * tan;
            let sec2 = 1.0 / (theta.cos() * theta.cos());
            let shifted = g * cre(nf) + CMatrix::identity(d, d) * cre(1.0 + lambda);
            let resolvent = shifted
                .lu()
                .try_inverse()
                .ok_or_else(|| Error::Numeric("resolvent inversion in quadrature".into()))?;
            // l^(-1/2) dl = 2 sec^2(t) dt after the substitution
            acc += &resolvent * dg * &resolvent * cre(w * jac * 2.0 * sec2);
        }
        Ok(acc * cre(-nf / std::f64::consts::PI))
    };

    let mut nodes = quad.initial_nodes.max(4);
    let mut prev = evaluate(nodes)?;
    let mut prev_diff = f64::INFINITY;
    while nodes * 2 <= quad.max_nodes {
        nodes *= 2;
        let next = evaluate(nodes)?;
        let diff = (&next - &prev).norm();
        if diff < quad.tol {
            return Ok(next);
        }
        prev = next;
        prev_diff = diff;
    }
    let last = evaluate(nodes)?;
    let last_diff = (&last - &prev).norm();
    if last_diff < quad.tol {
        Ok(last)
    } else {
        Err(Error::QuadratureDiverged {
            last_diff,
            prev_diff,
        })
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

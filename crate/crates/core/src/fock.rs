//! Truncated Moyal algebra in the matrix base.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{Derivative, LadderOp, LadderTables, XtildeMode};

/// Exponents of the weighted coefficient norm `‖·‖_{s,t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub t: f64,
}

impl NormSpec {
    pub fn new(s: f64, t: f64) -> Self {
        NormSpec { s, t }
    }

    /// Index pair of the Fréchet seminorm `ρ_k = ‖·‖_{k,k}`.
    pub fn rho(k: i32) -> Self {
        NormSpec { s: k as f64, t: k as f64 }
    }
}

/// An algebra element `a = Σ a_mn f_mn` with `m, n < N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedElement {
    theta: f64,
    coeffs: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct ElementWire {
    theta: f64,
    trunc: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TruncatedElement {
    pub fn new(theta: f64, coeffs: DMatrix<Complex64>) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Domain(format!("theta must be positive, got {theta}")));
        }
        if coeffs.nrows() != coeffs.ncols() {
            return Err(Error::Dimension(format!(
                "coefficient matrix must be square, got {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        if coeffs.nrows() < 2 {
            return Err(Error::Dimension(format!("truncation must be at least 2, got {}", coeffs.nrows())));
        }
        Ok(TruncatedElement { theta, coeffs })
    }

    pub fn zeros(theta: f64, n: usize) -> Result<Self> {
        Self::new(theta, DMatrix::zeros(n, n))
    }

    /// Truncated unit `Σ_{m<N} f_mm`.
    pub fn identity(theta: f64, n: usize) -> Result<Self> {
        Self::new(theta, DMatrix::identity(n, n))
    }

    /// Matrix unit `f_mn`.
    pub fn unit(theta: f64, n: usize, row: usize, col: usize) -> Result<Self> {
        if row >= n || col >= n {
            return Err(Error::Dimension(format!("index ({row},{col}) outside truncation {n}")));
        }
        let mut c = DMatrix::zeros(n, n);
        c[(row, col)] = Complex64::new(1.0, 0.0);
        Self::new(theta, c)
    }

    /// Real diagonal element `Σ_m d_m f_mm`.
    pub fn diagonal(theta: f64, diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let c = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(diag[i], 0.0) } else { Complex64::new(0.0, 0.0) });
        Self::new(theta, c)
    }

    /// Random element with entries uniform in the unit square, supported on
    /// `m, n < N − margin`, optionally hermitian.
    pub fn random_interior<R: Rng>(theta: f64, n: usize, margin: usize, hermitian: bool, rng: &mut R) -> Result<Self> {
        if margin >= n {
            return Err(Error::Dimension(format!("margin {margin} leaves no support at truncation {n}")));
        }
        let k = n - margin;
        let mut c = DMatrix::zeros(n, n);
        for i in 0..k {
            for j in 0..k {
                c[(i, j)] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        if hermitian {
            c = (&c + c.adjoint()).scale(0.5);
        }
        Self::new(theta, c)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> DMatrix<Complex64> {
        self.coeffs
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.theta != other.theta {
            return Err(Error::Dimension(format!("theta mismatch: {} vs {}", self.theta, other.theta)));
        }
        if self.trunc() != other.trunc() {
            return Err(Error::Dimension(format!("truncation mismatch: {} vs {}", self.trunc(), other.trunc())));
        }
        Ok(())
    }

    fn with_coeffs(&self, coeffs: DMatrix<Complex64>) -> Self {
        TruncatedElement { theta: self.theta, coeffs }
    }

    /// Moyal product, the matrix product of coefficients.
    pub fn star(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_coeffs(&self.coeffs * &other.coeffs))
    }

    /// `a ⋆ b − b ⋆ a`
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_coeffs(&self.coeffs * &other.coeffs - &other.coeffs * &self.coeffs))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_coeffs(&self.coeffs + &other.coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_coeffs(&self.coeffs - &other.coeffs))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.with_coeffs(self.coeffs.map(|z| z * c))
    }

    pub fn involution(&self) -> Self {
        self.with_coeffs(self.coeffs.adjoint())
    }

    /// `∫ a d²x = 2πθ Σ_m a_mm`.
    pub fn trace_integral(&self) -> Complex64 {
        self.coeffs.trace() * (2.0 * std::f64::consts::PI * self.theta)
    }

    /// `‖a‖_{s,t}`.
    pub fn norm_st(&self, spec: NormSpec) -> f64 {
        let n = self.trunc();
        let mut acc = 0.0;
        for j in 0..n {
            let wn = (self.theta * (j as f64 + 0.5)).powf(spec.t);
            for i in 0..n {
                let wm = (self.theta * (i as f64 + 0.5)).powf(spec.s);
                acc += wm * wn * self.coeffs[(i, j)].norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Fréchet seminorm `ρ_k`.
    pub fn rho(&self, k: i32) -> f64 {
        self.norm_st(NormSpec::rho(k))
    }

    /// Coefficient ℓ² norm (equal to `‖·‖_{0,0}`).
    pub fn frobenius(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Operator norm of left multiplication on the truncated space.
    pub fn operator_norm(&self) -> f64 {
        self.coeffs.clone().singular_values().max()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.coeffs - self.coeffs.adjoint()).norm() <= tol * self.coeffs.norm().max(1.0)
    }

    /// True when all coefficients with `m ≥ N − margin` or `n ≥ N − margin`
    /// vanish.
    pub fn is_interior(&self, margin: usize) -> bool {
        let n = self.trunc();
        let cut = n.saturating_sub(margin);
        (0..n).all(|i| (0..n).all(|j| (i < cut && j < cut) || self.coeffs[(i, j)] == Complex64::new(0.0, 0.0)))
    }

    fn apply_ladder(&self, op: LadderOp, tables: &LadderTables) -> Result<Self> {
        let (l, r) = tables.action(op, self.trunc(), self.theta)?;
        let one = Complex64::new(1.0, 0.0);
        let mut out = DMatrix::zeros(self.trunc(), self.trunc());
        l.left_mul_acc(one, &self.coeffs, &mut out);
        r.right_mul_acc(one, &self.coeffs, &mut out);
        Ok(self.with_coeffs(out))
    }

    /// Derivative through the calibrated ladder action.
    pub fn derivative(&self, which: Derivative, tables: &LadderTables) -> Result<Self> {
        self.apply_ladder(LadderOp::Derivative(which), tables)
    }

    /// Action of the coordinate multiplier `x̃_μ`.
    pub fn xtilde_apply(&self, mu: usize, mode: XtildeMode, tables: &LadderTables) -> Result<Self> {
        if mu != 1 && mu != 2 {
            return Err(Error::Domain(format!("coordinate index must be 1 or 2, got {mu}")));
        }
        self.apply_ladder(LadderOp::Xtilde { mu, mode }, tables)
    }

    pub fn to_json(&self) -> Result<String> {
        let n = self.trunc();
        let wire = ElementWire {
            theta: self.theta,
            trunc: n,
            re: (0..n).map(|i| (0..n).map(|j| self.coeffs[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| self.coeffs[(i, j)].im).collect()).collect(),
        };
        Ok(serde_json::to_string(&wire)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: ElementWire = serde_json::from_str(s)?;
        let n = wire.trunc;
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !rows_ok(&wire.re) || !rows_ok(&wire.im) {
            return Err(Error::Dimension(format!("coefficient arrays do not match trunc {n}")));
        }
        let c = DMatrix::from_fn(n, n, |i, j| Complex64::new(wire.re[i][j], wire.im[i][j]));
        Self::new(wire.theta, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &TruncatedElement, b: &TruncatedElement, tol: f64) -> bool {
        (a.coeffs() - b.coeffs()).norm() <= tol * (1.0 + a.frobenius().max(b.frobenius()))
    }

    #[test]
    fn matrix_units_multiply() {
        let e01 = TruncatedElement::unit(1.0, 4, 0, 1).unwrap();
        let e12 = TruncatedElement::unit(1.0, 4, 1, 2).unwrap();
        let e02 = TruncatedElement::unit(1.0, 4, 0, 2).unwrap();
        assert_eq!(e01.star(&e12).unwrap(), e02);
        assert_eq!(e01.star(&e02).unwrap().frobenius(), 0.0);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let a = TruncatedElement::zeros(1.0, 4).unwrap();
        let b = TruncatedElement::zeros(2.0, 4).unwrap();
        let c = TruncatedElement::zeros(1.0, 5).unwrap();
        assert!(matches!(a.star(&b), Err(Error::Dimension(_))));
        assert!(matches!(a.star(&c), Err(Error::Dimension(_))));
        assert!(matches!(TruncatedElement::zeros(0.0, 4), Err(Error::Domain(_))));
        assert!(matches!(TruncatedElement::zeros(1.0, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn unit_and_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = TruncatedElement::random_interior(0.7, 6, 0, false, &mut rng).unwrap();
        let one = TruncatedElement::identity(0.7, 6).unwrap();
        assert_eq!(one.star(&a).unwrap(), a);
        let e01 = TruncatedElement::unit(1.0, 3, 0, 1).unwrap();
        assert_eq!(e01.involution(), TruncatedElement::unit(1.0, 3, 1, 0).unwrap());
        let h = TruncatedElement::random_interior(0.7, 6, 0, true, &mut rng).unwrap();
        assert!(h.is_hermitian(1e-15));
        assert_eq!(h.involution(), h);
    }

    #[test]
    fn trace_of_ground_state() {
        let theta = 0.3;
        let f00 = TruncatedElement::unit(theta, 3, 0, 0).unwrap();
        let expected = 2.0 * std::f64::consts::PI * theta;
        assert!((f00.trace_integral().re - expected).abs() < 1e-15);
        assert_eq!(TruncatedElement::unit(theta, 3, 0, 1).unwrap().trace_integral().norm(), 0.0);
    }

    #[test]
    fn weighted_norm_of_unit() {
        let a = TruncatedElement::unit(1.3, 4, 0, 0).unwrap();
        assert_eq!(a.norm_st(NormSpec::new(0.0, 0.0)), 1.0);
        let b = TruncatedElement::unit(2.0, 4, 2, 1).unwrap();
        let expected = (2.0f64.powi(2) * 2.5 * 1.5).sqrt();
        assert!((b.norm_st(NormSpec::new(1.0, 1.0)) - expected).abs() < 1e-14);
    }

    #[test]
    fn interior_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = TruncatedElement::random_interior(1.0, 8, 2, false, &mut rng).unwrap();
        assert!(a.is_interior(2));
        assert!(!a.is_interior(3));
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = TruncatedElement::random_interior(0.5, 5, 1, false, &mut rng).unwrap();
        let s = a.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["trunc"], 5);
        assert_eq!(v["re"][0][1].as_f64().unwrap(), a.coeffs()[(0, 1)].re);
        let b = TruncatedElement::from_json(&s).unwrap();
        assert!(close(&a, &b, 0.0));
    }
}

//! Operator norms and Lipschitz seminorms `ℓ_D(a) = ‖[D, π(a)]‖`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dirac::{random_interior_spinor, spinor_norm, BlockOp, CommutatorMode, DiracKind, DiracParams, FockOp, GammaRep, Spinor, SpinorOperator};
use crate::error::{Error, Result};
use crate::fock::TruncatedElement;
use crate::ladder::{Derivative, LadderTables};
use crate::linalg::{spectral_norm, top_singular_value, NormOptions};

/// Largest singular value of a dense matrix.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    spectral_norm(m)
}

fn flatten(psi: &Spinor) -> DVector<Complex64> {
    DVector::from_iterator(psi.iter().map(|c| c.len()).sum(), psi.iter().flat_map(|c| c.iter().copied()))
}

fn unflatten(v: &DVector<Complex64>, n: usize, s: usize) -> Spinor {
    (0..s).map(|a| DMatrix::from_column_slice(n, n, &v.as_slice()[a * n * n..(a + 1) * n * n])).collect()
}

/// Largest singular value of a block operator, by Lanczos on `T†T`.
pub fn block_operator_norm(t: &BlockOp, opts: &NormOptions) -> Result<f64> {
    let (n, s) = (t.trunc(), t.spinor_dim());
    let adj = t.adjoint();
    let run = |op: &BlockOp, x: &DVector<Complex64>| flatten(&op.apply(&unflatten(x, n, s)).expect("spinor shape is fixed"));
    top_singular_value(s * n * n, |x| run(t, x), |x| run(&adj, x), opts)
}

/// How a seminorm was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeminormMethod {
    /// Norm of the assembled block commutator.
    Direct,
    /// Homothety factor times `ℓ_{D₀}`.
    ClosedForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeminormReport {
    pub value: f64,
    pub method: SeminormMethod,
    pub kind: String,
    pub params: DiracParams,
    /// Relative difference to the other method.
    pub residual: f64,
}

/// `ℓ_{D₀}(a) = √2 max(‖∂a‖, ‖∂̄a‖)`, with `‖L(b)‖ = σ_max(b)`.
pub fn seminorm_standard(a: &TruncatedElement, tables: &LadderTables) -> Result<f64> {
    let d = a.derivative(Derivative::Holomorphic, tables)?;
    let db = a.derivative(Derivative::AntiHolomorphic, tables)?;
    Ok(std::f64::consts::SQRT_2 * operator_norm(d.coeffs()).max(operator_norm(db.coeffs())))
}

/// Ratio `ℓ_D / ℓ_{D₀}` for each family.
pub fn homothety_factor(kind: &DiracKind, params: &DiracParams) -> f64 {
    match kind {
        DiracKind::Standard => 1.0,
        DiracKind::Harmonic(_) => (1.0 + params.omega * params.omega).sqrt(),
        DiracKind::Landau => (1.0 - params.xi).abs(),
        DiracKind::TwistedLandau => (1.0 + params.xi).abs().max((1.0 - params.xi).abs()),
    }
}

/// Closed-form seminorm; cheap enough for use inside solvers.
pub fn seminorm_closed_form(kind: &DiracKind, params: &DiracParams, a: &TruncatedElement, tables: &LadderTables) -> Result<f64> {
    Ok(homothety_factor(kind, params) * seminorm_standard(a, tables)?)
}

/// Seminorm from the assembled commutator `D π(a) − π(a) D`.
pub fn seminorm_direct(d: &SpinorOperator, a: &TruncatedElement, tables: &LadderTables, opts: &NormOptions) -> Result<f64> {
    let comm = d.commutator(a, CommutatorMode::Direct, tables)?;
    block_operator_norm(&comm, opts)
}

/// `ℓ_D(a)` by `method`, cross-checked against the other method.
pub fn lipschitz_seminorm(d: &SpinorOperator, a: &TruncatedElement, method: SeminormMethod, tables: &LadderTables) -> Result<SeminormReport> {
    let direct = seminorm_direct(d, a, tables, &NormOptions::default())?;
    let closed = seminorm_closed_form(d.kind(), d.params(), a, tables)?;
    let value = match method {
        SeminormMethod::Direct => direct,
        SeminormMethod::ClosedForm => closed,
    };
    let scale = direct.max(closed);
    let residual = if scale > 0.0 { (direct - closed).abs() / scale } else { 0.0 };
    Ok(SeminormReport { value, method, kind: d.kind().name().into(), params: *d.params(), residual })
}

/// The rotation `𝔘` mixing the middle two spinor components.
pub fn diag_unitary(omega: f64) -> DMatrix<Complex64> {
    let c = 1.0 / (1.0 + omega * omega).sqrt();
    let r = |x: f64| Complex64::new(x, 0.0);
    let mut u = DMatrix::identity(4, 4);
    u[(1, 1)] = r(c);
    u[(1, 2)] = r(omega * c);
    u[(2, 1)] = r(-omega * c);
    u[(2, 2)] = r(c);
    u
}

/// Relative residual of
/// `[D₁,π(a)]*[D₁,π(a)] = 2(1+Ω²) 𝔘† diag(L*L, L̄*L̄, L*L, L̄*L̄) 𝔘`
/// with `L = L(∂a)`, `L̄ = L(∂̄a)`, measured on random spinors.
pub fn unitary_diag_check(omega: f64, a: &TruncatedElement, tables: &LadderTables) -> Result<f64> {
    let n = a.trunc();
    let d = SpinorOperator::build(DiracKind::Harmonic(GammaRep::D1), DiracParams::harmonic(a.theta(), omega), n, tables)?;
    let comm = d.commutator(a, CommutatorMode::Direct, tables)?;
    let lhs = comm.adjoint().compose(&comm);

    let left = |b: &TruncatedElement| -> FockOp {
        let m = b.coeffs();
        FockOp::left(crate::sparse::SparseMat::from_dense(&(m.adjoint() * m)))
    };
    let ll = left(&a.derivative(Derivative::Holomorphic, tables)?);
    let lbar = left(&a.derivative(Derivative::AntiHolomorphic, tables)?);
    let mut diag = BlockOp::zero(n, 4);
    for (k, op) in [&ll, &lbar, &ll, &lbar].into_iter().enumerate() {
        let mut e = DMatrix::zeros(4, 4);
        e[(k, k)] = Complex64::new(1.0, 0.0);
        diag = diag.add(&BlockOp::tensor(&e, op));
    }
    let u = BlockOp::tensor(&diag_unitary(omega), &FockOp::identity(n));
    let rhs = u.adjoint().compose(&diag).compose(&u).scale(Complex64::new(2.0 * (1.0 + omega * omega), 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let psi = random_interior_spinor(n, 4, 0, &mut rng);
        let x = lhs.apply(&psi)?;
        let y = rhs.apply(&psi)?;
        let diff: Spinor = x.iter().zip(&y).map(|(p, q)| p - q).collect();
        let scale = spinor_norm(&x).max(spinor_norm(&y));
        if scale > 0.0 {
            worst = worst.max(spinor_norm(&diff) / scale);
        }
    }
    Ok(worst)
}

/// Dense matrix of `vec(ψ) ↦ vec(bψ)` on `N×N` matrices, column-major.
pub fn left_multiplication_matrix(b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if b.nrows() != b.ncols() {
        return Err(Error::Dimension("left multiplication needs a square factor".into()));
    }
    Ok(DMatrix::<Complex64>::identity(b.nrows(), b.nrows()).kronecker(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn tables() -> &'static LadderTables {
        LadderTables::stored().unwrap()
    }

    fn interior(theta: f64, n: usize, margin: usize, seed: u64) -> TruncatedElement {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TruncatedElement::random_interior(theta, n, margin, true, &mut rng).unwrap()
    }

    #[test]
    fn dense_norm_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0), c(1.0)]));
        assert!((operator_norm(&d) - 3.0).abs() < 1e-14);
        let mut e01 = DMatrix::zeros(2, 2);
        e01[(0, 1)] = c(1.0);
        assert!((operator_norm(&e01) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn band_norm_is_largest_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut band = DMatrix::zeros(8, 8);
        for k in 0..7 {
            band[(k + 1, k)] = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        }
        let max_entry = band.iter().map(|z: &Complex64| z.norm()).fold(0.0, f64::max);
        let svd = band.clone().singular_values();
        assert!((operator_norm(&band) - max_entry).abs() < 1e-12);
        assert!((svd.max() - max_entry).abs() < 1e-12);
    }

    #[test]
    fn left_multiplication_norm_is_spectral_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = DMatrix::from_fn(6, 6, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let big = left_multiplication_matrix(&b).unwrap();
        let x = DMatrix::from_fn(6, 6, |i, j| c((i * 6 + j) as f64));
        let vx = DVector::from_column_slice(x.as_slice());
        assert!((&big * vx - DVector::from_column_slice((&b * &x).as_slice())).norm() < 1e-12);
        assert!((operator_norm(&big) - operator_norm(&b)).abs() < 1e-12);
    }

    #[test]
    fn block_norm_matches_dense() {
        let t = tables();
        let d = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(1.0, 0.4), 6, t).unwrap();
        let a = interior(1.0, 6, 1, 2);
        let comm = d.commutator(&a, CommutatorMode::Direct, t).unwrap();
        let dense = operator_norm(&comm.to_dense());
        let lanczos = block_operator_norm(&comm, &NormOptions::default()).unwrap();
        assert!((dense - lanczos).abs() < 1e-10 * dense);
    }

    #[test]
    fn harmonic_methods_agree() {
        let t = tables();
        let a = interior(1.0, 12, 2, 5);
        let d = SpinorOperator::build(DiracKind::Harmonic(GammaRep::D1), DiracParams::harmonic(1.0, 1.0), 12, t).unwrap();
        let r = lipschitz_seminorm(&d, &a, SeminormMethod::Direct, t).unwrap();
        assert!(r.residual < 1e-8, "{:e}", r.residual);
        let l0 = seminorm_standard(&a, t).unwrap();
        assert!((r.value - std::f64::consts::SQRT_2 * l0).abs() < 1e-8 * r.value);
    }

    #[test]
    fn degenerate_landau_has_zero_seminorm() {
        let t = tables();
        let a = interior(1.0, 8, 0, 6);
        let d = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(1.0, 1.0), 8, t).unwrap();
        let r = lipschitz_seminorm(&d, &a, SeminormMethod::Direct, t).unwrap();
        let l0 = seminorm_standard(&a, t).unwrap();
        assert!(r.value < 1e-10 * l0, "{:e}", r.value);
        assert_eq!(seminorm_closed_form(d.kind(), d.params(), &a, t).unwrap(), 0.0);
    }

    #[test]
    fn ground_projector_has_positive_seminorm() {
        let e00 = TruncatedElement::unit(1.0, 6, 0, 0).unwrap();
        assert!(seminorm_standard(&e00, tables()).unwrap() > 0.1);
    }

    #[test]
    fn unitary_factorization() {
        let t = tables();
        let a = interior(1.0, 10, 2, 7);
        assert!(unitary_diag_check(0.5, &a, t).unwrap() < 1e-9);
        assert!((diag_unitary(0.0) - DMatrix::<Complex64>::identity(4, 4)).norm() == 0.0);
        let u = diag_unitary(0.8);
        assert!((u.adjoint() * &u - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-15);
        let zero = TruncatedElement::zeros(1.0, 6).unwrap();
        assert_eq!(unitary_diag_check(0.5, &zero, t).unwrap(), 0.0);
    }
}

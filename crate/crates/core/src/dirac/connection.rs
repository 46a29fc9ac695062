use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checks::random_interior_spinor;
use super::operator::{spinor_norm, BlockOp, FockOp, Spinor};
use super::{sigma, DiracKind, DiracParams, SpinorOperator};
use crate::error::{Error, Result};
use crate::fock::TruncatedElement;
use crate::ladder::{Derivative, LadderOp, LadderTables, XtildeMode};

const UNITARY_TOL: f64 = 1e-10;

/// `∇^λ_μ(a) = ∂_μ a + iλ x̃_μ ⋆ a`.
pub fn nabla(a: &TruncatedElement, mu: usize, lambda: f64, tables: &LadderTables) -> Result<TruncatedElement> {
    let d = a.derivative(Derivative::partial(mu), tables)?;
    let x = a.xtilde_apply(mu, XtildeMode::StarLeft, tables)?;
    d.add(&x.scale(Complex64::new(0.0, lambda)))
}

/// The gauge-invariant connection `∂_μ a + (i/2) x̃_μ ⋆ a`.
pub fn nabla_invariant(a: &TruncatedElement, mu: usize, tables: &LadderTables) -> Result<TruncatedElement> {
    nabla(a, mu, 0.5, tables)
}

fn check_unitary(g: &TruncatedElement) -> Result<()> {
    let n = g.trunc();
    let gap = (g.coeffs().adjoint() * g.coeffs() - DMatrix::<Complex64>::identity(n, n)).norm();
    if gap > UNITARY_TOL * (n as f64).sqrt() {
        return Err(Error::Precondition(format!("gauge element is not unitary (|g†g − 1| = {gap:.2e})")));
    }
    Ok(())
}

/// `A^g_μ = g† ⋆ A_μ ⋆ g + i g† ⋆ ∂_μ g`, the potential for which
/// `g† ∘ ∇^A_μ ∘ g = ∇^{A^g}_μ` with `∇^A_μ = ∂_μ − i A_μ ⋆`.
pub fn gauge_transform(
    potential: &TruncatedElement,
    g: &TruncatedElement,
    mu: usize,
    tables: &LadderTables,
) -> Result<TruncatedElement> {
    check_unitary(g)?;
    let gd = g.involution();
    let conj = gd.star(potential)?.star(g)?;
    let dg = g.derivative(Derivative::partial(mu), tables)?;
    conj.add(&gd.star(&dg)?.scale(Complex64::new(0.0, 1.0)))
}

/// `∂_μ b − i A ⋆ b`.
fn covariant(b: &TruncatedElement, potential: &TruncatedElement, mu: usize, tables: &LadderTables) -> Result<TruncatedElement> {
    b.derivative(Derivative::partial(mu), tables)?
        .sub(&potential.star(b)?.scale(Complex64::new(0.0, 1.0)))
}

/// Relative gap between `g† ⋆ ∇^A_μ(g ⋆ a)` and `∇^{A^g}_μ(a)`.
pub fn gauge_covariance_residual(
    potential: &TruncatedElement,
    g: &TruncatedElement,
    a: &TruncatedElement,
    mu: usize,
    tables: &LadderTables,
) -> Result<f64> {
    let lhs = g.involution().star(&covariant(&g.star(a)?, potential, mu, tables)?)?;
    let rhs = covariant(a, &gauge_transform(potential, g, mu, tables)?, mu, tables)?;
    Ok(lhs.sub(&rhs)?.frobenius() / lhs.frobenius().max(rhs.frobenius()).max(f64::MIN_POSITIVE))
}

/// Relative gap between `𝒟_ξ ψ` and `(1+ξ)(−iσ^μ ∇^{ξ/(1+ξ)}_μ) ψ` on a random
/// spinor supported with `margin`.
pub fn covariant_dirac_residual(
    xi: f64,
    theta: f64,
    n: usize,
    margin: usize,
    seed: u64,
    tables: &LadderTables,
) -> Result<f64> {
    if xi == -1.0 {
        return Err(Error::Domain("xi = −1 has no covariant form".into()));
    }
    let lambda = xi / (1.0 + xi);
    let d = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(theta, xi), n, tables)?;
    let mut slash = BlockOp::zero(n, 2);
    for mu in [1, 2] {
        let del = FockOp::ladder(LadderOp::Derivative(Derivative::partial(mu)), tables, n, theta)?;
        let star = FockOp::ladder(LadderOp::Xtilde { mu, mode: XtildeMode::StarLeft }, tables, n, theta)?;
        let nab = del.add(&star.scale(Complex64::new(0.0, lambda)));
        slash = slash.add(&BlockOp::tensor(&(sigma(mu) * Complex64::new(0.0, -(1.0 + xi))), &nab));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = random_interior_spinor(n, 2, margin, &mut rng);
    let a = d.apply(&psi)?;
    let b = slash.apply(&psi)?;
    let diff: Spinor = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(spinor_norm(&diff) / spinor_norm(&a).max(f64::MIN_POSITIVE))
}

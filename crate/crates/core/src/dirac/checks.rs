use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::operator::{spinor_inner, spinor_norm, BlockOp, FockOp, Spinor};
use super::spectrum::{harmonic_hamiltonian, landau_hamiltonian};
use super::{kron, sigma, DiracKind, DiracParams, GammaRep, SpinorOperator};
use crate::error::{Error, Result};
use crate::ladder::LadderTables;

/// Random spinor supported on `m, n < N − margin`.
pub fn random_interior_spinor<R: Rng>(n: usize, s: usize, margin: usize, rng: &mut R) -> Spinor {
    let k = n.saturating_sub(margin);
    (0..s)
        .map(|_| {
            DMatrix::from_fn(n, n, |i, j| {
                if i < k && j < k {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect()
}

fn relative_gap(lhs: &Spinor, rhs: &Spinor) -> f64 {
    let diff: Spinor = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
    spinor_norm(&diff) / spinor_norm(rhs).max(spinor_norm(lhs)).max(f64::MIN_POSITIVE)
}

/// Outcome of the `D²` identity checks.
#[derive(Debug, Clone, Serialize)]
pub struct SquareIdentityReport {
    pub kind: String,
    /// Relative residual of `D²ψ` against the closed form, interior `ψ`.
    pub residual: f64,
    /// For the harmonic `D1`/`D2` kinds: the spinor term `2iΩγ^μγ^{ν+2}Θ⁻¹_{νμ}`
    /// against `−(2Ω/θ) σ^μ ⊗ σ^μ`.
    pub spinor_term_residual: Option<f64>,
    /// For the Landau kinds: `H_L` against `Σ_μ P_μ²`, `P_μ = −i∂_μ + ξ m(x̃_μ)`.
    pub landau_split_residual: Option<f64>,
    /// For the twisted kind: `D̃_ξ` against `diag(𝒟_{−ξ}, 𝒟_ξ)`.
    pub block_diagonal_residual: Option<f64>,
    pub margin: usize,
}

fn theta_inverse(theta: f64) -> [[f64; 2]; 2] {
    [[0.0, -1.0 / theta], [1.0 / theta, 0.0]]
}

/// `2iΩ γ^μ γ^{ν+2} Θ⁻¹_{νμ}`.
fn harmonic_spinor_term(gammas: &[DMatrix<Complex64>], omega: f64, theta: f64) -> DMatrix<Complex64> {
    let ti = theta_inverse(theta);
    let mut out = DMatrix::zeros(4, 4);
    for mu in 0..2 {
        for nu in 0..2 {
            out += &gammas[mu] * &gammas[nu + 2] * Complex64::new(ti[nu][mu], 0.0);
        }
    }
    out * Complex64::new(0.0, 2.0 * omega)
}

fn landau_closed_form(xi: f64, theta: f64, n: usize, tables: &LadderTables) -> Result<BlockOp> {
    let h = landau_hamiltonian(xi, theta, n, tables)?;
    let id2 = DMatrix::<Complex64>::identity(2, 2);
    Ok(BlockOp::tensor(&id2, &h).add(&BlockOp::tensor(
        &(sigma(3) * Complex64::new(-4.0 * xi / theta, 0.0)),
        &FockOp::identity(n),
    )))
}

fn block_diag(upper: &BlockOp, lower: &BlockOp) -> BlockOp {
    let n = upper.trunc();
    let su = upper.spinor_dim();
    let unit = |i: usize, j: usize| {
        let mut e = DMatrix::<Complex64>::zeros(2 * su, 2 * su);
        e[(i, j)] = Complex64::new(1.0, 0.0);
        e
    };
    let mut out = BlockOp::zero(n, 2 * su);
    for a in 0..su {
        for b in 0..su {
            out = out.add(&BlockOp::tensor(&unit(a, b), upper.block(a, b)));
            out = out.add(&BlockOp::tensor(&unit(a + su, b + su), lower.block(a, b)));
        }
    }
    out
}

/// Checks the closed form of `D²` on random spinors supported with `margin`.
pub fn square_identity_check(
    kind: &DiracKind,
    params: &DiracParams,
    n: usize,
    margin: usize,
    seed: u64,
    tables: &LadderTables,
) -> Result<SquareIdentityReport> {
    if margin < 2 {
        return Err(Error::Precondition("second-order identities need margin at least 2".into()));
    }
    let d = SpinorOperator::build(kind.clone(), *params, n, tables)?;
    let s = d.spinor_dim();
    let theta = params.theta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = random_interior_spinor(n, s, margin, &mut rng);
    let lhs = d.apply(&d.apply(&psi)?)?;
    let mut spinor_term_residual = None;
    let mut landau_split_residual = None;
    let mut block_diagonal_residual = None;
    let rhs_op = match kind {
        DiracKind::Standard => BlockOp::tensor(&DMatrix::identity(2, 2), &harmonic_hamiltonian(0.0, theta, n, tables)?),
        DiracKind::Harmonic(rep) => {
            let g = rep.gammas();
            let term = harmonic_spinor_term(&g, params.omega, theta);
            if matches!(rep, GammaRep::D1 | GammaRep::D2) {
                let mut expected = DMatrix::<Complex64>::zeros(4, 4);
                for mu in [1, 2] {
                    expected += kron(&sigma(mu), &sigma(mu));
                }
                expected *= Complex64::new(-2.0 * params.omega / theta, 0.0);
                spinor_term_residual = Some((&term - expected).norm());
            }
            let h = harmonic_hamiltonian(params.omega, theta, n, tables)?;
            BlockOp::tensor(&DMatrix::identity(4, 4), &h).add(&BlockOp::tensor(&term, &FockOp::identity(n)))
        }
        DiracKind::Landau => {
            let h = landau_hamiltonian(params.xi, theta, n, tables)?;
            let mut p2 = FockOp::zero(n);
            for mu in [1, 2] {
                let p = super::spectrum::momentum(mu, params.xi, theta, n, tables)?;
                p2 = p2.add(&p.compose(&p));
            }
            let phi = random_interior_spinor(n, 1, margin, &mut rng).remove(0);
            let a = h.apply(&phi);
            let b = p2.apply(&phi);
            landau_split_residual = Some((&a - &b).norm() / a.norm().max(f64::MIN_POSITIVE));
            landau_closed_form(params.xi, theta, n, tables)?
        }
        DiracKind::TwistedLandau => {
            let minus = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(theta, -params.xi), n, tables)?;
            let plus = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(theta, params.xi), n, tables)?;
            let diag = block_diag(minus.op(), plus.op());
            let a = d.apply(&psi)?;
            let b = diag.apply(&psi)?;
            block_diagonal_residual = Some(relative_gap(&a, &b));
            block_diag(
                &landau_closed_form(-params.xi, theta, n, tables)?,
                &landau_closed_form(params.xi, theta, n, tables)?,
            )
        }
    };
    let rhs = rhs_op.apply(&psi)?;
    Ok(SquareIdentityReport {
        kind: kind.name().to_string(),
        residual: relative_gap(&lhs, &rhs),
        spinor_term_residual,
        landau_split_residual,
        block_diagonal_residual,
        margin,
    })
}

/// `max |⟨Dψ, φ⟩ − ⟨ψ, Dφ⟩| / (‖Dψ‖‖φ‖ + ‖ψ‖‖Dφ‖)` over `trials` random interior pairs.
pub fn self_adjointness_residual(d: &SpinorOperator, margin: usize, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, s) = (d.trunc(), d.spinor_dim());
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let psi = random_interior_spinor(n, s, margin, &mut rng);
        let phi = random_interior_spinor(n, s, margin, &mut rng);
        let dpsi = d.apply(&psi)?;
        let dphi = d.apply(&phi)?;
        let gap = (spinor_inner(&dpsi, &phi) - spinor_inner(&psi, &dphi)).norm();
        let scale = spinor_norm(&dpsi) * spinor_norm(&phi) + spinor_norm(&psi) * spinor_norm(&dphi);
        worst = worst.max(gap / scale.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

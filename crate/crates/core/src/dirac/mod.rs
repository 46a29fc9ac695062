//! Dirac operators on truncated spinors, their commutators with the algebra
//! and the effective Clifford metrics they induce.

mod checks;
mod connection;
mod operator;
mod spectrum;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::TruncatedElement;
use crate::ladder::{Derivative, LadderOp, LadderTables, XtildeMode};

pub use checks::{random_interior_spinor, self_adjointness_residual, square_identity_check, SquareIdentityReport};
pub use connection::{covariant_dirac_residual, gauge_covariance_residual, gauge_transform, nabla, nabla_invariant};
pub use operator::{spinor_inner, spinor_norm, BlockOp, FockOp, FockTerm, Spinor};
pub use spectrum::{cluster_eigenvalues, fit_levels, harmonic_hamiltonian, hermitian_spectrum, landau_hamiltonian, Cluster, LevelFit, SpectrumReport};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Pauli matrices `σ¹`, `σ² = [[0, i], [−i, 0]]` and `σ³ = iσ¹σ²`, indexed 1..=3.
pub fn sigma(k: usize) -> DMatrix<Complex64> {
    match k {
        1 => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => DMatrix::from_row_slice(2, 2, &[ZERO, I, -I, ZERO]),
        3 => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("sigma index must be 1, 2 or 3, got {k}"),
    }
}

/// Kronecker product, block index `i·dim(b) + j`.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// Representations of the four Euclidean gamma matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaRep {
    /// `γ^μ = 1 ⊗ σ^μ`, `γ^{μ+2} = σ^μ ⊗ σ³`
    D1,
    /// `γ^μ = σ³ ⊗ σ^μ`, `γ^{μ+2} = σ^μ ⊗ 1`
    D2,
    /// User supplied `[γ¹, γ², γ³, γ⁴]`, validated at build.
    Custom(Vec<DMatrix<Complex64>>),
}

impl GammaRep {
    pub fn gammas(&self) -> Vec<DMatrix<Complex64>> {
        let id = DMatrix::<Complex64>::identity(2, 2);
        match self {
            GammaRep::D1 => vec![
                kron(&id, &sigma(1)),
                kron(&id, &sigma(2)),
                kron(&sigma(1), &sigma(3)),
                kron(&sigma(2), &sigma(3)),
            ],
            GammaRep::D2 => vec![
                kron(&sigma(3), &sigma(1)),
                kron(&sigma(3), &sigma(2)),
                kron(&sigma(1), &id),
                kron(&sigma(2), &id),
            ],
            GammaRep::Custom(g) => g.clone(),
        }
    }
}

/// Checks `{γ^a, γ^b} = 2δ^{ab}` and hermiticity; returns the largest
/// deviation.
pub fn clifford_residual(gammas: &[DMatrix<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for (a, ga) in gammas.iter().enumerate() {
        let d = ga.nrows();
        worst = worst.max((ga - ga.adjoint()).norm());
        for (b, gb) in gammas.iter().enumerate() {
            let target = if a == b { DMatrix::identity(d, d) * Complex64::new(2.0, 0.0) } else { DMatrix::zeros(d, d) };
            worst = worst.max((ga * gb + gb * ga - target).norm());
        }
    }
    worst
}

/// Dirac operator families.
#[derive(Debug, Clone, PartialEq)]
pub enum DiracKind {
    /// `−iσ^μ∂_μ` on two-component spinors.
    Standard,
    /// `γ^μ(−i∂_μ) − Ωγ^{μ+2} m(x̃_μ)` on four-component spinors.
    Harmonic(GammaRep),
    /// `−iσ^μ∂_μ + ξσ^μ m(x̃_μ)`.
    Landau,
    /// `(1 ⊗ σ^μ)(−i∂_μ) − ξ(σ³ ⊗ σ^μ) m(x̃_μ)`.
    TwistedLandau,
}

impl DiracKind {
    pub fn name(&self) -> &'static str {
        match self {
            DiracKind::Standard => "standard",
            DiracKind::Harmonic(GammaRep::D1) => "harmonic-d1",
            DiracKind::Harmonic(GammaRep::D2) => "harmonic-d2",
            DiracKind::Harmonic(GammaRep::Custom(_)) => "harmonic-custom",
            DiracKind::Landau => "landau",
            DiracKind::TwistedLandau => "twisted-landau",
        }
    }
}

/// Physical parameters of a Dirac operator. `omega` is used by the harmonic
/// kind and `xi` by the Landau kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracParams {
    pub theta: f64,
    pub omega: f64,
    pub xi: f64,
}

impl DiracParams {
    pub fn standard(theta: f64) -> Self {
        DiracParams { theta, omega: 0.0, xi: 0.0 }
    }

    pub fn harmonic(theta: f64, omega: f64) -> Self {
        DiracParams { theta, omega, xi: 0.0 }
    }

    pub fn landau(theta: f64, xi: f64) -> Self {
        DiracParams { theta, omega: 0.0, xi }
    }
}

/// Spinor matrices `P^μ`, `Q^μ` of `D = P^μ ⊗ (−i∂_μ) + Q^μ ⊗ m(x̃_μ)`.
#[derive(Debug, Clone, PartialEq)]
struct Symbol {
    derivative: [DMatrix<Complex64>; 2],
    multiplier: [DMatrix<Complex64>; 2],
}

fn symbol(kind: &DiracKind, p: &DiracParams) -> Result<Symbol> {
    let c = |x: f64| Complex64::new(x, 0.0);
    let id2 = DMatrix::<Complex64>::identity(2, 2);
    match kind {
        DiracKind::Standard => Ok(Symbol {
            derivative: [sigma(1), sigma(2)],
            multiplier: [DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)],
        }),
        DiracKind::Harmonic(rep) => {
            if !(p.omega > 0.0 && p.omega <= 1.0) {
                return Err(Error::Domain(format!("omega must lie in (0, 1], got {}", p.omega)));
            }
            let g = rep.gammas();
            if g.len() != 4 || g.iter().any(|m| m.nrows() != 4 || m.ncols() != 4) {
                return Err(Error::Domain("a gamma representation needs four 4x4 matrices".into()));
            }
            let res = clifford_residual(&g);
            if res > 1e-12 {
                return Err(Error::Domain(format!("gamma matrices violate the Clifford relations (residual {res:.2e})")));
            }
            Ok(Symbol {
                derivative: [g[0].clone(), g[1].clone()],
                multiplier: [&g[2] * c(-p.omega), &g[3] * c(-p.omega)],
            })
        }
        DiracKind::Landau => Ok(Symbol {
            derivative: [sigma(1), sigma(2)],
            multiplier: [sigma(1) * c(p.xi), sigma(2) * c(p.xi)],
        }),
        DiracKind::TwistedLandau => Ok(Symbol {
            derivative: [kron(&id2, &sigma(1)), kron(&id2, &sigma(2))],
            multiplier: [kron(&sigma(3), &sigma(1)) * c(-p.xi), kron(&sigma(3), &sigma(2)) * c(-p.xi)],
        }),
    }
}

/// Commutator evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutatorMode {
    /// `D π(a) − π(a) D` composed blockwise.
    Direct,
    /// `−i L(∂_μ a) ⊗ Γ^μ`.
    ClosedForm,
}

/// A Dirac operator at truncation `N`.
#[derive(Debug, Clone)]
pub struct SpinorOperator {
    kind: DiracKind,
    params: DiracParams,
    symbol: Symbol,
    op: BlockOp,
}

impl SpinorOperator {
    pub fn build(kind: DiracKind, params: DiracParams, n: usize, tables: &LadderTables) -> Result<Self> {
        if !(params.theta > 0.0) {
            return Err(Error::Domain(format!("theta must be positive, got {}", params.theta)));
        }
        if n < 2 {
            return Err(Error::Dimension(format!("truncation must be at least 2, got {n}")));
        }
        let symbol = symbol(&kind, &params)?;
        let s = symbol.derivative[0].nrows();
        let mut op = BlockOp::zero(n, s);
        for mu in [1, 2] {
            let d = FockOp::ladder(LadderOp::Derivative(Derivative::partial(mu)), tables, n, params.theta)?;
            op = op.add(&BlockOp::tensor(&symbol.derivative[mu - 1], &d.scale(-I)));
            let q = &symbol.multiplier[mu - 1];
            if q.iter().any(|z| *z != ZERO) {
                let m = FockOp::ladder(LadderOp::Xtilde { mu, mode: XtildeMode::Pointwise }, tables, n, params.theta)?;
                op = op.add(&BlockOp::tensor(q, &m));
            }
        }
        Ok(SpinorOperator { kind, params, symbol, op })
    }

    pub fn kind(&self) -> &DiracKind {
        &self.kind
    }

    pub fn params(&self) -> &DiracParams {
        &self.params
    }

    pub fn op(&self) -> &BlockOp {
        &self.op
    }

    pub fn trunc(&self) -> usize {
        self.op.trunc()
    }

    pub fn spinor_dim(&self) -> usize {
        self.op.spinor_dim()
    }

    /// True for the Landau kind at `ξ = 1`, where the commutators vanish.
    pub fn is_degenerate(&self) -> bool {
        self.kind == DiracKind::Landau && self.params.xi == 1.0
    }

    pub fn apply(&self, psi: &Spinor) -> Result<Spinor> {
        self.op.apply(psi)
    }

    /// Matrices `Γ^μ` with `[D, π(a)] = −i L(∂_μ a) ⊗ Γ^μ`.
    pub fn commutator_gammas(&self) -> [DMatrix<Complex64>; 2] {
        [
            &self.symbol.derivative[0] - &self.symbol.multiplier[0],
            &self.symbol.derivative[1] - &self.symbol.multiplier[1],
        ]
    }

    /// `[D, π(a)]` with `π(a) = L(a) ⊗ 1`.
    pub fn commutator(&self, a: &TruncatedElement, mode: CommutatorMode, tables: &LadderTables) -> Result<BlockOp> {
        if a.trunc() != self.trunc() || a.theta() != self.params.theta {
            return Err(Error::Dimension("element and operator differ in truncation or theta".into()));
        }
        match mode {
            CommutatorMode::Direct => {
                let pa = BlockOp::left_regular(a.coeffs(), self.spinor_dim());
                Ok(self.op.compose(&pa).sub(&pa.compose(&self.op)))
            }
            CommutatorMode::ClosedForm => {
                let gammas = self.commutator_gammas();
                let mut out = BlockOp::zero(self.trunc(), self.spinor_dim());
                for mu in [1, 2] {
                    let da = a.derivative(Derivative::partial(mu), tables)?;
                    let l = FockOp::left(crate::sparse::SparseMat::from_dense(da.coeffs())).scale(-I);
                    out = out.add(&BlockOp::tensor(&gammas[mu - 1], &l));
                }
                Ok(out)
            }
        }
    }

    /// Block-sparse export: one record per nonzero block and index shift.
    pub fn to_json(&self) -> serde_json::Value {
        use std::collections::BTreeMap;
        let n = self.trunc();
        let s = self.spinor_dim();
        let mut records = Vec::new();
        for a in 0..s {
            for b in 0..s {
                let mut bands: BTreeMap<(i64, i64), Vec<[f64; 4]>> = BTreeMap::new();
                let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
                for (src, dst, v) in self.op.block(a, b).triplets() {
                    *acc.entry((src, dst)).or_insert(ZERO) += v;
                }
                for ((src, dst), v) in acc {
                    if v == ZERO {
                        continue;
                    }
                    let (m, k) = (src / n, src % n);
                    let (m2, k2) = (dst / n, dst % n);
                    bands
                        .entry((m2 as i64 - m as i64, k2 as i64 - k as i64))
                        .or_default()
                        .push([m as f64, k as f64, v.re, v.im]);
                }
                for ((dm, dn), values) in bands {
                    records.push(serde_json::json!({
                        "block_row": a,
                        "block_col": b,
                        "band_offset": [dm, dn],
                        "values": values,
                    }));
                }
            }
        }
        serde_json::json!({
            "kind": self.kind.name(),
            "theta": self.params.theta,
            "omega": self.params.omega,
            "xi": self.params.xi,
            "trunc": n,
            "spinor_dim": s,
            "degenerate": self.is_degenerate(),
            "blocks": records,
        })
    }
}

/// Effective Clifford data of a Dirac operator.
#[derive(Debug, Clone)]
pub struct CliffordSet {
    pub gammas: [DMatrix<Complex64>; 2],
    /// `G⁻¹`, from `{Γ^μ, Γ^ν} = 2 (G⁻¹)^{μν}` on the dominant spinor block.
    pub metric_inverse: Matrix2<f64>,
    pub det_g: f64,
    /// `(det G)^{1/4}`, the distance rescaling factor.
    pub det_g_quarter: f64,
    /// True when the anticommutators are multiples of the identity.
    pub uniform: bool,
    /// Largest deviation of the anticommutators from `2 (G⁻¹)^{μν}` on the
    /// dominant block.
    pub residual: f64,
}

/// Clifford metric induced by `[D, π(a)] = −iL(∂_μ a) ⊗ Γ^μ`.
pub fn clifford_metric(kind: &DiracKind, params: &DiracParams) -> Result<CliffordSet> {
    if *kind == DiracKind::Landau && params.xi == 1.0 {
        return Err(Error::Domain("xi = 1 gives a singular Clifford metric".into()));
    }
    let sym = symbol(kind, params)?;
    let gammas = [&sym.derivative[0] - &sym.multiplier[0], &sym.derivative[1] - &sym.multiplier[1]];
    let s = gammas[0].nrows();
    let anti = |a: usize, b: usize| &gammas[a] * &gammas[b] + &gammas[b] * &gammas[a];
    let blocks: Vec<Vec<DMatrix<Complex64>>> = (0..2).map(|a| (0..2).map(|b| anti(a, b)).collect()).collect();
    // dominant diagonal index of the anticommutators
    let dominant = (0..s)
        .max_by(|&i, &j| {
            let ti = blocks[0][0][(i, i)].re + blocks[1][1][(i, i)].re;
            let tj = blocks[0][0][(j, j)].re + blocks[1][1][(j, j)].re;
            ti.total_cmp(&tj)
        })
        .unwrap();
    let ginv = Matrix2::from_fn(|a, b| 0.5 * blocks[a][b][(dominant, dominant)].re);
    let det_inv = ginv.determinant();
    if !(det_inv.abs() > 1e-300) {
        return Err(Error::Domain("singular Clifford metric".into()));
    }
    let mut residual = 0.0f64;
    let mut uniform = true;
    for a in 0..2 {
        for b in 0..2 {
            let target = DMatrix::<Complex64>::identity(s, s) * Complex64::new(2.0 * ginv[(a, b)], 0.0);
            let diff = &blocks[a][b] - target;
            if diff.norm() > 1e-12 * (1.0 + ginv.norm()) {
                uniform = false;
            }
            for i in 0..s {
                for j in 0..s {
                    if i == dominant || j == dominant {
                        residual = residual.max(diff[(i, j)].norm());
                    }
                }
            }
        }
    }
    let det_g = 1.0 / det_inv;
    Ok(CliffordSet { gammas, metric_inverse: ginv, det_g, det_g_quarter: det_g.powf(0.25), uniform, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tables() -> &'static LadderTables {
        LadderTables::stored().unwrap()
    }

    fn interior(theta: f64, n: usize, margin: usize, seed: u64) -> TruncatedElement {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TruncatedElement::random_interior(theta, n, margin, true, &mut rng).unwrap()
    }

    fn all_kinds() -> Vec<(DiracKind, DiracParams)> {
        vec![
            (DiracKind::Standard, DiracParams::standard(1.3)),
            (DiracKind::Harmonic(GammaRep::D1), DiracParams::harmonic(1.3, 0.5)),
            (DiracKind::Harmonic(GammaRep::D2), DiracParams::harmonic(1.3, 1.0)),
            (DiracKind::Landau, DiracParams::landau(1.3, 2.0)),
            (DiracKind::TwistedLandau, DiracParams::landau(1.3, 0.5)),
        ]
    }

    #[test]
    fn standard_operator_on_ground_state() {
        let theta = 2.0;
        let d = SpinorOperator::build(DiracKind::Standard, DiracParams::standard(theta), 6, tables()).unwrap();
        let mut psi = vec![DMatrix::zeros(6, 6), DMatrix::zeros(6, 6)];
        psi[0][(0, 0)] = ONE;
        let out = d.apply(&psi).unwrap();
        assert!(out[0].norm() < 1e-12);
        // −i√2 ∂f_00 = i√(2/θ) f_10
        let expected = Complex64::new(0.0, (2.0 / theta).sqrt());
        assert!((out[1][(1, 0)] - expected).norm() < 1e-10);
        assert!((out[1].norm() - expected.norm()).abs() < 1e-10);
    }

    #[test]
    fn commutator_modes_agree_on_interior_elements() {
        for (kind, params) in all_kinds() {
            let d = SpinorOperator::build(kind.clone(), params, 10, tables()).unwrap();
            let a = interior(params.theta, 10, 2, 4);
            let direct = d.commutator(&a, CommutatorMode::Direct, tables()).unwrap().to_dense();
            let closed = d.commutator(&a, CommutatorMode::ClosedForm, tables()).unwrap().to_dense();
            let rel = (&direct - &closed).norm() / closed.norm();
            assert!(rel < 1e-9, "{}: {rel:e}", kind.name());
        }
    }

    #[test]
    fn unit_commutes() {
        let d = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(1.0, 3.0), 8, tables()).unwrap();
        let one = TruncatedElement::identity(1.0, 8).unwrap();
        let comm = d.commutator(&one, CommutatorMode::ClosedForm, tables()).unwrap().to_dense();
        assert!(comm.norm() < 1e-10);
    }

    #[test]
    fn harmonic_commutator_layout() {
        let (theta, omega, n) = (1.0, 0.7, 8);
        let d = SpinorOperator::build(DiracKind::Harmonic(GammaRep::D1), DiracParams::harmonic(theta, omega), n, tables()).unwrap();
        let a = interior(theta, n, 2, 11);
        let comm = d.commutator(&a, CommutatorMode::Direct, tables()).unwrap();
        let l = a.derivative(Derivative::Holomorphic, tables()).unwrap().into_coeffs();
        let lb = a.derivative(Derivative::AntiHolomorphic, tables()).unwrap().into_coeffs();
        let z = DMatrix::<Complex64>::zeros(n, n);
        let w = Complex64::new(omega, 0.0);
        let layout = [
            [z.clone(), lb.clone(), &lb * w, z.clone()],
            [l.clone(), z.clone(), z.clone(), &lb * (-w)],
            [&l * w, z.clone(), z.clone(), lb.clone()],
            [z.clone(), &l * (-w), l.clone(), z.clone()],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = checks::random_interior_spinor(n, 4, 0, &mut rng);
        let got = comm.apply(&psi).unwrap();
        let pref = Complex64::new(0.0, -(2.0f64).sqrt());
        for r in 0..4 {
            let mut want = DMatrix::<Complex64>::zeros(n, n);
            for c in 0..4 {
                want += &layout[r][c] * &psi[c] * pref;
            }
            assert!((&got[r] - &want).norm() < 1e-9 * want.norm().max(1.0));
        }
    }

    #[test]
    fn clifford_metric_examples() {
        let h = clifford_metric(&DiracKind::Harmonic(GammaRep::D1), &DiracParams::harmonic(1.0, 1.0)).unwrap();
        assert!((h.metric_inverse - Matrix2::new(2.0, 0.0, 0.0, 2.0)).norm() < 1e-14);
        assert!((h.det_g_quarter - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!(h.uniform);
        let l = clifford_metric(&DiracKind::Landau, &DiracParams::landau(1.0, 3.0)).unwrap();
        assert!((l.det_g_quarter - 0.5).abs() < 1e-14);
        let s = clifford_metric(&DiracKind::Standard, &DiracParams::standard(1.0)).unwrap();
        assert!((s.det_g_quarter - 1.0).abs() < 1e-14);
        let t = clifford_metric(&DiracKind::TwistedLandau, &DiracParams::landau(1.0, 3.0)).unwrap();
        assert!(!t.uniform);
        assert!((t.det_g_quarter - 0.25).abs() < 1e-14);
        assert!(matches!(
            clifford_metric(&DiracKind::Landau, &DiracParams::landau(1.0, 1.0)),
            Err(Error::Domain(_))
        ));
        for rep in [GammaRep::D1, GammaRep::D2] {
            assert!(clifford_residual(&rep.gammas()) < 1e-15);
        }
    }

    #[test]
    fn degenerate_landau_is_built_and_flagged() {
        let d = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(1.0, 1.0), 6, tables()).unwrap();
        assert!(d.is_degenerate());
        let e = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(1.0, 2.0), 6, tables()).unwrap();
        assert!(!e.is_degenerate());
        let t = SpinorOperator::build(DiracKind::TwistedLandau, DiracParams::landau(1.0, 1.0), 6, tables()).unwrap();
        assert!(!t.is_degenerate());
        let m = clifford_metric(&DiracKind::TwistedLandau, &DiracParams::landau(1.0, 1.0)).unwrap();
        assert!((m.det_g_quarter - 0.5).abs() < 1e-14);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let t = tables();
        assert!(SpinorOperator::build(DiracKind::Harmonic(GammaRep::D1), DiracParams::harmonic(1.0, 1.5), 6, t).is_err());
        let bad = GammaRep::Custom(vec![DMatrix::identity(4, 4); 4]);
        assert!(SpinorOperator::build(DiracKind::Harmonic(bad), DiracParams::harmonic(1.0, 0.5), 6, t).is_err());
    }

    #[test]
    fn squares_match_closed_forms() {
        for (kind, params) in all_kinds() {
            let r = square_identity_check(&kind, &params, 12, 2, 5, tables()).unwrap();
            assert!(r.residual < 1e-9, "{}: {:e}", kind.name(), r.residual);
            if let Some(x) = r.spinor_term_residual {
                assert!(x < 1e-14, "{x:e}");
            }
            if let Some(x) = r.landau_split_residual {
                assert!(x < 1e-9, "{x:e}");
            }
            if let Some(x) = r.block_diagonal_residual {
                assert!(x < 1e-12, "{x:e}");
            }
        }
    }

    #[test]
    fn both_harmonic_representations_square_alike() {
        let p = DiracParams::harmonic(0.8, 0.6);
        let d1 = SpinorOperator::build(DiracKind::Harmonic(GammaRep::D1), p, 10, tables()).unwrap();
        let d2 = SpinorOperator::build(DiracKind::Harmonic(GammaRep::D2), p, 10, tables()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = checks::random_interior_spinor(10, 4, 2, &mut rng);
        let a = d1.apply(&d1.apply(&psi).unwrap()).unwrap();
        let b = d2.apply(&d2.apply(&psi).unwrap()).unwrap();
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt();
        assert!(diff < 1e-9 * spinor_norm(&a));
    }

    #[test]
    fn operators_are_symmetric() {
        for (kind, params) in all_kinds() {
            let d = SpinorOperator::build(kind.clone(), params, 9, tables()).unwrap();
            let r = self_adjointness_residual(&d, 1, 3, 1).unwrap();
            assert!(r < 1e-10, "{}: {r:e}", kind.name());
        }
    }

    #[test]
    fn connection_identities() {
        let theta = 1.1;
        let t = tables();
        let a = interior(theta, 10, 2, 21);
        for mu in [1, 2] {
            let lhs = nabla_invariant(&a, mu, t).unwrap();
            let rhs = a.xtilde_apply(mu, XtildeMode::StarRight, t).unwrap().scale(Complex64::new(0.0, 0.5));
            assert!(lhs.sub(&rhs).unwrap().frobenius() < 1e-10 * rhs.frobenius());
            let flat = nabla(&a, mu, 0.0, t).unwrap();
            assert_eq!(flat, a.derivative(Derivative::partial(mu), t).unwrap());
        }
        for xi in [0.5, 2.0, -0.3] {
            assert!(covariant_dirac_residual(xi, theta, 10, 1, 3, t).unwrap() < 1e-10);
        }
    }

    #[test]
    fn gauge_covariance_with_window_unitary() {
        let (theta, n) = (1.0, 10);
        let t = tables();
        let h = interior(theta, 5, 0, 31).into_coeffs();
        let eig = h.clone().symmetric_eigen();
        let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, l));
        let u = &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint();
        let mut g = DMatrix::<Complex64>::identity(n, n);
        g.view_mut((0, 0), (5, 5)).copy_from(&u);
        let g = TruncatedElement::new(theta, g).unwrap();
        let potential = interior(theta, n, 2, 32);
        let a = interior(theta, n, 3, 33);
        for mu in [1, 2] {
            assert!(gauge_covariance_residual(&potential, &g, &a, mu, t).unwrap() < 1e-10);
        }
        let not_unitary = TruncatedElement::identity(theta, n).unwrap().scale(Complex64::new(2.0, 0.0));
        assert!(matches!(gauge_transform(&potential, &not_unitary, 1, t), Err(Error::Precondition(_))));
    }

    #[test]
    fn export_lists_bands() {
        let d = SpinorOperator::build(DiracKind::Standard, DiracParams::standard(1.0), 4, tables()).unwrap();
        let v = d.to_json();
        assert_eq!(v["spinor_dim"], 2);
        let blocks = v["blocks"].as_array().unwrap();
        assert!(!blocks.is_empty());
        assert!(blocks.iter().all(|b| b["block_row"] != b["block_col"]));
    }
}

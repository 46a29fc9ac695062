//! States on the truncated algebra and the spectral distance between them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirac::{clifford_metric, DiracKind, DiracParams, SpinorOperator};
use crate::error::{Error, Result};
use crate::fock::TruncatedElement;
use crate::ladder::{Derivative, LadderOp, LadderTables};
use crate::linalg::{top_singular_triplet, NormOptions};
use crate::lipschitz::{homothety_factor, seminorm_closed_form, seminorm_direct};
use crate::sparse::SparseMat;

const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    PureBasis(usize),
    Vector(DVector<Complex64>),
    Mixture(Vec<(f64, State)>),
}

/// Positive normalized functional `ω(a) = tr(ρ a)` on coefficient matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    kind: StateKind,
    density: DMatrix<Complex64>,
}

impl State {
    /// `ω_m(a) = a_mm`.
    pub fn pure_basis(m: usize, n: usize) -> Result<Self> {
        if m >= n {
            return Err(Error::Dimension(format!("basis state {m} outside truncation {n}")));
        }
        let mut density = DMatrix::zeros(n, n);
        density[(m, m)] = Complex64::new(1.0, 0.0);
        Ok(State { kind: StateKind::PureBasis(m), density })
    }

    /// `ω(a) = Σ c̄_m a_mn c_n` for a unit vector `c`.
    pub fn vector(c: DVector<Complex64>) -> Result<Self> {
        let norm = c.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::Domain(format!("state vector must have unit norm, got {norm}")));
        }
        let density = &c * c.adjoint();
        Ok(State { kind: StateKind::Vector(c), density })
    }

    /// Convex combination `Σ w_k ω_k`.
    pub fn mixture(parts: Vec<(f64, State)>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Domain("empty mixture".into()))?;
        let n = first.1.dim();
        if parts.iter().any(|(w, s)| !(*w >= 0.0) || s.dim() != n) {
            return Err(Error::Domain("mixture weights must be nonnegative and states of equal size".into()));
        }
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::Domain(format!("mixture weights sum to {total}")));
        }
        let mut density = DMatrix::zeros(n, n);
        for (w, s) in &parts {
            density += &s.density * Complex64::new(*w, 0.0);
        }
        Ok(State { kind: StateKind::Mixture(parts), density })
    }

    /// Vector state `ψ_s` with `c_m ∝ (m+1)^{−s/2}`, normalized on the
    /// truncation.
    pub fn power_law(s: f64, n: usize) -> Result<Self> {
        let z = zeta(s)?;
        let mut c = DVector::from_fn(n, |m, _| Complex64::new((z * ((m + 1) as f64).powf(s)).powf(-0.5), 0.0));
        let norm = c.norm();
        c /= Complex64::new(norm, 0.0);
        Self::vector(c)
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn density(&self) -> &DMatrix<Complex64> {
        &self.density
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    /// Short description such as `pure:3`.
    pub fn label(&self) -> String {
        match &self.kind {
            StateKind::PureBasis(m) => format!("pure:{m}"),
            StateKind::Vector(_) => "vector".into(),
            StateKind::Mixture(parts) => {
                let items: Vec<String> = parts.iter().map(|(w, s)| format!("{w},{}", s.label())).collect();
                format!("mix:{}", items.join(";"))
            }
        }
    }

    /// Trace and positivity defects of the density.
    pub fn validate(&self) -> Result<()> {
        let tr = self.density.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Domain(format!("density trace is {tr}")));
        }
        let min = self.density.clone().symmetric_eigen().eigenvalues.min();
        if min < -STATE_TOL {
            return Err(Error::Domain(format!("density has negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Pure basis state `m` when this is one.
    pub fn as_pure(&self) -> Option<usize> {
        match self.kind {
            StateKind::PureBasis(m) => Some(m),
            _ => None,
        }
    }
}

/// `tr(ρ a)`.
pub fn evaluate_state(w: &State, a: &TruncatedElement) -> Result<Complex64> {
    if w.dim() != a.trunc() {
        return Err(Error::Dimension(format!("state of size {} applied to element of size {}", w.dim(), a.trunc())));
    }
    Ok(w.density.iter().zip(a.coeffs().transpose().iter()).map(|(r, x)| r * x).sum())
}

/// Riemann zeta for `s > 1`, Euler–Maclaurin with the tail from `m = cutoff`.
pub fn zeta_with_cutoff(s: f64, cutoff: usize) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("zeta needs s > 1, got {s}")));
    }
    const BERNOULLI: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let m = cutoff.max(8) as f64;
    let head: f64 = (1..cutoff.max(8)).rev().map(|k| (k as f64).powf(-s)).sum();
    let mut tail = m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s);
    // rising factorial s(s+1)…(s+2j−2) over (2j)!
    let mut coef = s / 2.0;
    let mut power = m.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        tail += b * coef * power;
        let k = 2.0 * (j + 1) as f64;
        coef *= (s + k - 1.0) * (s + k) / ((k + 1.0) * (k + 2.0));
        power /= m * m;
    }
    Ok(head + tail)
}

pub fn zeta(s: f64) -> Result<f64> {
    zeta_with_cutoff(s, 32)
}

/// `d_{D₀}(ω_m, ω_n) = √(θ/2) Σ_{k=n+1}^{m} k^{−1/2}`.
pub fn standard_pure_distance(theta: f64, m: usize, n: usize) -> f64 {
    let (lo, hi) = (m.min(n), m.max(n));
    (theta / 2.0).sqrt() * (lo + 1..=hi).map(|k| 1.0 / (k as f64).sqrt()).sum::<f64>()
}

/// Closed-form pure-state distance, by the homothety factor and by the
/// effective Clifford metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: f64,
    pub via_metric: f64,
    pub ratio_to_standard: f64,
}

pub fn distance_closed_form(kind: &DiracKind, params: &DiracParams, m: usize, n: usize) -> Result<ClosedForm> {
    let d0 = standard_pure_distance(params.theta, m, n);
    if *kind == DiracKind::Landau && params.xi == 1.0 {
        return Ok(ClosedForm { value: f64::INFINITY, via_metric: f64::INFINITY, ratio_to_standard: f64::INFINITY });
    }
    let ratio = 1.0 / homothety_factor(kind, params);
    let metric = clifford_metric(kind, params)?;
    let value = d0 * ratio;
    let via_metric = d0 * metric.det_g_quarter;
    if (metric.det_g_quarter - ratio).abs() > 1e-10 * ratio {
        return Err(Error::Precondition(format!(
            "Clifford metric factor {} disagrees with homothety factor {ratio}",
            metric.det_g_quarter
        )));
    }
    Ok(ClosedForm { value, via_metric, ratio_to_standard: ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Exact optimum over real diagonal elements.
    DiagonalLp,
    /// Ratio ascent over hermitian elements, started from the diagonal optimum.
    Subgradient,
}

#[derive(Debug, Clone)]
pub struct DistanceProblem {
    pub kind: DiracKind,
    pub params: DiracParams,
    pub state_a: State,
    pub state_b: State,
    pub solver: SolverMode,
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl DistanceProblem {
    pub fn new(kind: DiracKind, params: DiracParams, state_a: State, state_b: State, solver: SolverMode) -> Self {
        DistanceProblem { kind, params, state_a, state_b, solver, tol: 1e-9, seed: 0, max_iter: 400 }
    }

    pub fn trunc(&self) -> usize {
        self.state_a.dim()
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub lower_bound: f64,
    pub witness: TruncatedElement,
    /// `ℓ_D` of the witness; at most `1 + tol`.
    pub witness_seminorm: f64,
    pub closed_form: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub enum DistanceOutcome {
    Finite(SolverReport),
    /// The seminorm vanishes identically and the distance is not finite.
    Infinite { reason: String },
}

impl DistanceOutcome {
    pub fn finite(self) -> Option<SolverReport> {
        match self {
            DistanceOutcome::Finite(r) => Some(r),
            DistanceOutcome::Infinite { .. } => None,
        }
    }
}

type BoundKey = (String, [u64; 3], usize);

fn bound_cache() -> &'static Mutex<HashMap<BoundKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<BoundKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `1/ℓ_D(Σ_{q>p} f_qq)` for `p < N − 1`, from the assembled commutator.
/// These are the per-step increment limits of a feasible diagonal element.
pub fn step_bounds(kind: &DiracKind, params: &DiracParams, n: usize, tables: &LadderTables) -> Result<Arc<Vec<f64>>> {
    let key = (format!("{kind:?}"), [params.theta.to_bits(), params.omega.to_bits(), params.xi.to_bits()], n);
    if let Some(b) = bound_cache().lock().expect("bound cache poisoned").get(&key) {
        return Ok(b.clone());
    }
    let d = SpinorOperator::build(kind.clone(), *params, n, tables)?;
    let opts = NormOptions::default();
    let mut bounds = Vec::with_capacity(n - 1);
    for p in 0..n - 1 {
        let diag: Vec<f64> = (0..n).map(|q| if q > p { 1.0 } else { 0.0 }).collect();
        let step = TruncatedElement::diagonal(params.theta, &diag)?;
        let l = seminorm_direct(&d, &step, tables, &opts)?;
        bounds.push(if l > 0.0 { 1.0 / l } else { f64::INFINITY });
    }
    let bounds = Arc::new(bounds);
    bound_cache().lock().expect("bound cache poisoned").insert(key, bounds.clone());
    Ok(bounds)
}

fn density_gap(p: &DistanceProblem) -> Result<DMatrix<Complex64>> {
    if p.state_a.dim() != p.state_b.dim() {
        return Err(Error::Dimension("states live on different truncations".into()));
    }
    if p.trunc() < 2 {
        return Err(Error::Dimension("truncation must be at least 2".into()));
    }
    Ok(p.state_a.density() - p.state_b.density())
}

fn pure_closed_form(p: &DistanceProblem) -> Result<Option<f64>> {
    match (p.state_a.as_pure(), p.state_b.as_pure()) {
        (Some(m), Some(n)) => Ok(Some(distance_closed_form(&p.kind, &p.params, m, n)?.value)),
        _ => Ok(None),
    }
}

/// Best real diagonal element: increments `±bound_p` signed by the tail sums
/// of the diagonal density gap.
fn diagonal_optimum(gap: &DMatrix<Complex64>, bounds: &[f64], theta: f64) -> Result<(f64, TruncatedElement)> {
    let n = gap.nrows();
    let diag: Vec<f64> = (0..n).map(|q| gap[(q, q)].re).collect();
    let mut alpha = vec![0.0; n];
    let mut tail: f64 = diag.iter().sum::<f64>() - diag[0];
    let mut value = 0.0;
    for p in 0..n - 1 {
        let step = if tail.abs() > 0.0 { bounds[p] * tail.signum() } else { 0.0 };
        alpha[p + 1] = alpha[p] + step;
        value += step * tail;
        tail -= diag[p + 1];
    }
    Ok((value, TruncatedElement::diagonal(theta, &alpha)?))
}

fn check_witness(p: &DistanceProblem, w: &TruncatedElement, tables: &LadderTables) -> Result<f64> {
    let l = seminorm_closed_form(&p.kind, &p.params, w, tables)?;
    if l > 1.0 + p.tol {
        return Err(Error::Calibration { table: "del".into(), residual: l - 1.0, limit: p.tol });
    }
    Ok(l)
}

/// Spectral distance lower bound with a feasible witness.
pub fn distance(p: &DistanceProblem, tables: &LadderTables) -> Result<DistanceOutcome> {
    let gap = density_gap(p)?;
    if p.kind == DiracKind::Landau && p.params.xi == 1.0 {
        return Ok(DistanceOutcome::Infinite { reason: "Landau operator at xi = 1 has vanishing commutators".into() });
    }
    let n = p.trunc();
    let closed_form = pure_closed_form(p)?;
    let bounds = step_bounds(&p.kind, &p.params, n, tables)?;
    let (value, witness) = diagonal_optimum(&gap, &bounds, p.params.theta)?;
    match p.solver {
        SolverMode::DiagonalLp => {
            let l = check_witness(p, &witness, tables)?;
            let lower_bound = evaluate_gap(&gap, &witness).max(0.0);
            debug_assert!((lower_bound - value).abs() <= 1e-9 * (1.0 + value));
            Ok(DistanceOutcome::Finite(SolverReport {
                lower_bound,
                witness,
                witness_seminorm: l,
                closed_form,
                converged: true,
                iterations: 1,
            }))
        }
        SolverMode::Subgradient => {
            let mut report = ratio_ascent(p, &gap, witness, tables)?;
            report.closed_form = closed_form;
            Ok(DistanceOutcome::Finite(report))
        }
    }
}

fn evaluate_gap(gap: &DMatrix<Complex64>, a: &TruncatedElement) -> f64 {
    gap.iter().zip(a.coeffs().transpose().iter()).map(|(r, x)| r * x).sum::<Complex64>().re
}

/// Seminorm of a hermitian element and its gradient in the Frobenius pairing.
struct SeminormModel {
    factor: f64,
    left: SparseMat,
    right: SparseMat,
    opts: NormOptions,
}

impl SeminormModel {
    fn new(p: &DistanceProblem, tables: &LadderTables) -> Result<Self> {
        let (left, right) = tables.action(LadderOp::Derivative(Derivative::Holomorphic), p.trunc(), p.params.theta)?;
        let factor = std::f64::consts::SQRT_2 * homothety_factor(&p.kind, &p.params);
        Ok(SeminormModel { factor, left, right, opts: NormOptions { tol: 1e-10, max_iter: 300, seed: p.seed } })
    }

    /// For hermitian `a`, `‖∂a‖ = ‖∂̄a‖`, so `ℓ = c σ_max(∂a)`.
    fn eval(&self, a: &DMatrix<Complex64>) -> Result<(f64, DMatrix<Complex64>)> {
        let mut b = self.left.left_mul(a);
        self.right.right_mul_acc(Complex64::new(1.0, 0.0), a, &mut b);
        let (sigma, u, v) = top_singular_triplet(&b, &self.opts)?;
        let g = &u * v.adjoint();
        let mut grad = self.left.adjoint().left_mul(&g);
        self.right.adjoint().right_mul_acc(Complex64::new(1.0, 0.0), &g, &mut grad);
        let grad = (&grad + grad.adjoint()) * Complex64::new(0.5 * self.factor, 0.0);
        Ok((self.factor * sigma, grad))
    }
}

fn ratio_ascent(p: &DistanceProblem, gap: &DMatrix<Complex64>, start: TruncatedElement, tables: &LadderTables) -> Result<SolverReport> {
    let theta = p.params.theta;
    let model = SeminormModel::new(p, tables)?;
    let objective = |a: &DMatrix<Complex64>| -> Complex64 { gap.iter().zip(a.transpose().iter()).map(|(r, x)| r * x).sum() };

    let mut a = start.coeffs().clone();
    if a.norm() == 0.0 {
        a = (gap + gap.adjoint()) * Complex64::new(0.5, 0.0);
    }
    let (l, _) = model.eval(&a)?;
    if l == 0.0 {
        let witness = TruncatedElement::zeros(theta, p.trunc())?;
        return Ok(SolverReport { lower_bound: 0.0, witness, witness_seminorm: 0.0, closed_form: None, converged: true, iterations: 0 });
    }
    a /= Complex64::new(l, 0.0);
    let eta0 = 0.05 * a.norm();
    let mut best = (objective(&a).re, a.clone());
    let mut since_best = 0;
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=p.max_iter {
        iterations = k;
        let (l, grad_l) = model.eval(&a)?;
        a /= Complex64::new(l, 0.0);
        let f = objective(&a).re;
        if f > best.0 + p.tol * best.0.abs().max(1.0) {
            best = (f, a.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= 60 {
                converged = true;
                break;
            }
        }
        let step = gap - grad_l * Complex64::new(f / l, 0.0);
        let step = (&step + step.adjoint()) * Complex64::new(0.5, 0.0);
        let norm = step.norm();
        if norm == 0.0 {
            converged = true;
            break;
        }
        a += step * Complex64::new(eta0 / ((k as f64).sqrt() * norm), 0.0);
    }
    let (l, _) = model.eval(&best.1)?;
    let mut witness = TruncatedElement::new(theta, &best.1 / Complex64::new(l, 0.0))?;
    if evaluate_gap(gap, &witness) < evaluate_gap(gap, &start) {
        witness = start;
    }
    let l = check_witness(p, &witness, tables)?;
    let lower_bound = evaluate_gap(gap, &witness).max(0.0);
    Ok(SolverReport { lower_bound, witness, witness_seminorm: l, closed_form: None, converged, iterations })
}

/// Diagonal element with increments `√(θ/2)/√k` up to index `m`, constant
/// beyond; its `ℓ_{D₀}` is one.
pub fn optimal_witness_candidate(theta: f64, m: usize, n: usize, tables: &LadderTables) -> Result<TruncatedElement> {
    if m + 1 >= n {
        return Err(Error::Dimension(format!("index {m} needs truncation above {}", m + 1)));
    }
    let mut acc = 0.0;
    let diag: Vec<f64> = (0..n)
        .map(|p| {
            if p >= 1 && p <= m {
                acc += (theta / 2.0).sqrt() / (p as f64).sqrt();
            }
            acc
        })
        .collect();
    let a = TruncatedElement::diagonal(theta, &diag)?;
    let l = crate::lipschitz::seminorm_standard(&a, tables)?;
    if l > 1.0 + 1e-9 {
        return Err(Error::Calibration { table: "del".into(), residual: l - 1.0, limit: 1e-9 });
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub trunc: usize,
    pub lower_bound: f64,
    pub converged: bool,
}

/// Distance lower bounds between `ψ_{s1}` and `ψ_{s2}` over growing
/// truncations.
pub fn divergence_probe(s1: f64, s2: f64, kind: &DiracKind, params: &DiracParams, truncs: &[usize], tables: &LadderTables) -> Result<Vec<ProbeRow>> {
    truncs
        .iter()
        .map(|&n| {
            let problem = DistanceProblem::new(kind.clone(), *params, State::power_law(s1, n)?, State::power_law(s2, n)?, SolverMode::Subgradient);
            match distance(&problem, tables)? {
                DistanceOutcome::Finite(r) => Ok(ProbeRow { trunc: n, lower_bound: r.lower_bound, converged: r.converged }),
                DistanceOutcome::Infinite { .. } => Ok(ProbeRow { trunc: n, lower_bound: f64::INFINITY, converged: true }),
            }
        })
        .collect()
}

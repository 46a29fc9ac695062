//! Invariant suites behind `moyal verify`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use moyal_core::dirac::{
    clifford_metric, covariant_dirac_residual, fit_levels, harmonic_hamiltonian, hermitian_spectrum, landau_hamiltonian,
    self_adjointness_residual, square_identity_check, BlockOp, DiracKind, DiracParams, GammaRep, SpinorOperator,
};
use moyal_core::kernels;
use moyal_core::lipschitz::{homothety_factor, lipschitz_seminorm, seminorm_standard, unitary_diag_check, SeminormMethod};
use moyal_core::states::{distance, distance_closed_form, divergence_probe, DistanceOutcome, DistanceProblem, SolverMode, State};
use moyal_core::{Derivative, Error, LadderTables, NormSpec, Result, TruncatedElement, XtildeMode};

pub const SUITES: [&str; 5] = ["algebra", "dirac", "lipschitz", "distance", "kernels"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Reported,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub anchor: &'static str,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub relation: Relation,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub theta: f64,
    pub n: usize,
    pub seed: u64,
}

struct Recorder {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Recorder {
    fn new(suite: &'static str) -> Self {
        Recorder { suite, checks: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, anchor: &'static str, relation: Relation, limit: Option<f64>, value: Result<f64>) {
        let (value, error) = match value {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let status = match (relation, value, limit) {
            (_, None, _) => Status::Fail,
            (Relation::Reported, Some(_), _) => Status::Info,
            (Relation::AtMost, Some(v), Some(l)) if v <= l => Status::Pass,
            (Relation::AtLeast, Some(v), Some(l)) if v >= l => Status::Pass,
            _ => Status::Fail,
        };
        self.checks.push(Check { suite: self.suite, name: name.into(), anchor, value, limit, relation, status, error });
    }

    fn at_most(&mut self, name: impl Into<String>, anchor: &'static str, limit: f64, value: Result<f64>) {
        self.push(name, anchor, Relation::AtMost, Some(limit), value);
    }

    fn at_least(&mut self, name: impl Into<String>, anchor: &'static str, limit: f64, value: Result<f64>) {
        self.push(name, anchor, Relation::AtLeast, Some(limit), value);
    }

    fn report(&mut self, name: impl Into<String>, anchor: &'static str, value: Result<f64>) {
        self.push(name, anchor, Relation::Reported, None, value);
    }
}

fn rel(x: &TruncatedElement, y: &TruncatedElement) -> Result<f64> {
    let scale = x.frobenius().max(y.frobenius()).max(f64::MIN_POSITIVE);
    Ok(x.sub(y)?.frobenius() / scale)
}

fn rel_scalar(x: f64, want: f64) -> f64 {
    (x - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

fn random(cfg: &SuiteConfig, theta: f64, margin: usize, hermitian: bool, rng: &mut ChaCha8Rng) -> Result<TruncatedElement> {
    TruncatedElement::random_interior(theta, cfg.n, margin, hermitian, rng)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn algebra(cfg: &SuiteConfig, tables: &LadderTables) -> Result<Vec<Check>> {
    let mut r = Recorder::new("algebra");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let theta = cfg.theta;
    let (a, b, c) = (random(cfg, theta, 0, false, &mut rng)?, random(cfg, theta, 0, false, &mut rng)?, random(cfg, theta, 0, false, &mut rng)?);

    r.at_most("associativity", "matrix-base product", 1e-12, (|| rel(&a.star(&b)?.star(&c)?, &a.star(&b.star(&c)?)?))());
    r.at_most("involution_reverses_products", "involution anti-homomorphism", 1e-12, (|| {
        rel(&a.star(&b)?.involution(), &b.involution().star(&a.involution())?)
    })());
    r.at_most("trace_property", "faithful trace", 1e-12, (|| {
        let gap = (a.star(&b)?.trace_integral() - b.star(&a)?.trace_integral()).norm();
        Ok(gap / (2.0 * PI * theta * a.frobenius() * b.frobenius()))
    })());
    r.at_most("trace_of_ground_state", "trace normalization", 1e-15, (|| {
        Ok(rel_scalar(TruncatedElement::unit(theta, cfg.n, 0, 0)?.trace_integral().re, 2.0 * PI * theta))
    })());
    r.at_most("norm_00_is_coefficient_l2", "weighted coefficient norms", 1e-14, Ok(rel_scalar(a.norm_st(NormSpec::new(0.0, 0.0)), a.frobenius())));

    let (p, q) = (random(cfg, theta, 2, false, &mut rng)?, random(cfg, theta, 2, false, &mut rng)?);
    for (label, which) in [("del", Derivative::Holomorphic), ("delbar", Derivative::AntiHolomorphic), ("d1", Derivative::X1), ("d2", Derivative::X2)] {
        r.at_most(format!("leibniz_{label}"), "Leibniz rule", 1e-10, (|| {
            let lhs = p.star(&q)?.derivative(which, tables)?;
            let rhs = p.derivative(which, tables)?.star(&q)?.add(&p.star(&q.derivative(which, tables)?)?)?;
            rel(&lhs, &rhs)
        })());
    }
    for mu in [1, 2] {
        let d = || p.derivative(Derivative::partial(mu), tables);
        let left = || p.xtilde_apply(mu, XtildeMode::StarLeft, tables);
        let right = || p.xtilde_apply(mu, XtildeMode::StarRight, tables);
        let point = || p.xtilde_apply(mu, XtildeMode::Pointwise, tables);
        r.at_most(format!("inner_derivation_mu{mu}"), "derivations are inner", 1e-10, (|| {
            let comm = left()?.sub(&right()?)?.scale(Complex64::new(0.0, -0.5));
            rel(&d()?, &comm)
        })());
        r.at_most(format!("star_vs_pointwise_mu{mu}"), "coordinate star product", 1e-10, (|| {
            rel(&left()?, &point()?.add(&d()?.scale(I))?)
        })());
        r.at_most(format!("anticommutator_mu{mu}"), "coordinate anticommutator", 1e-10, (|| {
            rel(&left()?.add(&right()?)?, &point()?.scale(Complex64::new(2.0, 0.0)))
        })());
    }

    // the weights θ(m+½) are at least one only for θ ≥ 2
    let tn = theta.max(2.0);
    let (x, y) = (random(cfg, tn, 0, false, &mut rng)?, random(cfg, tn, 0, false, &mut rng)?);
    let mono = [((0.0, 0.0), (1.0, 0.5)), ((0.5, 1.0), (1.0, 1.0)), ((-1.0, 0.0), (0.0, 2.0))];
    let worst = mono.iter().map(|&((u, v), (s, t))| x.norm_st(NormSpec::new(u, v)) / x.norm_st(NormSpec::new(s, t))).fold(0.0, f64::max);
    r.at_most("norm_monotonicity", "norm ordering", 1.0, Ok(worst));
    let sub = [(1.0, 0.0, 0.0, 1.0), (2.0, 1.0, -1.0, 0.0), (1.0, 0.5, 0.0, 2.0)];
    let worst = (|| {
        let xy = x.star(&y)?;
        Ok(sub
            .iter()
            .map(|&(s, t, q, rr)| xy.norm_st(NormSpec::new(s, rr)) / (x.norm_st(NormSpec::new(s, t)) * y.norm_st(NormSpec::new(q, rr))))
            .fold(0.0, f64::max))
    })();
    r.at_most("norm_submultiplicativity", "norm product inequality", 1.0, worst);
    Ok(r.checks)
}

fn families(theta: f64) -> Vec<(DiracKind, DiracParams)> {
    let mut out = vec![(DiracKind::Standard, DiracParams::standard(theta))];
    for omega in [0.25, 0.5, 1.0] {
        out.push((DiracKind::Harmonic(GammaRep::D1), DiracParams::harmonic(theta, omega)));
    }
    out.push((DiracKind::Harmonic(GammaRep::D2), DiracParams::harmonic(theta, 0.5)));
    for xi in [-0.5, 0.5, 2.0, 3.0] {
        out.push((DiracKind::Landau, DiracParams::landau(theta, xi)));
    }
    for xi in [0.5, 3.0] {
        out.push((DiracKind::TwistedLandau, DiracParams::landau(theta, xi)));
    }
    out
}

fn label(kind: &DiracKind, p: &DiracParams) -> String {
    match kind {
        DiracKind::Standard => kind.name().to_string(),
        DiracKind::Harmonic(_) => format!("{}_omega{}", kind.name(), p.omega),
        _ => format!("{}_xi{}", kind.name(), p.xi),
    }
}

pub fn dirac(cfg: &SuiteConfig, tables: &LadderTables) -> Result<Vec<Check>> {
    let mut r = Recorder::new("dirac");
    let theta = cfg.theta;
    for (kind, p) in families(theta) {
        let tag = label(&kind, &p);
        r.at_most(format!("self_adjoint_{tag}"), "symmetric Dirac operator", 1e-10, (|| {
            let d = SpinorOperator::build(kind.clone(), p, cfg.n, tables)?;
            self_adjointness_residual(&d, 1, 3, cfg.seed)
        })());
        r.at_most(format!("square_{tag}"), "square of the Dirac operator", 1e-10, (|| {
            let rep = square_identity_check(&kind, &p, cfg.n, 2, cfg.seed, tables)?;
            Ok([Some(rep.residual), rep.spinor_term_residual, rep.landau_split_residual, rep.block_diagonal_residual]
                .into_iter()
                .flatten()
                .fold(0.0, f64::max))
        })());
        r.at_most(format!("metric_factor_{tag}"), "effective Clifford metric", 1e-10, (|| {
            let set = clifford_metric(&kind, &p)?;
            Ok(rel_scalar(set.det_g_quarter, 1.0 / homothety_factor(&kind, &p)))
        })());
    }
    for xi in [0.5, 2.0] {
        r.at_most(format!("covariant_form_xi{xi}"), "covariant Landau operator", 1e-10, covariant_dirac_residual(xi, theta, cfg.n, 1, cfg.seed, tables));
    }

    let id = nalgebra::DMatrix::<Complex64>::identity(1, 1);
    let omega = 0.5;
    let hh = (|| Ok(hermitian_spectrum(&BlockOp::tensor(&id, &harmonic_hamiltonian(omega, theta, cfg.n, tables)?), 1e-8)))();
    match hh {
        Ok(spec) => {
            let k = cfg.n / 4;
            let bad = spec.clusters.iter().take(k).enumerate().filter(|(j, c)| c.multiplicity != j + 1).count();
            r.at_most("harmonic_multiplicities", "finite multiplicities of the harmonic spectrum", 0.0, Ok(bad as f64));
            let fit = fit_levels(&spec.clusters, k).ok_or_else(|| Error::Domain("too few clusters".into()));
            r.at_most("harmonic_level_linearity", "finite multiplicities of the harmonic spectrum", 1e-8, fit.as_ref().map(|f| f.max_deviation).map_err(|e| Error::Domain(e.to_string())));
            r.report("harmonic_prefactor_ratio", "stated harmonic spectrum", fit.map(|f| f.spacing / (omega / theta)));
        }
        Err(e) => r.at_most("harmonic_multiplicities", "finite multiplicities of the harmonic spectrum", 0.0, Err(e)),
    }
    let xi = 1.0;
    let level_mult = |n: usize| -> Result<(usize, f64)> {
        let spec = hermitian_spectrum(&BlockOp::tensor(&id, &landau_hamiltonian(xi, theta, n, tables)?), 1e-8);
        let fit = fit_levels(&spec.clusters, 4).ok_or_else(|| Error::Domain("too few clusters".into()))?;
        Ok((spec.clusters[0].multiplicity, fit.spacing))
    };
    let small = level_mult(cfg.n / 2);
    let large = level_mult(cfg.n);
    r.at_least("landau_multiplicity_growth", "infinitely degenerate Landau levels", 1.0, (|| {
        let (a, b) = (small?.0, large.as_ref().map_err(|e| Error::Domain(e.to_string()))?.0);
        Ok(b as f64 - a as f64)
    })());
    r.report("landau_prefactor_ratio", "stated Landau spectrum", large.map(|(_, s)| s / (8.0 * xi / theta)));
    Ok(r.checks)
}

pub fn lipschitz(cfg: &SuiteConfig, tables: &LadderTables) -> Result<Vec<Check>> {
    let mut r = Recorder::new("lipschitz");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<TruncatedElement> = (0..3).map(|_| random(cfg, cfg.theta, 2, true, &mut rng)).collect::<Result<_>>()?;
    for (kind, p) in families(cfg.theta) {
        r.at_most(format!("closed_form_{}", label(&kind, &p)), "homothetic seminorms", 1e-8, (|| {
            let d = SpinorOperator::build(kind.clone(), p, cfg.n, tables)?;
            let mut worst = 0.0f64;
            for a in &samples {
                worst = worst.max(lipschitz_seminorm(&d, a, SeminormMethod::Direct, tables)?.residual);
            }
            Ok(worst)
        })());
    }
    for omega in [0.25, 0.5, 1.0] {
        r.at_most(format!("unitary_diagonalization_omega{omega}"), "unitary diagonalization of the harmonic commutator", 1e-9, (|| {
            let mut worst = 0.0f64;
            for a in &samples {
                worst = worst.max(unitary_diag_check(omega, a, tables)?);
            }
            Ok(worst)
        })());
    }
    r.at_most("degenerate_landau_vanishes", "vanishing seminorm at xi = 1", 1e-10, (|| {
        let d = SpinorOperator::build(DiracKind::Landau, DiracParams::landau(cfg.theta, 1.0), cfg.n, tables)?;
        let a = &samples[0];
        Ok(lipschitz_seminorm(&d, a, SeminormMethod::Direct, tables)?.value / seminorm_standard(a, tables)?)
    })());
    Ok(r.checks)
}

fn pure_distance(kind: &DiracKind, p: &DiracParams, m: usize, k: usize, n: usize, tables: &LadderTables) -> Result<DistanceOutcome> {
    let problem = DistanceProblem::new(kind.clone(), *p, State::pure_basis(m, n)?, State::pure_basis(k, n)?, SolverMode::DiagonalLp);
    distance(&problem, tables)
}

fn finite(o: DistanceOutcome) -> Result<f64> {
    match o {
        DistanceOutcome::Finite(r) => Ok(r.lower_bound),
        DistanceOutcome::Infinite { reason } => Err(Error::Domain(reason)),
    }
}

pub fn distance_suite(cfg: &SuiteConfig, tables: &LadderTables) -> Result<Vec<Check>> {
    let mut r = Recorder::new("distance");
    let (theta, n) = (cfg.theta, cfg.n);
    let d0 = DiracParams::standard(theta);
    let std_kind = DiracKind::Standard;
    let mut worst = Ok(0.0f64);
    for m in 1..=4 {
        for k in 0..m {
            worst = worst.and_then(|w: f64| {
                let got = finite(pure_distance(&std_kind, &d0, m, k, n, tables)?)?;
                Ok(w.max(rel_scalar(got, distance_closed_form(&std_kind, &d0, m, k)?.value)))
            });
        }
    }
    r.at_most("pure_state_formula", "distance between basis states", 1e-2, worst);

    let base = finite(pure_distance(&std_kind, &d0, 3, 0, n, tables)?)?;
    for (kind, p) in families(theta).into_iter().skip(1) {
        let tag = label(&kind, &p);
        r.at_most(format!("homothety_{tag}"), "homothetic distances", 1e-2, (|| {
            let got = finite(pure_distance(&kind, &p, 3, 0, n, tables)?)?;
            Ok(rel_scalar(got / base, 1.0 / homothety_factor(&kind, &p)))
        })());
    }
    r.at_least("degenerate_landau_is_infinite", "vanishing seminorm at xi = 1", 1.0, (|| {
        let o = pure_distance(&DiracKind::Landau, &DiracParams::landau(theta, 1.0), 1, 0, n, tables)?;
        Ok(if matches!(o, DistanceOutcome::Infinite { .. }) { 1.0 } else { 0.0 })
    })());

    let d = |m: usize, k: usize| finite(pure_distance(&std_kind, &d0, m, k, n, tables)?);
    r.at_most("symmetry", "distance axioms", 1e-12, (|| Ok((d(2, 0)? - d(0, 2)?).abs()))());
    r.at_most("geodesic_additivity", "distance between basis states", 1e-9, (|| {
        Ok(rel_scalar(d(0, 1)? + d(1, 2)?, d(0, 2)?))
    })());

    let small = n.min(16);
    r.at_least("subgradient_improves_on_lp", "supremum over the Lipschitz ball", -1e-12, (|| {
        let mix = State::mixture(vec![(0.5, State::pure_basis(0, small)?), (0.5, State::pure_basis(2, small)?)])?;
        let one = State::pure_basis(1, small)?;
        let mut lp = DistanceProblem::new(std_kind.clone(), d0, mix.clone(), one.clone(), SolverMode::DiagonalLp);
        lp.seed = cfg.seed;
        let mut sg = DistanceProblem::new(std_kind.clone(), d0, mix, one, SolverMode::Subgradient);
        sg.seed = cfg.seed;
        let a = finite(distance(&lp, tables)?)?;
        let b = distance(&sg, tables)?.finite().ok_or_else(|| Error::Domain("unexpected infinite outcome".into()))?;
        if b.witness_seminorm > 1.0 + 1e-6 {
            return Err(Error::Domain(format!("witness seminorm {} exceeds one", b.witness_seminorm)));
        }
        Ok(b.lower_bound - a)
    })());
    let probe = divergence_probe(1.1, 1.4, &std_kind, &d0, &[8, 16, 32], tables);
    match probe {
        Ok(rows) => {
            let gaps = rows.windows(2).map(|w| w[1].lower_bound - w[0].lower_bound).fold(f64::INFINITY, f64::min);
            r.at_least("power_law_bounds_increase", "states at infinite distance", 1e-12, Ok(gaps));
            r.report("power_law_bound_growth", "states at infinite distance", Ok(rows[2].lower_bound / rows[0].lower_bound));
        }
        Err(e) => r.at_least("power_law_bounds_increase", "states at infinite distance", 1e-12, Err(e)),
    }
    Ok(r.checks)
}

pub fn kernels_suite(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut r = Recorder::new("kernels");
    let theta = cfg.theta;
    r.at_most("bessel_k0_at_one", "modified Bessel function", 1e-12, kernels::bessel_k0(1.0).map(|k| rel_scalar(k, 0.42102443824070833)));
    r.at_most("k0_squared_integral", "square integral of K0", 1e-6, kernels::k0_squared_integral().map(|v| (v - PI * PI / 4.0).abs()));
    let xi = 2.0;
    let grid: Vec<f64> = (1..=50).map(|k| 0.1 * k as f64).collect();
    r.at_least("phi_below_k0", "Gaussian heat kernel bound", 0.0, (|| {
        let rows = kernels::phi_sweep(&grid, xi, theta, 1.0)?;
        Ok(rows.iter().map(|row| row.slack).fold(f64::INFINITY, f64::min))
    })());
    for (th, x) in [(2.0, 1.0), (2.0, 2.0), (1.0, 0.5)] {
        r.at_most(format!("phi_l2_bound_theta{th}_xi{x}"), "square integral of the kernel", 1.0, (|| {
            Ok(kernels::phi_l2_squared(x, th, 0.0)? / kernels::phi_l2_bound(x, th))
        })());
    }
    r.at_most("hs_divergence_slope", "Hilbert-Schmidt blow-up at xi = 1", 0.1, (|| {
        let a = TruncatedElement::unit(theta, 8, 0, 0)?;
        let deltas: Vec<f64> = (0..7).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect();
        let xis: Vec<f64> = deltas.iter().map(|d| 1.0 - d).collect();
        let rows = kernels::hs_sweep(&a, &xis, 1.0)?;
        let vals: Vec<f64> = rows.iter().map(|row| row.value).collect();
        Ok((kernels::log_log_slope(&deltas, &vals) + 2.0).abs())
    })());
    r.at_most("heat_kernel_semigroup", "Landau heat kernel", 1e-8, (|| {
        let (x, y) = ([0.3, -0.2], [-0.1, 0.4]);
        let k12 = kernels::heat_kernel_composition(x, y, 0.4, 0.7, xi, theta, 8.0, 401)?;
        let k = kernels::heat_kernel_landau(x, y, 1.1, xi, theta)?;
        Ok((k12 / k - theta / (4.0 * xi)).norm())
    })());
    r.at_most("resolvent_kernel_is_phase_times_phi", "Landau resolvent kernel", 1e-8, (|| {
        let (x, y) = ([0.4, -0.2], [-0.3, 0.5]);
        let k = kernels::landau_resolvent_kernel(x, y, xi, theta, 1.0)?;
        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        Ok(rel_scalar(k.norm(), kernels::phi_integral(d2, xi, theta, 1.0)?))
    })());
    r.at_most("momentum_integral", "free resolvent kernel", 1e-10, (|| {
        let a = TruncatedElement::unit(theta, 8, 0, 0)?;
        Ok(rel_scalar(kernels::resolvent_kernel_standard(&a, 2.0)?.momentum_integral, PI / 2.0))
    })());
    Ok(r.checks)
}

/// Runs one named suite or `all`.
pub fn run(suite: &str, cfg: &SuiteConfig, tables: &LadderTables) -> Result<Vec<Check>> {
    match suite {
        "algebra" => algebra(cfg, tables),
        "dirac" => dirac(cfg, tables),
        "lipschitz" => lipschitz(cfg, tables),
        "distance" => distance_suite(cfg, tables),
        "kernels" => kernels_suite(cfg),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run(s, cfg, tables)?);
            }
            Ok(out)
        }
        _ => Err(Error::Configuration(format!("unknown suite `{suite}` (algebra, dirac, lipschitz, distance, kernels, all)"))),
    }
}

fn show(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into())
}

/// Fixed-width traceability table.
pub fn render_table(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        };
        let rel = match c.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Reported => "  ",
        };
        let _ = write!(out, "{status}  {:<48} {:>14} {rel} {:<14} anchor: {}", format!("{}/{}", c.suite, c.name), show(c.value), show(c.limit), c.anchor);
        if let Some(e) = &c.error {
            let _ = write!(out, "  error: {e}");
        }
        out.push('\n');
    }
    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    let _ = writeln!(out, "{} checks, {failed} failed", checks.len());
    out
}

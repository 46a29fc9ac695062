//! Acceptance criteria 1–9, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use moyal_core::dirac::{
    clifford_metric, harmonic_hamiltonian, hermitian_spectrum, landau_hamiltonian, BlockOp, DiracKind, DiracParams, GammaRep,
    SpinorOperator,
};
use moyal_core::kernels;
use moyal_core::linalg::NormOptions;
use moyal_core::lipschitz::{seminorm_direct, unitary_diag_check};
use moyal_core::plane::{ladder_calibration, moyal_star_quadrature, project_coefficients, BasisCache, Grid, QuadratureSpec};
use moyal_core::states::{distance, divergence_probe, DistanceOutcome, DistanceProblem, SolverMode, State};
use moyal_core::{Derivative, LadderTables, TruncatedElement, XtildeMode};

type Outcome = (bool, String);

fn tables() -> &'static LadderTables {
    LadderTables::stored().expect("stored ladder tables")
}

/// `√(θ/2) Σ_{k=n+1}^{m} k^{−1/2}`
fn pure_formula(theta: f64, m: usize, n: usize) -> f64 {
    (theta / 2.0).sqrt() * ((n + 1)..=m).map(|k| 1.0 / (k as f64).sqrt()).sum::<f64>()
}

fn lp_distance(kind: &DiracKind, params: DiracParams, m: usize, n: usize, trunc: usize) -> f64 {
    let p = DistanceProblem::new(
        kind.clone(),
        params,
        State::pure_basis(m, trunc).unwrap(),
        State::pure_basis(n, trunc).unwrap(),
        SolverMode::DiagonalLp,
    );
    match distance(&p, tables()).unwrap() {
        DistanceOutcome::Finite(r) => r.lower_bound,
        DistanceOutcome::Infinite { .. } => f64::INFINITY,
    }
}

fn pairs() -> Vec<(usize, usize)> {
    (0..=8).flat_map(|m| (0..m).map(move |n| (m, n))).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let theta = 2.0;
    let mut worst = 0.0f64;
    for (m, n) in pairs() {
        let d = lp_distance(&DiracKind::Standard, DiracParams::standard(theta), m, n, 64);
        worst = worst.max((d - pure_formula(theta, m, n)).abs() / pure_formula(theta, m, n));
    }
    let secs = start.elapsed().as_secs_f64();
    (worst < 0.01 && secs < 10.0, format!("max relative deviation {worst:.2e} over 36 pairs, {secs:.2} s"))
}

fn criterion_2() -> Outcome {
    let theta = 2.0;
    let base: Vec<f64> = pairs().iter().map(|&(m, n)| lp_distance(&DiracKind::Standard, DiracParams::standard(theta), m, n, 64)).collect();
    let mut cases: Vec<(DiracKind, DiracParams, f64)> = Vec::new();
    for omega in [0.25, 0.5, 1.0] {
        cases.push((DiracKind::Harmonic(GammaRep::D1), DiracParams::harmonic(theta, omega), 1.0 / (1.0 + omega * omega).sqrt()));
    }
    for xi in [-0.5, 0.5, 2.0, 3.0] {
        cases.push((DiracKind::Landau, DiracParams::landau(theta, xi), 1.0 / (1.0 - xi as f64).abs()));
    }
    for xi in [0.5, 3.0] {
        cases.push((DiracKind::TwistedLandau, DiracParams::landau(theta, xi), 1.0 / (1.0 + xi)));
    }
    let (mut ratio_dev, mut metric_dev) = (0.0f64, 0.0f64);
    for (kind, params, factor) in &cases {
        for (k, &(m, n)) in pairs().iter().enumerate() {
            let ratio = lp_distance(kind, *params, m, n, 64) / base[k];
            ratio_dev = ratio_dev.max((ratio - factor).abs() / factor);
        }
        let quarter = clifford_metric(kind, params).unwrap().det_g_quarter;
        metric_dev = metric_dev.max((quarter - factor).abs());
    }
    (
        ratio_dev < 0.01 && metric_dev < 1e-10,
        format!("max ratio deviation {ratio_dev:.2e}, max |(det G)^(1/4) - factor| {metric_dev:.2e}"),
    )
}

fn standard_oracle(a: &TruncatedElement) -> f64 {
    let s = |b: TruncatedElement| b.into_coeffs().singular_values().max();
    let d = s(a.derivative(Derivative::Holomorphic, tables()).unwrap());
    let db = s(a.derivative(Derivative::AntiHolomorphic, tables()).unwrap());
    std::f64::consts::SQRT_2 * d.max(db)
}

fn criterion_3() -> Outcome {
    let (theta, n) = (2.0, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let families: Vec<(DiracKind, DiracParams, f64)> = vec![
        (DiracKind::Standard, DiracParams::standard(theta), 1.0),
        (DiracKind::Harmonic(GammaRep::D1), DiracParams::harmonic(theta, 0.5), 1.25f64.sqrt()),
        (DiracKind::Harmonic(GammaRep::D2), DiracParams::harmonic(theta, 0.5), 1.25f64.sqrt()),
        (DiracKind::Landau, DiracParams::landau(theta, 3.0), 2.0),
        (DiracKind::TwistedLandau, DiracParams::landau(theta, 0.5), 1.5),
    ];
    let ops: Vec<SpinorOperator> = families.iter().map(|(k, p, _)| SpinorOperator::build(k.clone(), *p, n, tables()).unwrap()).collect();
    let (mut worst, mut diag) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let a = TruncatedElement::random_interior(theta, n, 2, true, &mut rng).unwrap();
        let l0 = standard_oracle(&a);
        for (d, (_, _, factor)) in ops.iter().zip(&families) {
            let direct = seminorm_direct(d, &a, tables(), &NormOptions::default()).unwrap();
            worst = worst.max((direct - factor * l0).abs() / (factor * l0));
        }
        diag = diag.max(unitary_diag_check(0.5, &a, tables()).unwrap());
    }
    (worst <= 1e-8 && diag <= 1e-9, format!("max closed-form deviation {worst:.2e}, diagonalization residual {diag:.2e}"))
}

fn criterion_4() -> Outcome {
    let theta: f64 = 1.0;
    let grid = Grid::new(48, 7.0).unwrap();
    let q = QuadratureSpec::for_grid(&grid, theta);
    let basis = BasisCache::build(theta, grid, &q, 4).unwrap();
    let mut star_dev = 0.0f64;
    for m in 0..4 {
        for n in 0..4 {
            let f = basis.fmn(m, n).unwrap();
            for p in 0..4 {
                for k in 0..4 {
                    let prod = moyal_star_quadrature(&f, &basis.fmn(p, k).unwrap(), &q).unwrap().value;
                    let got = project_coefficients(&prod, &basis, 4).unwrap();
                    let mut want = DMatrix::<Complex64>::zeros(4, 4);
                    if n == p {
                        want[(m, k)] = Complex64::new(1.0, 0.0);
                    }
                    star_dev = star_dev.max((got.coeffs() - want).norm());
                }
            }
        }
    }
    let cgrid = Grid::new(96, 8.0).unwrap();
    let fit = ladder_calibration(theta, 6, cgrid, &QuadratureSpec::for_grid(&cgrid, theta)).map(|r| r.max_residual).unwrap_or(f64::INFINITY);
    let fit = fit.max(tables().max_residual());

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = TruncatedElement::random_interior(2.0, 16, 2, false, &mut rng).unwrap();
    let b = TruncatedElement::random_interior(2.0, 16, 2, false, &mut rng).unwrap();
    let rel = |x: &TruncatedElement, y: &TruncatedElement| x.sub(y).unwrap().frobenius() / x.frobenius().max(y.frobenius());
    let mut ident = 0.0f64;
    for which in [Derivative::Holomorphic, Derivative::AntiHolomorphic, Derivative::X1, Derivative::X2] {
        let lhs = a.star(&b).unwrap().derivative(which, tables()).unwrap();
        let rhs = a.derivative(which, tables()).unwrap().star(&b).unwrap().add(&a.star(&b.derivative(which, tables()).unwrap()).unwrap()).unwrap();
        ident = ident.max(rel(&lhs, &rhs));
    }
    for mu in [1, 2] {
        let d = a.derivative(Derivative::partial(mu), tables()).unwrap();
        let left = a.xtilde_apply(mu, XtildeMode::StarLeft, tables()).unwrap();
        let right = a.xtilde_apply(mu, XtildeMode::StarRight, tables()).unwrap();
        let point = a.xtilde_apply(mu, XtildeMode::Pointwise, tables()).unwrap();
        ident = ident.max(rel(&d, &left.sub(&right).unwrap().scale(Complex64::new(0.0, -0.5))));
        ident = ident.max(rel(&left, &point.add(&d.scale(Complex64::new(0.0, 1.0))).unwrap()));
    }
    (
        star_dev <= 1e-5 && fit <= 1e-5 && ident <= 1e-10,
        format!("star window {star_dev:.2e}, calibration fit {fit:.2e}, identities {ident:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let theta = 2.0;
    let id = DMatrix::<Complex64>::identity(1, 1);
    let hh = hermitian_spectrum(&BlockOp::tensor(&id, &harmonic_hamiltonian(0.5, theta, 32, tables()).unwrap()), 1e-8);
    let k = 8;
    let mults_ok = hh.clusters.iter().take(k).enumerate().all(|(j, c)| c.multiplicity == j + 1);
    let gaps: Vec<f64> = hh.clusters.windows(2).take(k - 1).map(|w| w[1].value - w[0].value).collect();
    let spacing = gaps[0];
    let spacing_ok = gaps.iter().all(|g| (g - spacing).abs() <= 1e-8 * spacing);
    let hh_ratio = spacing / (0.5 / theta);
    let mults: Vec<usize> = [32, 64, 128]
        .iter()
        .map(|&n| hermitian_spectrum(&BlockOp::tensor(&id, &landau_hamiltonian(1.0, theta, n, tables()).unwrap()), 1e-8).clusters[0].multiplicity)
        .collect();
    let hl = hermitian_spectrum(&BlockOp::tensor(&id, &landau_hamiltonian(1.0, theta, 32, tables()).unwrap()), 1e-8);
    let hl_ratio = (hl.clusters[1].value - hl.clusters[0].value) / (8.0 / theta);
    let growing = mults.windows(2).all(|w| w[1] > w[0]);
    (
        mults_ok && spacing_ok && growing,
        format!(
            "H_h multiplicities 1..{k} {mults_ok}, equal spacing {spacing_ok}; H_L first-level multiplicity {mults:?}; prefactor ratios H_h {hh_ratio:.4}, H_L {hl_ratio:.4} (reported)"
        ),
    )
}

fn criterion_6() -> Outcome {
    let k0 = kernels::k0_squared_integral().unwrap();
    let k0_ok = (k0 - PI * PI / 4.0).abs() <= 1e-6;
    let grid: Vec<f64> = (1..=50).map(|k| 0.1 * k as f64).collect();
    let slack = kernels::phi_sweep(&grid, 2.0, 2.0, 1.0).unwrap().iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let mut l2_ratio = 0.0f64;
    for (theta, xi) in [(2.0, 1.0), (2.0, 2.0), (1.0, 0.5)] {
        l2_ratio = l2_ratio.max(kernels::phi_l2_squared(xi, theta, 0.0).unwrap() / (PI * theta / (48.0 * xi)));
    }
    let a = TruncatedElement::unit(2.0, 8, 0, 0).unwrap();
    let deltas: Vec<f64> = (0..7).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect();
    let xis: Vec<f64> = deltas.iter().map(|d| 1.0 - d).collect();
    let vals: Vec<f64> = kernels::hs_sweep(&a, &xis, 1.0).unwrap().iter().map(|r| r.value).collect();
    let slope = kernels::log_log_slope(&deltas, &vals);
    (
        k0_ok && slack >= 0.0 && l2_ratio <= 1.0 && (slope + 2.0).abs() <= 0.1,
        format!("int K0^2 - pi^2/4 = {:.2e}, min slack {slack:.2e}, max L2 ratio {l2_ratio:.4}, slope {slope:.4}", k0 - PI * PI / 4.0),
    )
}

fn fixed_interior(theta: f64, n: usize) -> TruncatedElement {
    let mut c = DMatrix::<Complex64>::zeros(n, n);
    c[(0, 0)] = Complex64::new(1.0, 0.0);
    c[(1, 1)] = Complex64::new(0.5, 0.0);
    c[(0, 2)] = Complex64::new(0.3, 0.0);
    c[(2, 0)] = Complex64::new(0.3, 0.0);
    TruncatedElement::new(theta, c).unwrap()
}

fn hs_change(kind: DiracKind, params: DiracParams) -> f64 {
    let at = |n: usize| {
        let d = SpinorOperator::build(kind.clone(), params, n, tables()).unwrap();
        kernels::resolvent_hs_squared(&d.op().compose(d.op()), &fixed_interior(params.theta, n), 1.0).unwrap()
    };
    let (a, b) = (at(64), at(128));
    (b - a).abs() / a
}

fn criterion_7() -> Outcome {
    let theta = 2.0;
    let standard = hs_change(DiracKind::Standard, DiracParams::standard(theta));
    let landau2 = hs_change(DiracKind::Landau, DiracParams::landau(theta, 2.0));
    let landau1 = hs_change(DiracKind::Landau, DiracParams::landau(theta, 1.0));
    (
        standard < 0.05 && landau2 < 0.05 && landau1 > 0.5,
        format!("relative change N=64->128: D0 {standard:.2e}, xi=2 {landau2:.2e}, xi=1 {landau1:.2e} (needs > 0.5)"),
    )
}

fn criterion_8() -> Outcome {
    let theta = 2.0;
    let truncs = [16, 64, 256];
    let d0 = divergence_probe(1.1, 1.4, &DiracKind::Standard, &DiracParams::standard(theta), &truncs, tables()).unwrap();
    let dl = divergence_probe(1.1, 1.4, &DiracKind::Landau, &DiracParams::landau(theta, 3.0), &truncs, tables()).unwrap();
    let b0: Vec<f64> = d0.iter().map(|r| r.lower_bound).collect();
    let bl: Vec<f64> = dl.iter().map(|r| r.lower_bound).collect();
    let increasing = b0.windows(2).all(|w| w[1] > w[0]);
    let doubled = b0[2] >= 2.0 * b0[0];
    let track = b0.iter().zip(&bl).map(|(a, b)| (b - 0.5 * a).abs() / (0.5 * a)).fold(0.0, f64::max);
    (
        increasing && doubled && track <= 0.05,
        format!("D0 bounds {b0:.4?}, Landau xi=3 bounds {bl:.4?}, max deviation from half {track:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_moyal"))
            .args(["verify", "--suite", "all", "--seed", "7"])
            .output()
            .expect("run moyal")
    };
    let (a, b) = (run(), run());
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    (same, format!("{} report bytes, identical {same}, exit codes {:?} {:?}", a.stdout.len(), a.status.code(), b.status.code()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("distance formula", criterion_1),
        ("homothety", criterion_2),
        ("seminorm identities", criterion_3),
        ("oracle agreement", criterion_4),
        ("spectra", criterion_5),
        ("kernel bounds", criterion_6),
        ("compactness diagnostics", criterion_7),
        ("divergence probe", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        println!("criterion {} ({name}): {}  {detail}", k + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Integral kernels behind the compactness estimates: the Landau heat kernel,
//! the `Φ`/`Ψ` integrals, `K₀`, and Hilbert–Schmidt norms of resolvents.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirac::BlockOp;
use crate::error::{Error, Result};
use crate::fock::TruncatedElement;
use crate::linalg::dense_blocks;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let (mut total, mut err) = (v, e);
    while err > abs_tol.max(rel_tol * total.abs()) {
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::NonConvergence { iterations: parts.len(), estimate: total, residual: err });
        }
        let worst = (0..parts.len()).max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3)).expect("nonempty");
        let (lo, hi, v, e) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    // re-sum to shed accumulated cancellation
    Ok(parts.iter().map(|p| p.2).sum())
}

/// `∫₀^∞ f(x) dx` through `x = e^y`, for integrands with at most logarithmic
/// growth at the origin and fast decay.
fn integrate_half_line_log<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    integrate(|y| { let x = y.exp(); f(x) * x }, -60.0, 6.0, 0.0, tol)
}

/// `∫₀^∞ e^{−w²} g(w) dw`-type tails are cut where `e^{−w²}` drops below this.
const GAUSS_TAIL: f64 = 40.0;

fn k0_with_tol(x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("K0 needs x > 0, got {x}")));
    }
    // u = w² in e^{−x} ∫₀^∞ e^{−u} (u(u+2x))^{−1/2} du
    let body = integrate(|w| 2.0 * (-w * w).exp() / (w * w + 2.0 * x).sqrt(), 0.0, GAUSS_TAIL.sqrt(), 0.0, tol)?;
    Ok((-x).exp() * body)
}

/// Modified Bessel function `K₀(x)`.
pub fn bessel_k0(x: f64) -> Result<f64> {
    k0_with_tol(x, 1e-12)
}

/// `K₀(x)` at a looser tolerance, for refinement checks.
pub fn bessel_k0_coarse(x: f64) -> Result<f64> {
    k0_with_tol(x, 1e-8)
}

/// `∫₀^∞ K₀(x)² dx`.
pub fn k0_squared_integral() -> Result<f64> {
    let f = |x: f64| bessel_k0(x).map(|k| k * k).unwrap_or(f64::NAN);
    let v = integrate_half_line_log(f, 1e-11)?;
    if !v.is_finite() {
        return Err(Error::Domain("K0 evaluation failed inside the integral".into()));
    }
    Ok(v)
}

/// `Φ` at reduced argument `r = ξ|v|²/θ`:
/// `∫₀^∞ dt e^{−tμ²} e^{−r coth t} / (4π sinh t)`.
/// On `t ≤ 1` the substitution `u = r(coth t − 1)`, `u = w²` removes the
/// singular factor; `t ≥ 1` is integrated directly until `e^{−t} < 1e−16`.
fn phi_reduced(r: f64, mu2: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    let coth1 = 1.0 / 1f64.tanh();
    let u1 = r * (coth1 - 1.0);
    let near = integrate(
        |w| {
            let s = w * w + 2.0 * r;
            2.0 * (-(w * w - u1)).exp() / s.sqrt() * (w * w / s).powf(0.5 * mu2)
        },
        u1.sqrt(),
        (u1 + GAUSS_TAIL).sqrt(),
        0.0,
        1e-12,
    )? * (-(r + u1)).exp();
    let t_max = 16.0 * std::f64::consts::LN_10;
    let far = integrate(|t| (-t * mu2 - r / t.tanh()).exp() / t.sinh(), 1.0, 1f64.max(t_max), 0.0, 1e-12)?;
    Ok((near + far) / (4.0 * PI))
}

fn check_phi_args(v_norm2: f64, mu2: f64) -> Result<()> {
    if !(v_norm2 >= 0.0) || !(mu2 >= 0.0) {
        return Err(Error::Domain(format!("need |v|² ≥ 0 and μ² ≥ 0, got {v_norm2}, {mu2}")));
    }
    Ok(())
}

/// `Φ(v)`, `ξ > 0`. Infinite at `v = 0`.
pub fn phi_integral(v_norm2: f64, xi: f64, theta: f64, mu2: f64) -> Result<f64> {
    check_phi_args(v_norm2, mu2)?;
    if !(xi > 0.0) {
        return Err(Error::Domain(format!("phi needs xi > 0, got {xi}; use psi_integral")));
    }
    phi_reduced(xi * v_norm2 / theta, mu2)
}

/// `Ψ(v)`, the `|ξ|` variant valid for any `ξ ≠ 0`.
pub fn psi_integral(v_norm2: f64, xi: f64, theta: f64, mu2: f64) -> Result<f64> {
    check_phi_args(v_norm2, mu2)?;
    if xi == 0.0 {
        return Err(Error::Domain("psi needs xi ≠ 0".into()));
    }
    phi_reduced(xi.abs() * v_norm2 / theta, mu2)
}

/// `K₀(ξ|v|²/θ)/(4π)`, the pointwise majorant of `Φ`.
pub fn phi_majorant(v_norm2: f64, xi: f64, theta: f64) -> Result<f64> {
    Ok(bessel_k0(xi.abs() * v_norm2 / theta)? / (4.0 * PI))
}

/// `∫ d²v |Ψ(v)|² = (πθ/|ξ|) ∫₀^∞ φ(x)² dx` with `φ` the reduced integral.
pub fn phi_l2_squared(xi: f64, theta: f64, mu2: f64) -> Result<f64> {
    if xi == 0.0 || !(theta > 0.0) || !(mu2 >= 0.0) {
        return Err(Error::Domain(format!("bad parameters xi={xi}, theta={theta}, mu2={mu2}")));
    }
    let f = |x: f64| phi_reduced(x, mu2).map(|p| p * p).unwrap_or(f64::NAN);
    let j = integrate_half_line_log(f, 1e-10)?;
    if !j.is_finite() {
        return Err(Error::Domain("phi evaluation failed inside the integral".into()));
    }
    Ok(PI * theta / xi.abs() * j)
}

/// Stated bound `πθ/(48|ξ|)` on `∫|Φ|²`.
pub fn phi_l2_bound(xi: f64, theta: f64) -> f64 {
    PI * theta / (48.0 * xi.abs())
}

/// `‖a‖₂² = ∫|a|² d²x = 2πθ Σ|a_mn|²`.
pub fn l2_norm_squared(a: &TruncatedElement) -> f64 {
    2.0 * PI * a.theta() * a.coeffs().norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauHsReport {
    /// `I = ‖a‖₂² ∫|Ψ|² / (4(1−ξ)²)`; infinite at `ξ = 1`.
    pub value: f64,
    /// `C̃ ‖a‖₂²` with `C̃ = πθ/(192|ξ|(1−ξ)²)`.
    pub bound: f64,
    pub slack: f64,
    pub phi_l2: f64,
    pub a_l2: f64,
}

/// Integral-side Hilbert–Schmidt estimate for `L(a)(H_L + μ²)^{−1}`.
pub fn hs_norm_landau(a: &TruncatedElement, xi: f64, mu2: f64) -> Result<LandauHsReport> {
    let theta = a.theta();
    let a_l2 = l2_norm_squared(a);
    if xi == 1.0 {
        return Ok(LandauHsReport { value: f64::INFINITY, bound: f64::INFINITY, slack: f64::NAN, phi_l2: f64::NAN, a_l2 });
    }
    let phi_l2 = phi_l2_squared(xi, theta, mu2)?;
    let c = 1.0 / (4.0 * (1.0 - xi).powi(2));
    let value = c * a_l2 * phi_l2;
    let bound = PI * theta / (192.0 * xi.abs() * (1.0 - xi).powi(2)) * a_l2;
    Ok(LandauHsReport { value, bound, slack: bound - value, phi_l2, a_l2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventReport {
    /// `∫ d²p (p² + μ²)^{−2}`.
    pub momentum_integral: f64,
    pub a_l2: f64,
    /// `I / C′²`, the constant left symbolic.
    pub value_over_constant: f64,
}

/// Integral-side Hilbert–Schmidt norm of `L(a)(−∂² + μ²)^{−1}`, up to the
/// undetermined constant `C′²`.
pub fn resolvent_kernel_standard(a: &TruncatedElement, mu2: f64) -> Result<ResolventReport> {
    if !(mu2 > 0.0) {
        return Err(Error::Domain(format!("mu2 must be positive, got {mu2}")));
    }
    let radial = integrate(
        |s| {
            let p = s / (1.0 - s);
            let q = p * p + mu2;
            p / (q * q) / ((1.0 - s) * (1.0 - s))
        },
        0.0,
        1.0,
        0.0,
        1e-13,
    )?;
    let momentum_integral = 2.0 * PI * radial;
    let a_l2 = l2_norm_squared(a);
    Ok(ResolventReport { momentum_integral, a_l2, value_over_constant: a_l2 * momentum_integral })
}

/// Integrand of the Landau resolvent kernel at time `t`:
/// `e^{2iξ xΘ⁻¹y} e^{−ξ|x−y|² coth t/θ} / (4π sinh t)`.
pub fn heat_kernel_landau(x: [f64; 2], y: [f64; 2], t: f64, xi: f64, theta: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let symplectic = (x[1] * y[0] - x[0] * y[1]) / theta;
    let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    let modulus = (-xi * d2 / (theta * t.tanh())).exp() / (4.0 * PI * t.sinh());
    Ok(Complex64::from_polar(modulus, 2.0 * xi * symplectic))
}

/// `∫ d²z K(x, z; t₁) K(z, y; t₂)` by the trapezoid rule on `[−L, L]²`.
pub fn heat_kernel_composition(x: [f64; 2], y: [f64; 2], t1: f64, t2: f64, xi: f64, theta: f64, half_width: f64, n_pts: usize) -> Result<Complex64> {
    if n_pts < 2 {
        return Err(Error::Domain("composition grid needs at least two points".into()));
    }
    let h = 2.0 * half_width / (n_pts - 1) as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n_pts {
        for j in 0..n_pts {
            let z = [-half_width + i as f64 * h, -half_width + j as f64 * h];
            let w = if i == 0 || i == n_pts - 1 { 0.5 } else { 1.0 } * if j == 0 || j == n_pts - 1 { 0.5 } else { 1.0 };
            acc += heat_kernel_landau(x, z, t1, xi, theta)? * heat_kernel_landau(z, y, t2, xi, theta)? * w;
        }
    }
    Ok(acc * h * h)
}

/// `∫₀^∞ dt e^{−tμ²} K(x, y; t)`.
pub fn landau_resolvent_kernel(x: [f64; 2], y: [f64; 2], xi: f64, theta: f64, mu2: f64) -> Result<Complex64> {
    let part = |im: bool| {
        integrate(
            |s| {
                // t = s/(1−s)
                if s <= 0.0 {
                    return 0.0;
                }
                let t = s / (1.0 - s);
                let k = heat_kernel_landau(x, y, t, xi, theta).expect("t > 0") * (-t * mu2).exp();
                (if im { k.im } else { k.re }) / ((1.0 - s) * (1.0 - s))
            },
            0.0,
            1.0 - 1e-12,
            1e-14,
            1e-11,
        )
    };
    Ok(Complex64::new(part(false)?, part(true)?))
}

/// `‖π(a) (H + λ)^{−1}‖²_HS` for a hermitian block operator `H` on spinors,
/// inverting `H + λ` on its invariant blocks.
pub fn resolvent_hs_squared(h: &BlockOp, a: &TruncatedElement, lambda: f64) -> Result<f64> {
    let (n, s) = (h.trunc(), h.spinor_dim());
    if a.trunc() != n {
        return Err(Error::Dimension(format!("element of size {} against operator of size {n}", a.trunc())));
    }
    let coeffs = a.coeffs();
    let col_norms: Vec<f64> = (0..n).map(|m| coeffs.column(m).norm_squared()).collect();
    let dim = s * n * n;
    let mut total = 0.0;
    for (members, block) in dense_blocks(dim, &h.triplets()) {
        let k = members.len();
        let shifted = &block + DMatrix::<Complex64>::identity(k, k) * Complex64::new(lambda, 0.0);
        let inv = shifted
            .try_inverse()
            .ok_or_else(|| Error::Domain(format!("H + {lambda} is singular on a block of size {k}")))?;
        // coordinates sharing (component, column) are mixed by L(a)
        let mut groups: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (slot, &idx) in members.iter().enumerate() {
            let (comp, rest) = (idx / (n * n), idx % (n * n));
            groups.entry((comp, rest % n)).or_default().push((slot, rest / n));
        }
        if groups.values().all(|g| g.len() == 1) {
            for g in groups.values() {
                let (slot, m) = g[0];
                total += col_norms[m] * inv.row(slot).norm_squared();
            }
        } else {
            for c in 0..k {
                for g in groups.values() {
                    let mut v = DVector::<Complex64>::zeros(n);
                    for &(slot, m) in g {
                        v[m] = inv[(slot, c)];
                    }
                    total += (coeffs * v).norm_squared();
                }
            }
        }
    }
    Ok(total)
}

/// One row of a kernel sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
}

/// `Φ` against `K₀/(4π)` on the given `|v|` values.
pub fn phi_sweep(v_values: &[f64], xi: f64, theta: f64, mu2: f64) -> Result<Vec<SweepRow>> {
    v_values
        .iter()
        .map(|&v| {
            let value = psi_integral(v * v, xi, theta, mu2)?;
            let bound = phi_majorant(v * v, xi, theta)?;
            Ok(SweepRow { param: v, value, bound, slack: bound - value })
        })
        .collect()
}

/// `I(ξ)` along a sweep of `ξ`, with the `C̃` bound.
pub fn hs_sweep(a: &TruncatedElement, xis: &[f64], mu2: f64) -> Result<Vec<SweepRow>> {
    xis.iter()
        .map(|&xi| {
            let r = hs_norm_landau(a, xi, mu2)?;
            Ok(SweepRow { param: xi, value: r.value, bound: r.bound, slack: r.slack })
        })
        .collect()
}

/// CSV with header `param,value,bound,slack`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,bound,slack\n");
    for r in rows {
        out.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.param, r.value, r.bound, r.slack));
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

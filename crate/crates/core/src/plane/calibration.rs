use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::star::{star_linear_left_many, star_linear_right_many, LinearFunction};
use super::{BasisCache, Grid, QuadratureSpec, SampledFunction};
use crate::error::{Error, Result};
use crate::ladder::{CalibrationMeta, Derivative, LadderOp, LadderTables, OpTable, ShiftLaw, Side, XtildeMode};

/// Largest tolerated fit or sparsity residual.
pub const CALIBRATION_LIMIT: f64 = 1e-5;
/// Coefficients below this size (in units of `1/√θ`) do not define a shift.
const ACTIVE_THRESHOLD: f64 = 1e-3;

/// Result of a calibration run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub tables: LadderTables,
    pub max_residual: f64,
    /// `max |{x̃_μ, f}⋆ − 2 x̃_μ·f|` on the window, from projected samples.
    pub anticommutator_residual: f64,
    /// `max |x̃_μ ⋆ f − x̃_μ·f − i∂_μ f|` on the window.
    pub star_pointwise_residual: f64,
    /// `max |∂_μ f + (i/2)[x̃_μ, f]⋆|` on the window.
    pub inner_derivation_residual: f64,
    /// Largest deviation of a basis raising constant from its ladder law.
    pub basis_ladder_spread: f64,
    /// Largest relative sample modulus beyond the tail cut.
    pub tail_mass: f64,
}

fn xtilde(mu: usize, theta: f64) -> LinearFunction {
    let zero = Complex64::new(0.0, 0.0);
    let c = Complex64::new(2.0 / theta, 0.0);
    if mu == 1 {
        LinearFunction::new(zero, zero, -c)
    } else {
        LinearFunction::new(zero, c, zero)
    }
}

fn xtilde_value(mu: usize, theta: f64, x1: f64, x2: f64) -> f64 {
    if mu == 1 {
        -2.0 * x2 / theta
    } else {
        2.0 * x1 / theta
    }
}

/// Calibrates the ladder action of every derivative and coordinate multiplier
/// on `f_mn`, `m, n < window`, against the quadrature oracle.
pub fn ladder_calibration(theta: f64, window: usize, grid: Grid, q: &QuadratureSpec) -> Result<CalibrationReport> {
    if window == 0 || window > 12 {
        return Err(Error::Domain(format!("calibration window must be in 1..=12, got {window}")));
    }
    let size = window + 1;
    let basis = BasisCache::build(theta, grid, q, size)?;
    let ops = LadderOp::all();
    let mut images: BTreeMap<String, Vec<SampledFunction>> = ops.iter().map(|o| (o.key(), Vec::new())).collect();
    let mut tail_mass = 0.0f64;
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, 1.0);
    let xts = [xtilde(1, theta), xtilde(2, theta)];
    for m in 0..window {
        for n in 0..window {
            let f = basis.fmn(m, n)?;
            let d1 = f.partial(1)?;
            let d2 = f.partial(2)?;
            let del = d1.sub(&d2.scale(i))?.scale(Complex64::new(s2, 0.0));
            let delbar = d1.add(&d2.scale(i))?.scale(Complex64::new(s2, 0.0));
            let lefts = star_linear_left_many(&xts, &f, q)?;
            let rights = star_linear_right_many(&f, &xts, q)?;
            for r in lefts.iter().chain(&rights) {
                tail_mass = tail_mass.max(r.tail_mass);
            }
            let mut push = |op: LadderOp, v: SampledFunction| images.get_mut(&op.key()).unwrap().push(v);
            push(LadderOp::Derivative(Derivative::Holomorphic), del);
            push(LadderOp::Derivative(Derivative::AntiHolomorphic), delbar);
            push(LadderOp::Derivative(Derivative::X1), d1);
            push(LadderOp::Derivative(Derivative::X2), d2);
            for mu in [1, 2] {
                push(LadderOp::Xtilde { mu, mode: XtildeMode::StarLeft }, lefts[mu - 1].value.clone());
                push(LadderOp::Xtilde { mu, mode: XtildeMode::StarRight }, rights[mu - 1].value.clone());
                push(
                    LadderOp::Xtilde { mu, mode: XtildeMode::Pointwise },
                    f.multiply_by(|x1, x2| xtilde_value(mu, theta, x1, x2)),
                );
            }
        }
    }

    let scale = Complex64::new(theta.sqrt(), 0.0);
    let mut projected = BTreeMap::new();
    for op in &ops {
        let coeffs = basis.project_batch(&images[&op.key()])? * scale;
        projected.insert(op.key(), coeffs);
    }

    let mut tables = BTreeMap::new();
    let mut worst: Option<(String, f64)> = None;
    for op in &ops {
        let table = fit_table(&projected[&op.key()], window);
        let res = table.max_residual();
        if worst.as_ref().is_none_or(|(_, w)| res > *w) {
            worst = Some((op.key(), res));
        }
        tables.insert(op.key(), table);
    }
    let (worst_key, max_residual) = worst.unwrap();
    if max_residual > CALIBRATION_LIMIT {
        return Err(Error::Calibration { table: worst_key, residual: max_residual, limit: CALIBRATION_LIMIT });
    }

    let get = |op: LadderOp| &projected[&op.key()];
    let mut anticommutator_residual = 0.0f64;
    let mut star_pointwise_residual = 0.0f64;
    let mut inner_derivation_residual = 0.0f64;
    for mu in [1, 2] {
        let left = get(LadderOp::Xtilde { mu, mode: XtildeMode::StarLeft });
        let right = get(LadderOp::Xtilde { mu, mode: XtildeMode::StarRight });
        let point = get(LadderOp::Xtilde { mu, mode: XtildeMode::Pointwise });
        let deriv = get(LadderOp::Derivative(Derivative::partial(mu)));
        let anti = left + right - point * Complex64::new(2.0, 0.0);
        anticommutator_residual = anticommutator_residual.max(anti.camax());
        let sp = left - point - deriv * i;
        star_pointwise_residual = star_pointwise_residual.max(sp.camax());
        let inner = deriv + (left - right) * (i * 0.5);
        inner_derivation_residual = inner_derivation_residual.max(inner.camax());
    }

    let meta = CalibrationMeta {
        theta,
        window,
        n_pts: grid.n_pts,
        half_width: grid.half_width,
        basis_ladder: basis.kappa(),
        left_raiser: basis.left_raiser().to_string(),
        right_raiser: basis.right_raiser().to_string(),
        phase_convention: "f_mn = normalized (raiser ⋆)^m f_00 (⋆ raiser)^n; raising coefficients real and positive"
            .to_string(),
    };
    Ok(CalibrationReport {
        tables: LadderTables { schema: 1, meta, tables },
        max_residual,
        anticommutator_residual,
        star_pointwise_residual,
        inner_derivation_residual,
        basis_ladder_spread: basis.kappa_spread(),
        tail_mass,
    })
}

/// Fits one operator from its projected images; `coeffs[(m'·s + n', m·w + n)]`
/// is the `e_{m'n'}` coefficient of the image of `e_mn`, in units of `1/√θ`.
fn fit_table(coeffs: &DMatrix<Complex64>, window: usize) -> OpTable {
    let size = window + 1;
    let mut explained = vec![false; coeffs.len()];
    let mut shifts = Vec::new();
    for side in [Side::Left, Side::Right] {
        for step in [1i32, -1] {
            let mut samples = Vec::new();
            for m in 0..window {
                for n in 0..window {
                    let (idx, other) = if side == Side::Left { (m, n) } else { (n, m) };
                    let target = idx as i64 + step as i64;
                    if target < 0 {
                        continue;
                    }
                    let target = target as usize;
                    let (tm, tn) = if side == Side::Left { (target, other) } else { (other, target) };
                    let row = tm * size + tn;
                    let col = m * window + n;
                    let k = idx.max(target) as f64;
                    samples.push((row, col, coeffs[(row, col)] / k.sqrt()));
                }
            }
            let active = samples.iter().any(|s| s.2.norm() > ACTIVE_THRESHOLD);
            if !active {
                continue;
            }
            let mean = samples.iter().map(|s| s.2).sum::<Complex64>() / samples.len() as f64;
            let fit_residual = samples.iter().map(|s| (s.2 - mean).norm()).fold(0.0, f64::max);
            for (row, col, _) in &samples {
                explained[row + col * coeffs.nrows()] = true;
            }
            shifts.push(ShiftLaw { side, step, coeff: [mean.re, mean.im], fit_residual });
        }
    }
    let sparsity_residual = coeffs
        .iter()
        .zip(&explained)
        .filter(|(_, e)| !**e)
        .map(|(z, _)| z.norm())
        .fold(0.0, f64::max);
    OpTable { shifts, sparsity_residual }
}

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::linalg::cgemm;
use super::{QuadratureSpec, SampledFunction};
use crate::error::Result;

/// Relative size of samples beyond the tail cut that triggers a warning.
const TAIL_TOLERANCE: f64 = 1e-10;

/// Output of a quadrature star product.
#[derive(Debug, Clone)]
pub struct StarResult {
    pub value: SampledFunction,
    /// True when an input is not negligible beyond the tail cut.
    pub tail_warning: bool,
    /// Largest relative input modulus beyond the tail cut.
    pub tail_mass: f64,
}

/// `c0 + c1·x₁ + c2·x₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFunction {
    pub c0: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
}

impl LinearFunction {
    pub fn new(c0: Complex64, c1: Complex64, c2: Complex64) -> Self {
        LinearFunction { c0, c1, c2 }
    }

    pub fn eval(&self, x1: f64, x2: f64) -> Complex64 {
        self.c0 + self.c1 * x1 + self.c2 * x2
    }

    pub fn conj(&self) -> Self {
        LinearFunction { c0: self.c0.conj(), c1: self.c1.conj(), c2: self.c2.conj() }
    }
}

fn relative_tail(f: &SampledFunction, r: f64) -> f64 {
    let m = f.max_abs();
    if m == 0.0 {
        0.0
    } else {
        f.max_abs_beyond(r) / m
    }
}

fn cut_tail(f: &SampledFunction, r: f64) -> DMatrix<Complex64> {
    let xs = f.grid().coords();
    let mut v = f.values().clone();
    for j in 0..xs.len() {
        for i in 0..xs.len() {
            if xs[i] * xs[i] + xs[j] * xs[j] > r * r {
                v[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    v
}

/// Offsets `d·h`, `d = −(n−1) … n−1`.
fn offsets(f: &SampledFunction) -> Vec<f64> {
    let n = f.grid().n_pts as i64;
    let h = f.grid().spacing();
    (-(n - 1)..n).map(|d| d as f64 * h).collect()
}

/// `G(y) = ∫ g(w) exp(−2i (y₂w₁ − y₁w₂)/θ) d²w` on the offset grid, indexed
/// `[(d₁, d₂)]`. The transform of a Gaussian-decaying function decays on the
/// same scale as the function, so offsets beyond the tail cut are set to zero,
/// as are offsets whose oscillation exceeds the grid's Nyquist frequency.
fn twisted_transform(g: &DMatrix<Complex64>, f: &SampledFunction, tail_cut: f64) -> DMatrix<Complex64> {
    let theta = f.theta();
    let h = f.grid().spacing();
    let xs = f.grid().coords();
    let ys = offsets(f);
    let p = DMatrix::from_fn(ys.len(), xs.len(), |d, i| Complex64::from_polar(1.0, -2.0 * ys[d] * xs[i] / theta));
    let qt = DMatrix::from_fn(xs.len(), ys.len(), |j, d| Complex64::from_polar(1.0, 2.0 * ys[d] * xs[j] / theta));
    // M[d₂, d₁] = Σ_ij P[d₂,i] g[i,j] Qᵀ[j,d₁]
    let m = cgemm(&cgemm(&p, g), &qt);
    let nyquist = std::f64::consts::PI * theta / (2.0 * h);
    DMatrix::from_fn(ys.len(), ys.len(), |d1, d2| {
        if ys[d1].abs() >= nyquist || ys[d2].abs() >= nyquist || ys[d1].hypot(ys[d2]) > tail_cut {
            Complex64::new(0.0, 0.0)
        } else {
            m[(d2, d1)] * (h * h)
        }
    })
}

/// `(f ⋆ g)(x)` by direct quadrature of the oscillatory double integral.
///
/// Samples beyond `q.tail_cut` are treated as zero, and outputs there are set
/// to zero.
pub fn moyal_star_quadrature(f: &SampledFunction, g: &SampledFunction, q: &QuadratureSpec) -> Result<StarResult> {
    f.check_compatible(g)?;
    q.check_sampled(f.grid())?;
    let r = q.tail_cut;
    let tail_mass = relative_tail(f, r).max(relative_tail(g, r));
    let theta = f.theta();
    let n = f.grid().n_pts;
    let h = f.grid().spacing();
    let xs = f.grid().coords();
    let fv = cut_tail(f, r);
    let gt = twisted_transform(&cut_tail(g, r), f, r);

    let inside: Vec<usize> = (0..n).filter(|&i| xs[i].abs() <= r).collect();
    let (lo, hi) = (inside[0], *inside.last().unwrap() + 1);
    let pref = h * h / (std::f64::consts::PI * theta).powi(2);
    let mut out = DMatrix::zeros(n, n);
    let mut fb = DMatrix::<Complex64>::zeros(n, n);
    for b in lo..hi {
        for j in lo..hi {
            for i in lo..hi {
                fb[(i, j)] = fv[(i, j)] * Complex64::from_polar(1.0, -2.0 * xs[i] * xs[b] / theta);
            }
        }
        for a in lo..hi {
            if xs[a] * xs[a] + xs[b] * xs[b] > r * r {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..hi {
                let fcol = &fb.column(j);
                let gcol = &gt.column(j + n - 1 - b);
                let mut inner = Complex64::new(0.0, 0.0);
                for i in lo..hi {
                    inner += fcol[i] * gcol[i + n - 1 - a];
                }
                acc += inner * Complex64::from_polar(1.0, 2.0 * xs[j] * xs[a] / theta);
            }
            out[(a, b)] = acc * pref;
        }
    }
    Ok(StarResult { value: f.with_values(out), tail_warning: tail_mass > TAIL_TOLERANCE, tail_mass })
}

/// `ℓ ⋆ g` for a linear function `ℓ`, by the same quadrature with the sum over
/// offsets carried out in closed separable form. Outputs beyond the tail cut
/// are set to zero.
pub fn star_linear_left(l: &LinearFunction, g: &SampledFunction, q: &QuadratureSpec) -> Result<StarResult> {
    Ok(star_linear_left_many(std::slice::from_ref(l), g, q)?.remove(0))
}

/// `ℓ ⋆ g` for several linear functions sharing one transform of `g`.
pub fn star_linear_left_many(ls: &[LinearFunction], g: &SampledFunction, q: &QuadratureSpec) -> Result<Vec<StarResult>> {
    q.check_sampled(g.grid())?;
    let r = q.tail_cut;
    let tail_mass = relative_tail(g, r);
    let theta = g.theta();
    let xs = g.grid().coords();
    let ys = offsets(g);
    let gt = twisted_transform(&cut_tail(g, r), g, r);
    let a = DMatrix::from_fn(xs.len(), ys.len(), |i, d| Complex64::from_polar(1.0, 2.0 * ys[d] * xs[i] / theta));
    let b = DMatrix::from_fn(ys.len(), xs.len(), |d, j| Complex64::from_polar(1.0, -2.0 * ys[d] * xs[j] / theta));
    let sum = |w: &dyn Fn(f64, f64) -> f64| {
        let wg = DMatrix::from_fn(ys.len(), ys.len(), |d2, d1| gt[(d1, d2)] * w(ys[d1], ys[d2]));
        cgemm(&cgemm(&a, &wg), &b)
    };
    let s0 = sum(&|_, _| 1.0);
    let s1 = sum(&|y1, _| y1);
    let s2 = sum(&|_, y2| y2);
    let h = g.grid().spacing();
    let pref = h * h / (std::f64::consts::PI * theta).powi(2);
    let n = xs.len();
    Ok(ls
        .iter()
        .map(|l| {
            let out = DMatrix::from_fn(n, n, |i, j| {
                if xs[i] * xs[i] + xs[j] * xs[j] > r * r {
                    return Complex64::new(0.0, 0.0);
                }
                (l.eval(xs[i], xs[j]) * s0[(i, j)] + l.c1 * s1[(i, j)] + l.c2 * s2[(i, j)]) * pref
            });
            StarResult { value: g.with_values(out), tail_warning: tail_mass > TAIL_TOLERANCE, tail_mass }
        })
        .collect())
}

/// `g ⋆ ℓ = conj(conj(ℓ) ⋆ conj(g))`.
pub fn star_linear_right(g: &SampledFunction, l: &LinearFunction, q: &QuadratureSpec) -> Result<StarResult> {
    Ok(star_linear_right_many(g, std::slice::from_ref(l), q)?.remove(0))
}

/// `g ⋆ ℓ` for several linear functions sharing one transform of `g`.
pub fn star_linear_right_many(g: &SampledFunction, ls: &[LinearFunction], q: &QuadratureSpec) -> Result<Vec<StarResult>> {
    let conj: Vec<LinearFunction> = ls.iter().map(LinearFunction::conj).collect();
    Ok(star_linear_left_many(&conj, &g.conj(), q)?
        .into_iter()
        .map(|res| StarResult { value: res.value.conj(), ..res })
        .collect())
}

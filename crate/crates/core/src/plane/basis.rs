use nalgebra::DMatrix;
use num_complex::Complex64;

use super::linalg::cgemm;
use super::star::{star_linear_left, star_linear_right, LinearFunction};
use super::{Grid, QuadratureSpec, SampledFunction};
use crate::error::{Error, Result};
use crate::fock::TruncatedElement;

/// Relative modulus at the cut radius above which a basis function is taken to
/// be truncated by the grid. Ladder steps amplify rounding noise near the cut,
/// so the threshold sits well above that floor.
const BASIS_TAIL: f64 = 1e-3;

fn ground_state(grid: Grid, theta: f64) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid, theta, |x1, x2| Complex64::new(2.0 * (-(x1 * x1 + x2 * x2) / theta).exp(), 0.0))
}

fn holomorphic(conjugate: bool) -> LinearFunction {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i2 = if conjugate { -s } else { s };
    LinearFunction::new(Complex64::new(0.0, 0.0), Complex64::new(s, 0.0), Complex64::new(0.0, i2))
}

/// Sampled matrix-base functions `f_mn`, `m, n < size`, built from the
/// Gaussian ground state by repeated quadrature products with linear
/// coordinate functions.
#[derive(Debug, Clone)]
pub struct BasisCache {
    grid: Grid,
    theta: f64,
    size: usize,
    /// Column `m·size + n` holds the samples of `f_mn`, column-major.
    columns: DMatrix<Complex64>,
    left_raiser: &'static str,
    right_raiser: &'static str,
    /// Ratios `c / √(θ(k+1))` of each raising step, left steps then right steps.
    kappas: (Vec<f64>, Vec<f64>),
}

impl BasisCache {
    pub fn build(theta: f64, grid: Grid, q: &QuadratureSpec, size: usize) -> Result<Self> {
        q.check_sampled(&grid)?;
        if size == 0 {
            return Err(Error::Domain("basis size must be positive".into()));
        }
        let f00 = ground_state(grid, theta)?;
        let unit = (2.0 * std::f64::consts::PI * theta).sqrt();

        // The raiser is the linear function that does not annihilate f_00.
        let (z, zbar) = (holomorphic(false), holomorphic(true));
        let left_z = star_linear_left(&z, &f00, q)?.value.l2_norm();
        let left_zbar = star_linear_left(&zbar, &f00, q)?.value.l2_norm();
        let (left, left_name) = if left_zbar > left_z { (zbar, "zbar") } else { (z, "z") };
        let right_z = star_linear_right(&f00, &z, q)?.value.l2_norm();
        let right_zbar = star_linear_right(&f00, &zbar, q)?.value.l2_norm();
        let (right, right_name) = if right_z > right_zbar { (z, "z") } else { (zbar, "zbar") };

        let n2 = grid.n_pts * grid.n_pts;
        let mut columns = DMatrix::zeros(n2, size * size);
        let mut kl = Vec::new();
        let mut kr = Vec::new();
        let mut row_start = f00;
        for m in 0..size {
            if m > 0 {
                let raised = star_linear_left(&left, &row_start, q)?.value;
                let c = raised.l2_norm() / unit;
                kl.push(c / (theta * m as f64).sqrt());
                row_start = raised.scale(Complex64::new(1.0 / c, 0.0));
            }
            let mut f = row_start.clone();
            for n in 0..size {
                if n > 0 {
                    let raised = star_linear_right(&f, &right, q)?.value;
                    let c = raised.l2_norm() / unit;
                    if m == 0 {
                        kr.push(c / (theta * n as f64).sqrt());
                    }
                    f = raised.scale(Complex64::new(1.0 / c, 0.0));
                }
                let tail = f.max_abs_on_ring(q.tail_cut, 2.0 * grid.spacing()) / f.max_abs();
                if tail > BASIS_TAIL {
                    return Err(Error::Domain(format!(
                        "grid too small for f_{m}{n}: relative modulus {tail:.2e} at the cut radius {}",
                        q.tail_cut
                    )));
                }
                columns.column_mut(m * size + n).copy_from_slice(f.values().as_slice());
            }
        }
        Ok(BasisCache {
            grid,
            theta,
            size,
            columns,
            left_raiser: left_name,
            right_raiser: right_name,
            kappas: (kl, kr),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn left_raiser(&self) -> &'static str {
        self.left_raiser
    }

    pub fn right_raiser(&self) -> &'static str {
        self.right_raiser
    }

    /// Mean ratio of the fitted raising constants to `√(θ(k+1))`, left then
    /// right.
    pub fn kappa(&self) -> [f64; 2] {
        let mean = |v: &Vec<f64>| if v.is_empty() { 1.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        [mean(&self.kappas.0), mean(&self.kappas.1)]
    }

    /// Largest deviation of a raising constant from `√(θ(k+1))`.
    pub fn kappa_spread(&self) -> f64 {
        self.kappas.0.iter().chain(&self.kappas.1).map(|k| (k - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn fmn(&self, m: usize, n: usize) -> Result<SampledFunction> {
        if m >= self.size || n >= self.size {
            return Err(Error::Domain(format!("f_{m}{n} outside basis of size {}", self.size)));
        }
        let p = self.grid.n_pts;
        let col = self.columns.column(m * self.size + n);
        SampledFunction::new(self.grid, self.theta, DMatrix::from_column_slice(p, p, col.as_slice()))
    }

    /// Coefficients `a_mn = (1/2πθ) ∫ conj(f_mn) f` of several functions at
    /// once; returns one `size²` column per input.
    pub(crate) fn project_batch(&self, fs: &[SampledFunction]) -> Result<DMatrix<Complex64>> {
        let n2 = self.grid.n_pts * self.grid.n_pts;
        let mut stacked = DMatrix::zeros(n2, fs.len());
        for (k, f) in fs.iter().enumerate() {
            if *f.grid() != self.grid || f.theta() != self.theta {
                return Err(Error::Dimension("function and basis live on different grids".into()));
            }
            stacked.column_mut(k).copy_from_slice(f.values().as_slice());
        }
        let h = self.grid.spacing();
        let scale = h * h / (2.0 * std::f64::consts::PI * self.theta);
        Ok(cgemm(&self.columns.adjoint(), &stacked) * Complex64::new(scale, 0.0))
    }
}

/// Samples of `f_mn` on `grid`.
pub fn synthesize_fmn(m: usize, n: usize, theta: f64, grid: Grid) -> Result<SampledFunction> {
    let q = QuadratureSpec::for_grid(&grid, theta);
    BasisCache::build(theta, grid, &q, m.max(n) + 1)?.fmn(m, n)
}

/// Coefficients of `f` on `f_mn`, `m, n < trunc`.
pub fn project_coefficients(f: &SampledFunction, basis: &BasisCache, trunc: usize) -> Result<TruncatedElement> {
    if trunc > basis.size() {
        return Err(Error::Domain(format!("truncation {trunc} exceeds basis size {}", basis.size())));
    }
    let col = basis.project_batch(std::slice::from_ref(f))?;
    let s = basis.size();
    TruncatedElement::new(f.theta(), DMatrix::from_fn(trunc, trunc, |m, n| col[(m * s + n, 0)]))
}

/// `Σ a_mn f_mn` sampled on the basis grid.
pub fn synthesize_element(a: &TruncatedElement, basis: &BasisCache) -> Result<SampledFunction> {
    if a.trunc() > basis.size() {
        return Err(Error::Domain(format!("truncation {} exceeds basis size {}", a.trunc(), basis.size())));
    }
    if a.theta() != basis.theta() {
        return Err(Error::Dimension(format!("theta mismatch: {} vs {}", a.theta(), basis.theta())));
    }
    let s = basis.size();
    let mut weights = nalgebra::DVector::zeros(s * s);
    for m in 0..a.trunc() {
        for n in 0..a.trunc() {
            weights[m * s + n] = a.coeffs()[(m, n)];
        }
    }
    let v = &basis.columns * weights;
    let p = basis.grid.n_pts;
    SampledFunction::new(basis.grid, basis.theta, DMatrix::from_column_slice(p, p, v.as_slice()))
}

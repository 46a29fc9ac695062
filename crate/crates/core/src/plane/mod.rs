//! Sampled functions on a square grid and a brute-force quadrature oracle for
//! the Moyal product.
//!
//! The oracle is independent of the matrix-base algebra: it evaluates the
//! defining oscillatory integral directly and is used to calibrate the ladder
//! tables consumed by [`crate::fock`].

mod basis;
mod calibration;
mod linalg;
mod star;

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use basis::{project_coefficients, synthesize_element, synthesize_fmn, BasisCache};
pub use calibration::{ladder_calibration, CalibrationReport, CALIBRATION_LIMIT};
pub use star::{
    moyal_star_quadrature, star_linear_left, star_linear_left_many, star_linear_right, star_linear_right_many, LinearFunction,
    StarResult,
};

/// Uniform periodic grid `x_j = −L + j·h`, `h = 2L / n_pts`, on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_pts: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(n_pts: usize, half_width: f64) -> Result<Self> {
        if n_pts < 16 {
            return Err(Error::Domain(format!("grid needs at least 16 points per axis, got {n_pts}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("grid half-width must be positive, got {half_width}")));
        }
        Ok(Grid { n_pts, half_width })
    }

    /// 128 points on `[−8√θ, 8√θ)`.
    pub fn standard(theta: f64) -> Self {
        Grid { n_pts: 128, half_width: 8.0 * theta.sqrt() }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_pts as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_pts).map(|j| self.coord(j)).collect()
    }
}

/// Quadrature rule families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Trapezoid,
    GaussHermite,
}

/// Quadrature parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: Rule,
    pub n_nodes: usize,
    /// Radius beyond which inputs are treated as zero.
    pub tail_cut: f64,
}

impl QuadratureSpec {
    pub fn new(rule: Rule, n_nodes: usize, tail_cut: f64) -> Result<Self> {
        if n_nodes < 8 {
            return Err(Error::Domain(format!("quadrature needs at least 8 nodes, got {n_nodes}")));
        }
        if !(tail_cut > 0.0) {
            return Err(Error::Domain(format!("tail cut must be positive, got {tail_cut}")));
        }
        Ok(QuadratureSpec { rule, n_nodes, tail_cut })
    }

    /// Trapezoid rule on the nodes of `grid`. The cut is the inscribed disk,
    /// shrunk where needed so that the oscillation `exp(2i yΘ⁻¹x)` stays six
    /// Gaussian widths below the grid's Nyquist frequency.
    pub fn for_grid(grid: &Grid, theta: f64) -> Self {
        let alias_free = theta * std::f64::consts::PI / grid.spacing() - 6.0 * theta.sqrt();
        QuadratureSpec { rule: Rule::Trapezoid, n_nodes: grid.n_pts, tail_cut: grid.half_width.min(alias_free) }
    }

    /// Sampled functions only support the trapezoid rule on their own nodes.
    pub(crate) fn check_sampled(&self, grid: &Grid) -> Result<()> {
        if self.rule != Rule::Trapezoid {
            return Err(Error::Configuration(
                "sampled functions require the trapezoid rule; Gauss-Hermite applies to closures only".into(),
            ));
        }
        if self.n_nodes != grid.n_pts {
            return Err(Error::Configuration(format!(
                "trapezoid nodes ({}) must equal the grid points ({})",
                self.n_nodes, grid.n_pts
            )));
        }
        Ok(())
    }
}

/// Complex samples `values[(i, j)] = f(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    theta: f64,
    values: DMatrix<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, theta: f64, values: DMatrix<Complex64>) -> Result<Self> {
        let grid = Grid::new(grid.n_pts, grid.half_width)?;
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Domain(format!("theta must be positive, got {theta}")));
        }
        if values.nrows() != grid.n_pts || values.ncols() != grid.n_pts {
            return Err(Error::Dimension(format!(
                "samples are {}x{}, grid has {} points per axis",
                values.nrows(),
                values.ncols(),
                grid.n_pts
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("samples must be finite".into()));
        }
        Ok(SampledFunction { grid, theta, values })
    }

    pub fn from_fn(grid: Grid, theta: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let xs = grid.coords();
        let values = DMatrix::from_fn(grid.n_pts, grid.n_pts, |i, j| f(xs[i], xs[j]));
        Self::new(grid, theta, values)
    }

    pub fn zeros(grid: Grid, theta: f64) -> Result<Self> {
        Self::new(grid, theta, DMatrix::zeros(grid.n_pts, grid.n_pts))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub(crate) fn with_values(&self, values: DMatrix<Complex64>) -> Self {
        SampledFunction { grid: self.grid, theta: self.theta, values }
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension("sampled functions live on different grids".into()));
        }
        if self.theta != other.theta {
            return Err(Error::Dimension(format!("theta mismatch: {} vs {}", self.theta, other.theta)));
        }
        Ok(())
    }

    pub fn conj(&self) -> Self {
        self.with_values(self.values.map(|z| z.conj()))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.with_values(self.values.map(|z| z * c))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_values(&self.values + &other.values))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_values(&self.values - &other.values))
    }

    /// Ordinary product with a function of position.
    pub fn multiply_by(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = self.grid.coords();
        let mut v = self.values.clone();
        for j in 0..self.grid.n_pts {
            for i in 0..self.grid.n_pts {
                v[(i, j)] *= f(xs[i], xs[j]);
            }
        }
        self.with_values(v)
    }

    /// Trapezoid integral `∫ f d²x`.
    pub fn integral(&self) -> Complex64 {
        let h = self.grid.spacing();
        self.values.sum() * (h * h)
    }

    /// `∫ conj(f) g d²x`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let h = self.grid.spacing();
        Ok(self.values.dotc(&other.values) * (h * h))
    }

    /// Function-space `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        self.values.norm() * h
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus at radius `> r`.
    pub fn max_abs_beyond(&self, r: f64) -> f64 {
        let xs = self.grid.coords();
        let mut m = 0.0f64;
        for j in 0..self.grid.n_pts {
            for i in 0..self.grid.n_pts {
                if xs[i] * xs[i] + xs[j] * xs[j] > r * r {
                    m = m.max(self.values[(i, j)].norm());
                }
            }
        }
        m
    }

    /// Largest modulus on the ring `r − width < |x| ≤ r`.
    pub fn max_abs_on_ring(&self, r: f64, width: f64) -> f64 {
        let xs = self.grid.coords();
        let (lo, hi) = ((r - width).max(0.0).powi(2), r * r);
        let mut m = 0.0f64;
        for j in 0..self.grid.n_pts {
            for i in 0..self.grid.n_pts {
                let r2 = xs[i] * xs[i] + xs[j] * xs[j];
                if r2 > lo && r2 <= hi {
                    m = m.max(self.values[(i, j)].norm());
                }
            }
        }
        m
    }

    /// Spectral derivative `∂_μ f`, exact for band-limited periodic samples.
    pub fn partial(&self, mu: usize) -> Result<Self> {
        let axis = match mu {
            1 => 0,
            2 => 1,
            _ => return Err(Error::Domain(format!("coordinate index must be 1 or 2, got {mu}"))),
        };
        Ok(self.with_values(linalg::spectral_derivative(&self.values, self.grid.half_width, axis)))
    }

    /// Writes `x1,x2,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x1,x2,re,im")?;
        let xs = self.grid.coords();
        for i in 0..self.grid.n_pts {
            for j in 0..self.grid.n_pts {
                let z = self.values[(i, j)];
                writeln!(w, "{:.12e},{:.12e},{:.12e},{:.12e}", xs[i], xs[j], z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Gauss–Hermite nodes and weights for `∫ e^{−t²} p(t) dt`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Integral of a closure over the plane.
///
/// The Gauss–Hermite rule integrates `f(x)` against the weight
/// `exp(−|x|²/θ)` removed from `f`, so it is exact for Gaussian×polynomial
/// integrands of width `√θ`. The trapezoid rule uses `n_nodes` points on
/// `[−tail_cut, tail_cut)`.
pub fn integrate_closure(f: impl Fn(f64, f64) -> Complex64, theta: f64, q: &QuadratureSpec) -> Complex64 {
    match q.rule {
        Rule::GaussHermite => {
            let (t, w) = gauss_hermite(q.n_nodes);
            let s = theta.sqrt();
            let mut acc = Complex64::new(0.0, 0.0);
            for (ti, wi) in t.iter().zip(&w) {
                for (tj, wj) in t.iter().zip(&w) {
                    let (x1, x2) = (s * ti, s * tj);
                    acc += f(x1, x2) * (wi * wj * (ti * ti + tj * tj).exp());
                }
            }
            acc * theta
        }
        Rule::Trapezoid => {
            let grid = Grid { n_pts: q.n_nodes, half_width: q.tail_cut };
            let h = grid.spacing();
            let xs = grid.coords();
            let mut acc = Complex64::new(0.0, 0.0);
            for &x1 in &xs {
                for &x2 in &xs {
                    acc += f(x1, x2);
                }
            }
            acc * (h * h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(16, 0.0).is_err());
        let g = Grid::new(16, 2.0).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.coord(8), 0.0);
    }

    #[test]
    fn gaussian_integral_both_rules() {
        let theta = 0.7;
        let f = |x1: f64, x2: f64| Complex64::new((x1 * x1 + 1.0) * (-(x1 * x1 + x2 * x2) / theta).exp(), 0.0);
        let exact = std::f64::consts::PI * theta * (1.0 + theta / 2.0);
        let gh = QuadratureSpec::new(Rule::GaussHermite, 10, 1.0).unwrap();
        assert!((integrate_closure(f, theta, &gh).re - exact).abs() < 1e-12);
        let tr = QuadratureSpec::new(Rule::Trapezoid, 64, 8.0 * theta.sqrt()).unwrap();
        assert!((integrate_closure(f, theta, &tr).re - exact).abs() < 1e-12);
    }

    #[test]
    fn sampled_ops_reject_other_rules() {
        let g = Grid::standard(1.0);
        let gh = QuadratureSpec::new(Rule::GaussHermite, 20, 5.0).unwrap();
        assert!(matches!(gh.check_sampled(&g), Err(Error::Configuration(_))));
        let tr = QuadratureSpec::new(Rule::Trapezoid, 64, 5.0).unwrap();
        assert!(matches!(tr.check_sampled(&g), Err(Error::Configuration(_))));
        assert!(QuadratureSpec::for_grid(&g, 1.0).check_sampled(&g).is_ok());
    }

    #[test]
    fn spectral_derivative_of_gaussian() {
        let theta = 1.0;
        let g = Grid::new(64, 8.0).unwrap();
        let f = SampledFunction::from_fn(g, theta, |x1, x2| Complex64::new((-(x1 * x1 + x2 * x2)).exp(), 0.0)).unwrap();
        let d1 = f.partial(1).unwrap();
        let exact = SampledFunction::from_fn(g, theta, |x1, x2| Complex64::new(-2.0 * x1 * (-(x1 * x1 + x2 * x2)).exp(), 0.0)).unwrap();
        assert!(d1.sub(&exact).unwrap().max_abs() < 1e-12);
    }
}

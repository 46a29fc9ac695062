//! Quadrature star product against the matrix product on sampled `f_mn`.

use num_complex::Complex64;

use moyal_core::plane::{moyal_star_quadrature, project_coefficients, BasisCache, Grid, QuadratureSpec};
use moyal_core::TruncatedElement;

const WINDOW: usize = 4;

#[test]
fn star_product_window_matches_matrix_product() {
    let theta: f64 = 1.0;
    let grid = Grid::new(48, 7.0 * theta.sqrt()).unwrap();
    let q = QuadratureSpec::for_grid(&grid, theta);
    let basis = BasisCache::build(theta, grid, &q, WINDOW).unwrap();
    let mut worst = 0.0f64;
    for m in 0..WINDOW {
        for n in 0..WINDOW {
            let f = basis.fmn(m, n).unwrap();
            for p in 0..WINDOW {
                for k in 0..WINDOW {
                    let g = basis.fmn(p, k).unwrap();
                    let prod = moyal_star_quadrature(&f, &g, &q).unwrap().value;
                    let got = project_coefficients(&prod, &basis, WINDOW).unwrap();
                    let want = if n == p {
                        TruncatedElement::unit(theta, WINDOW, m, k).unwrap()
                    } else {
                        TruncatedElement::zeros(theta, WINDOW).unwrap()
                    };
                    worst = worst.max((got.coeffs() - want.coeffs()).norm());
                }
            }
        }
    }
    assert!(worst < 1e-5, "window deviation {worst:e}");
}

#[test]
fn ground_state_is_a_projector_with_the_right_trace() {
    let theta: f64 = 2.0;
    let grid = Grid::new(48, 7.0 * theta.sqrt()).unwrap();
    let q = QuadratureSpec::for_grid(&grid, theta);
    let basis = BasisCache::build(theta, grid, &q, 2).unwrap();
    let f00 = basis.fmn(0, 0).unwrap();
    let integral = f00.integral();
    let want = TruncatedElement::unit(theta, 2, 0, 0).unwrap().trace_integral();
    assert!((integral - want).norm() < 1e-8 * want.norm());
    let sq = moyal_star_quadrature(&f00, &f00, &q).unwrap().value;
    assert!(sq.sub(&f00).unwrap().max_abs() < 1e-8);
    let zero = Complex64::new(0.0, 0.0);
    assert_eq!(f00.scale(zero).max_abs(), 0.0);
}

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Complex matrix product through four real products, which route through the
/// blocked real kernels.
pub(crate) fn cgemm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

fn split(a: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

/// Derivative along `axis` (0 for rows, 1 for columns) of periodic samples on
/// a grid of period `2·half_width`.
pub(crate) fn spectral_derivative(values: &DMatrix<Complex64>, half_width: f64, axis: usize) -> DMatrix<Complex64> {
    let n = if axis == 0 { values.nrows() } else { values.ncols() };
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let period = 2.0 * half_width;
    let wave: Vec<f64> = (0..n)
        .map(|p| {
            let k = if p < n / 2 {
                p as f64
            } else if p == n / 2 && n % 2 == 0 {
                0.0
            } else {
                p as f64 - n as f64
            };
            2.0 * std::f64::consts::PI * k / period
        })
        .collect();
    let mut out = values.clone();
    let lines = if axis == 0 { values.ncols() } else { values.nrows() };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..lines {
        for (p, b) in buf.iter_mut().enumerate() {
            *b = if axis == 0 { values[(p, l)] } else { values[(l, p)] };
        }
        fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&wave) {
            *b *= Complex64::new(0.0, *k / n as f64);
        }
        inv.process(&mut buf);
        for (p, b) in buf.iter().enumerate() {
            if axis == 0 {
                out[(p, l)] = *b;
            } else {
                out[(l, p)] = *b;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cgemm_matches_generic_product() {
        let a = DMatrix::from_fn(5, 3, |i, j| Complex64::new(i as f64 - 1.0, (j * i) as f64 * 0.3));
        let b = DMatrix::from_fn(3, 4, |i, j| Complex64::new(0.5 * j as f64, 1.0 - i as f64));
        assert!((cgemm(&a, &b) - &a * &b).norm() < 1e-13);
    }
}

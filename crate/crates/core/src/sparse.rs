//! Sparse square matrices used as left/right factors of operators on the
//! truncated coefficient space.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Square sparse matrix stored as row-grouped triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    dim: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.push(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_dense(a: &DMatrix<Complex64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "sparse factors are square");
        let mut m = Self::zeros(a.nrows());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != Complex64::new(0.0, 0.0) {
                    m.push(i, j, v);
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn push(&mut self, i: usize, j: usize, v: Complex64) {
        let row = &mut self.rows[i];
        match row.iter_mut().find(|(c, _)| *c == j) {
            Some((_, x)) => *x += v,
            None => row.push((j, v)),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i]
            .iter()
            .find(|(c, _)| *c == j)
            .map(|&(_, v)| v)
            .unwrap_or_default()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            a[(i, j)] += v;
        }
        a
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| (j, v * c)).collect())
            .collect();
        Self {
            dim: self.dim,
            rows,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for (i, j, v) in self.entries() {
            m.push(j, i, v.conj());
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = self.clone();
        for (i, j, v) in other.entries() {
            m.push(i, j, v);
        }
        m
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        let mut m = Self::zeros(self.dim);
        for (i, k, a) in self.entries() {
            for &(j, b) in &other.rows[k] {
                m.push(i, j, a * b);
            }
        }
        m.prune(0.0);
        m
    }

    /// Drops entries with modulus `<= tol`.
    pub fn prune(&mut self, tol: f64) {
        for r in &mut self.rows {
            r.retain(|(_, v)| v.norm() > tol);
        }
    }

    /// `out += c * self * x`.
    pub fn left_mul_acc(&self, c: Complex64, x: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let ncols = x.ncols();
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                let w = c * v;
                for j in 0..ncols {
                    out[(i, j)] += w * x[(k, j)];
                }
            }
        }
    }

    /// `out += c * x * self`.
    pub fn right_mul_acc(&self, c: Complex64, x: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let nrows = x.nrows();
        for (k, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                let w = c * v;
                for i in 0..nrows {
                    out[(i, j)] += w * x[(i, k)];
                }
            }
        }
    }

    pub fn left_mul(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim, x.ncols());
        self.left_mul_acc(Complex64::new(1.0, 0.0), x, &mut out);
        out
    }

    pub fn right_mul(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(x.nrows(), self.dim);
        self.right_mul_acc(Complex64::new(1.0, 0.0), x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn products_match_dense() {
        let mut a = SparseMat::zeros(3);
        a.push(1, 0, c(2.0, 1.0));
        a.push(2, 2, c(-1.0, 0.0));
        let mut b = SparseMat::zeros(3);
        b.push(0, 1, c(0.0, 3.0));
        b.push(2, 0, c(1.0, 1.0));
        let dense = a.to_dense() * b.to_dense();
        assert!((a.matmul(&b).to_dense() - &dense).norm() < 1e-14);

        let x = DMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        assert!((a.left_mul(&x) - a.to_dense() * &x).norm() < 1e-14);
        assert!((a.right_mul(&x) - &x * a.to_dense()).norm() < 1e-14);
        assert!((a.adjoint().to_dense() - a.to_dense().adjoint()).norm() < 1e-14);
    }
}

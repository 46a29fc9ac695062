//! Dense and block-sparse hermitian linear algebra.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Disjoint-set forest with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Groups of indices, each sorted, ordered by smallest member.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.parent.len() {
            let r = self.find(i);
            map.entry(r).or_default().push(i);
        }
        map.into_values().collect()
    }
}

/// Relative size below which accumulated entries count as cancellation
/// residue when detecting invariant blocks.
pub const BLOCK_DROP: f64 = 1e-10;

/// Sums duplicate `(source, target, value)` triplets and drops entries with
/// modulus at most `drop · max|v|`.
pub fn accumulate(triplets: &[(usize, usize, Complex64)], drop: f64) -> BTreeMap<(usize, usize), Complex64> {
    let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for &(src, dst, v) in triplets {
        *acc.entry((src, dst)).or_insert(Complex64::new(0.0, 0.0)) += v;
    }
    let cut = drop * acc.values().map(|v| v.norm()).fold(0.0, f64::max);
    acc.retain(|_, v| v.norm() > cut);
    acc
}

/// Connected components of the sparsity graph of an operator on `dim`
/// coordinates, each with its dense restriction `M[target, source]`.
/// Entries below [`BLOCK_DROP`] relative to the largest are discarded.
pub fn dense_blocks(dim: usize, triplets: &[(usize, usize, Complex64)]) -> Vec<(Vec<usize>, DMatrix<Complex64>)> {
    let acc = accumulate(triplets, BLOCK_DROP);
    let mut uf = UnionFind::new(dim);
    for &(src, dst) in acc.keys() {
        uf.union(src, dst);
    }
    let groups = uf.groups();
    let mut slot = vec![(0usize, 0usize); dim];
    for (g, members) in groups.iter().enumerate() {
        for (k, &i) in members.iter().enumerate() {
            slot[i] = (g, k);
        }
    }
    let mut blocks: Vec<DMatrix<Complex64>> = groups.iter().map(|m| DMatrix::zeros(m.len(), m.len())).collect();
    for (&(src, dst), &v) in &acc {
        let (g, ks) = slot[src];
        let (_, kd) = slot[dst];
        blocks[g][(kd, ks)] += v;
    }
    groups.into_iter().zip(blocks).collect()
}

/// Eigenvalues of a hermitian operator given by triplets, ascending. The
/// operator is symmetrized as `(M + M†)/2` blockwise.
pub fn block_hermitian_eigenvalues(dim: usize, triplets: &[(usize, usize, Complex64)]) -> Vec<f64> {
    let mut eigs = Vec::with_capacity(dim);
    for (_, m) in dense_blocks(dim, triplets) {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        if h.nrows() == 1 {
            eigs.push(h[(0, 0)].re);
        } else {
            eigs.extend(h.symmetric_eigenvalues().iter().copied());
        }
    }
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Settings for the iterative largest-singular-value solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Relative Ritz residual on `T†T` accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { tol: 1e-12, max_iter: 400, seed: 0x5eed }
    }
}

/// Largest singular value of the operator `t` on `C^dim`, given `t` and its
/// adjoint as closures.
pub fn top_singular_value<F, G>(dim: usize, apply: F, apply_adjoint: G, opts: &NormOptions) -> Result<f64>
where
    F: Fn(&DVector<Complex64>) -> DVector<Complex64>,
    G: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    Ok(lanczos_top(dim, |x| apply_adjoint(&apply(x)), opts)?.0.sqrt())
}

/// Leading singular triplet `(σ, u, v)` of a dense matrix, `m v = σ u`.
pub fn top_singular_triplet(m: &DMatrix<Complex64>, opts: &NormOptions) -> Result<(f64, DVector<Complex64>, DVector<Complex64>)> {
    let adj = m.adjoint();
    let (lambda, v) = lanczos_top(m.ncols(), |x| &adj * (m * x), opts)?;
    let sigma = lambda.sqrt();
    let mut u = m * &v;
    let norm = u.norm();
    if norm > 0.0 {
        u /= Complex64::new(norm, 0.0);
    } else if !u.is_empty() {
        u[0] = Complex64::new(1.0, 0.0);
    }
    Ok((sigma, u, v))
}

/// Largest eigenpair of a positive semidefinite `h` on `C^dim`. Lanczos with
/// full reorthogonalization, started from a fixed vector with a seeded
/// perturbation.
fn lanczos_top<H>(dim: usize, h: H, opts: &NormOptions) -> Result<(f64, DVector<Complex64>)>
where
    H: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    if dim == 0 {
        return Ok((0.0, DVector::zeros(0)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q = DVector::from_fn(dim, |_, _| {
        Complex64::new(1.0 + 0.1 * rng.random_range(-1.0..1.0), 0.1 * rng.random_range(-1.0..1.0))
    });
    q /= Complex64::new(q.norm(), 0.0);

    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut scale = 0.0f64;
    let (mut estimate, mut residual) = (0.0, f64::INFINITY);
    let steps = opts.max_iter.min(dim);
    for k in 0..steps {
        let mut w = h(&q);
        let a = q.dotc(&w).re;
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dotc(&w);
                w.axpy(-c, v, Complex64::new(1.0, 0.0));
            }
        }
        let b = w.norm();
        scale = scale.max(a.abs()).max(b);
        if scale == 0.0 {
            return Ok((0.0, basis.swap_remove(0)));
        }
        let m = k + 1;
        let tri = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = tri.symmetric_eigen();
        let top = eig.eigenvalues.imax();
        estimate = eig.eigenvalues[top].max(0.0);
        residual = b * eig.eigenvectors[(m - 1, top)].abs();
        if residual <= opts.tol * estimate.max(f64::MIN_POSITIVE) || b <= 1e-14 * scale || m == dim {
            let mut ritz = DVector::zeros(dim);
            for (i, v) in basis.iter().enumerate() {
                ritz.axpy(Complex64::new(eig.eigenvectors[(i, top)], 0.0), v, Complex64::new(1.0, 0.0));
            }
            let norm = ritz.norm();
            ritz /= Complex64::new(norm, 0.0);
            return Ok((estimate, ritz));
        }
        beta.push(b);
        q = w / Complex64::new(b, 0.0);
    }
    Err(Error::NonConvergence { iterations: steps, estimate: estimate.sqrt(), residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_follow_connectivity() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let t = vec![(0, 2, c(1.0)), (2, 0, c(1.0)), (1, 1, c(3.0)), (3, 3, c(-1.0)), (3, 3, c(1.0))];
        let blocks = dense_blocks(4, &t);
        let sizes: Vec<usize> = blocks.iter().map(|b| b.0.len()).collect();
        assert_eq!(sizes, vec![2, 1, 1]);
        let eigs = block_hermitian_eigenvalues(4, &t);
        assert_eq!(eigs.len(), 4);
        assert!((eigs[0] + 1.0).abs() < 1e-14 && (eigs[3] - 3.0).abs() < 1e-14);
        assert!(eigs[1].abs() < 1e-14 && (eigs[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_matches_dense_svd() {
        let n = 12;
        let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, (i as f64 - j as f64).sin()));
        let want = spectral_norm(&m);
        let adj = m.adjoint();
        let got = top_singular_value(n, |x| &m * x, |x| &adj * x, &NormOptions::default()).unwrap();
        assert!((got - want).abs() < 1e-10 * want);
        let zero = DMatrix::<Complex64>::zeros(n, n);
        assert_eq!(top_singular_value(n, |x| &zero * x, |x| &zero * x, &NormOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn lanczos_reports_non_convergence() {
        let n = 40;
        let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(if i == j { 1.0 + i as f64 * 1e-3 } else { 0.0 }, 0.0));
        let opts = NormOptions { max_iter: 2, ..NormOptions::default() };
        assert!(matches!(
            top_singular_value(n, |x| &m * x, |x| &m * x, &opts),
            Err(Error::NonConvergence { iterations: 2, .. })
        ));
    }

    #[test]
    fn triplet_vectors_are_singular_vectors() {
        let n = 10;
        let m = DMatrix::from_fn(n, n, |i, j| Complex64::new((i as f64 * 0.3 - j as f64).cos(), (i * j) as f64 * 0.01));
        let (s, u, v) = top_singular_triplet(&m, &NormOptions::default()).unwrap();
        assert!((s - spectral_norm(&m)).abs() < 1e-10 * s);
        assert!((&m * &v - &u * Complex64::new(s, 0.0)).norm() < 1e-6 * s);
        assert!((m.adjoint() * &u - &v * Complex64::new(s, 0.0)).norm() < 1e-6 * s);
    }
}

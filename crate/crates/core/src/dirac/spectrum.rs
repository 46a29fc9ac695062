use num_complex::Complex64;
use serde::Serialize;

use super::operator::{BlockOp, FockOp};
use crate::error::Result;
use crate::ladder::{Derivative, LadderOp, LadderTables, XtildeMode};
use crate::linalg::block_hermitian_eigenvalues;

fn partial(mu: usize, theta: f64, n: usize, tables: &LadderTables) -> Result<FockOp> {
    FockOp::ladder(LadderOp::Derivative(Derivative::partial(mu)), tables, n, theta)
}

fn multiplier(mu: usize, theta: f64, n: usize, tables: &LadderTables) -> Result<FockOp> {
    FockOp::ladder(LadderOp::Xtilde { mu, mode: XtildeMode::Pointwise }, tables, n, theta)
}

/// `H_h = −∂² + Ω² x̃²`.
pub fn harmonic_hamiltonian(omega: f64, theta: f64, n: usize, tables: &LadderTables) -> Result<FockOp> {
    let mut h = FockOp::zero(n);
    for mu in [1, 2] {
        let d = partial(mu, theta, n, tables)?;
        h = h.sub(&d.compose(&d));
        if omega != 0.0 {
            let x = multiplier(mu, theta, n, tables)?;
            h = h.add(&x.compose(&x).scale(Complex64::new(omega * omega, 0.0)));
        }
    }
    Ok(h)
}

/// `H_L = −∂² + ξ² x̃² − 2iξ x̃_μ ∂_μ`.
pub fn landau_hamiltonian(xi: f64, theta: f64, n: usize, tables: &LadderTables) -> Result<FockOp> {
    let mut h = FockOp::zero(n);
    for mu in [1, 2] {
        let d = partial(mu, theta, n, tables)?;
        let x = multiplier(mu, theta, n, tables)?;
        h = h.sub(&d.compose(&d));
        h = h.add(&x.compose(&x).scale(Complex64::new(xi * xi, 0.0)));
        h = h.add(&x.compose(&d).scale(Complex64::new(0.0, -2.0 * xi)));
    }
    Ok(h)
}

/// `P_μ = −i∂_μ + ξ m(x̃_μ)`.
pub(crate) fn momentum(mu: usize, xi: f64, theta: f64, n: usize, tables: &LadderTables) -> Result<FockOp> {
    let d = partial(mu, theta, n, tables)?.scale(Complex64::new(0.0, -1.0));
    let x = multiplier(mu, theta, n, tables)?.scale(Complex64::new(xi, 0.0));
    Ok(d.add(&x))
}

/// Group of numerically equal eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Sorted eigenvalues with their clusters.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Cluster>,
}

impl SpectrumReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cluster_index,eigenvalue,multiplicity\n");
        for (k, c) in self.clusters.iter().enumerate() {
            out.push_str(&format!("{k},{:.12e},{}\n", c.value, c.multiplicity));
        }
        out
    }
}

/// Groups ascending eigenvalues whose consecutive gaps are within
/// `tol · max(1, |λ|)`; the cluster value is the mean.
pub fn cluster_eigenvalues(eigs: &[f64], tol: f64) -> Vec<Cluster> {
    let mut clusters: Vec<(f64, Vec<f64>)> = Vec::new();
    for &e in eigs {
        match clusters.last_mut() {
            Some((last, members)) if (e - *last).abs() <= tol * e.abs().max(1.0) => {
                members.push(e);
                *last = e;
            }
            _ => clusters.push((e, vec![e])),
        }
    }
    clusters
        .into_iter()
        .map(|(_, m)| Cluster { value: m.iter().sum::<f64>() / m.len() as f64, multiplicity: m.len() })
        .collect()
}

/// Spectrum of a hermitian block operator.
pub fn hermitian_spectrum(op: &BlockOp, tol: f64) -> SpectrumReport {
    let dim = op.spinor_dim() * op.trunc() * op.trunc();
    let eigenvalues = block_hermitian_eigenvalues(dim, &op.triplets());
    let clusters = cluster_eigenvalues(&eigenvalues, tol);
    SpectrumReport { eigenvalues, clusters }
}

/// Least-squares line `value ≈ offset + spacing·k` through the first clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelFit {
    pub spacing: f64,
    pub offset: f64,
    /// Largest deviation from the line, relative to the spacing.
    pub max_deviation: f64,
}

pub fn fit_levels(clusters: &[Cluster], count: usize) -> Option<LevelFit> {
    let pts: Vec<(f64, f64)> = clusters.iter().take(count).enumerate().map(|(k, c)| (k as f64, c.value)).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let spacing = sxy / sxx;
    let offset = my - spacing * mx;
    let max_deviation = pts.iter().map(|p| (p.1 - offset - spacing * p.0).abs()).fold(0.0, f64::max) / spacing.abs();
    Some(LevelFit { spacing, offset, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustering_groups_close_values() {
        let c = cluster_eigenvalues(&[0.0, 1e-12, 1.0, 2.0, 2.0 + 1e-11, 2.0 + 2e-11], 1e-9);
        assert_eq!(c.iter().map(|c| c.multiplicity).collect::<Vec<_>>(), vec![2, 1, 3]);
    }

    #[test]
    fn level_fit_recovers_a_ladder() {
        let cl: Vec<Cluster> = (0..5).map(|k| Cluster { value: 0.5 + 2.0 * k as f64, multiplicity: 1 }).collect();
        let f = fit_levels(&cl, 5).unwrap();
        assert!((f.spacing - 2.0).abs() < 1e-14 && (f.offset - 0.5).abs() < 1e-14 && f.max_deviation < 1e-14);
        assert!(fit_levels(&cl[..1], 5).is_none());
    }

    #[test]
    fn zero_operator_has_zero_spectrum() {
        let op = BlockOp::zero(3, 2);
        let r = hermitian_spectrum(&op, 1e-9);
        assert_eq!(r.eigenvalues.len(), 18);
        assert!(r.eigenvalues.iter().all(|e| *e == 0.0));
        assert_eq!(r.clusters.len(), 1);
    }
}

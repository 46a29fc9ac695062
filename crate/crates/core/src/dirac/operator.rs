//! Operators on the truncated coefficient space and on spinors over it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ladder::{LadderOp, LadderTables};
use crate::sparse::SparseMat;

/// A spinor: one `N×N` coefficient matrix per component.
pub type Spinor = Vec<DMatrix<Complex64>>;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// One term `coef · L ψ R`; a missing factor is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FockTerm {
    pub coef: Complex64,
    pub left: Option<SparseMat>,
    pub right: Option<SparseMat>,
}

/// Linear operator `ψ ↦ Σ coef · L ψ R` on `N×N` coefficient matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOp {
    n: usize,
    terms: Vec<FockTerm>,
}

fn mul_opt(a: &Option<SparseMat>, b: &Option<SparseMat>) -> Option<SparseMat> {
    match (a, b) {
        (None, None) => None,
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (Some(x), Some(y)) => Some(x.matmul(y)),
    }
}

impl FockOp {
    pub fn zero(n: usize) -> Self {
        FockOp { n, terms: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        FockOp { n, terms: vec![FockTerm { coef: ONE, left: None, right: None }] }
    }

    /// `ψ ↦ M ψ`.
    pub fn left(m: SparseMat) -> Self {
        FockOp { n: m.dim(), terms: vec![FockTerm { coef: ONE, left: Some(m), right: None }] }
    }

    /// `ψ ↦ ψ M`.
    pub fn right(m: SparseMat) -> Self {
        FockOp { n: m.dim(), terms: vec![FockTerm { coef: ONE, left: None, right: Some(m) }] }
    }

    /// Calibrated ladder action `ψ ↦ L ψ + ψ R`.
    pub fn ladder(op: LadderOp, tables: &LadderTables, n: usize, theta: f64) -> Result<Self> {
        let (l, r) = tables.action(op, n, theta)?;
        let mut out = FockOp::zero(n);
        if l.nnz() > 0 {
            out.terms.push(FockTerm { coef: ONE, left: Some(l), right: None });
        }
        if r.nnz() > 0 {
            out.terms.push(FockTerm { coef: ONE, left: None, right: Some(r) });
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[FockTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            return FockOp::zero(self.n);
        }
        FockOp {
            n: self.n,
            terms: self.terms.iter().map(|t| FockTerm { coef: t.coef * c, ..t.clone() }).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FockOp { n: self.n, terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(FockTerm {
                    coef: a.coef * b.coef,
                    left: mul_opt(&a.left, &b.left),
                    right: mul_opt(&b.right, &a.right),
                });
            }
        }
        FockOp { n: self.n, terms }
    }

    /// Adjoint for the Frobenius inner product.
    pub fn adjoint(&self) -> Self {
        FockOp {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| FockTerm {
                    coef: t.coef.conj(),
                    left: t.left.as_ref().map(SparseMat::adjoint),
                    right: t.right.as_ref().map(SparseMat::adjoint),
                })
                .collect(),
        }
    }

    /// `out += c · self(ψ)`.
    pub fn apply_acc(&self, c: Complex64, psi: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        for t in &self.terms {
            let w = c * t.coef;
            match (&t.left, &t.right) {
                (None, None) => *out += psi * w,
                (Some(l), None) => l.left_mul_acc(w, psi, out),
                (None, Some(r)) => r.right_mul_acc(w, psi, out),
                (Some(l), Some(r)) => {
                    let tmp = l.left_mul(psi);
                    r.right_mul_acc(w, &tmp, out);
                }
            }
        }
    }

    pub fn apply(&self, psi: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        self.apply_acc(ONE, psi, &mut out);
        out
    }

    /// Matrix elements as `(source, target, value)` with flattened index
    /// `m·N + n`; duplicates are summed by the consumer.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let n = self.n;
        let ident: Vec<(usize, usize, Complex64)> = (0..n).map(|i| (i, i, ONE)).collect();
        let mut out = Vec::new();
        for t in &self.terms {
            let l: Vec<_> = t.left.as_ref().map(|m| m.entries().collect()).unwrap_or_else(|| ident.clone());
            let r: Vec<_> = t.right.as_ref().map(|m| m.entries().collect()).unwrap_or_else(|| ident.clone());
            // (L ψ R)_{kl} = Σ L_{ki} ψ_{ij} R_{jl}
            for &(k, i, lv) in &l {
                for &(j, lcol, rv) in &r {
                    out.push((i * n + j, k * n + lcol, t.coef * lv * rv));
                }
            }
        }
        out
    }
}

/// `s×s` block operator on spinors.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOp {
    n: usize,
    s: usize,
    blocks: Vec<FockOp>,
}

impl BlockOp {
    pub fn zero(n: usize, s: usize) -> Self {
        BlockOp { n, s, blocks: vec![FockOp::zero(n); s * s] }
    }

    /// `M ⊗ op` with `M` an `s×s` spinor matrix.
    pub fn tensor(m: &DMatrix<Complex64>, op: &FockOp) -> Self {
        let s = m.nrows();
        let mut out = BlockOp::zero(op.dim(), s);
        for a in 0..s {
            for b in 0..s {
                if m[(a, b)] != Complex64::new(0.0, 0.0) {
                    out.blocks[a * s + b] = op.scale(m[(a, b)]);
                }
            }
        }
        out
    }

    /// `1_s ⊗ L(A)`, the left-regular representation.
    pub fn left_regular(a: &DMatrix<Complex64>, s: usize) -> Self {
        Self::tensor(&DMatrix::identity(s, s), &FockOp::left(SparseMat::from_dense(a)))
    }

    pub fn trunc(&self) -> usize {
        self.n
    }

    pub fn spinor_dim(&self) -> usize {
        self.s
    }

    pub fn block(&self, a: usize, b: usize) -> &FockOp {
        &self.blocks[a * self.s + b]
    }

    pub fn add(&self, other: &Self) -> Self {
        BlockOp {
            n: self.n,
            s: self.s,
            blocks: self.blocks.iter().zip(&other.blocks).map(|(x, y)| x.add(y)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        BlockOp { n: self.n, s: self.s, blocks: self.blocks.iter().map(|b| b.scale(c)).collect() }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let s = self.s;
        let mut out = BlockOp::zero(self.n, s);
        for a in 0..s {
            for c in 0..s {
                let mut acc = FockOp::zero(self.n);
                for b in 0..s {
                    let (x, y) = (self.block(a, b), other.block(b, c));
                    if !x.is_zero() && !y.is_zero() {
                        acc = acc.add(&x.compose(y));
                    }
                }
                out.blocks[a * s + c] = acc;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let s = self.s;
        let mut out = BlockOp::zero(self.n, s);
        for a in 0..s {
            for b in 0..s {
                out.blocks[b * s + a] = self.block(a, b).adjoint();
            }
        }
        out
    }

    pub fn apply(&self, psi: &Spinor) -> Result<Spinor> {
        if psi.len() != self.s || psi.iter().any(|c| c.nrows() != self.n || c.ncols() != self.n) {
            return Err(Error::Dimension(format!(
                "spinor must have {} components of size {}x{}",
                self.s, self.n, self.n
            )));
        }
        let mut out = vec![DMatrix::zeros(self.n, self.n); self.s];
        for a in 0..self.s {
            for b in 0..self.s {
                self.block(a, b).apply_acc(ONE, &psi[b], &mut out[a]);
            }
        }
        Ok(out)
    }

    /// Matrix elements with flattened index `component·N² + m·N + n`.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let n2 = self.n * self.n;
        let mut out = Vec::new();
        for a in 0..self.s {
            for b in 0..self.s {
                for (src, dst, v) in self.block(a, b).triplets() {
                    out.push((b * n2 + src, a * n2 + dst, v));
                }
            }
        }
        out
    }

    /// Dense matrix; intended for small truncations.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.s * self.n * self.n;
        let mut m = DMatrix::zeros(d, d);
        for (src, dst, v) in self.triplets() {
            m[(dst, src)] += v;
        }
        m
    }
}

/// `Σ_a ⟨ψ_a, φ_a⟩` (Frobenius).
pub fn spinor_inner(psi: &Spinor, phi: &Spinor) -> Complex64 {
    psi.iter().zip(phi).map(|(x, y)| x.dotc(y)).sum()
}

pub fn spinor_norm(psi: &Spinor) -> f64 {
    psi.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

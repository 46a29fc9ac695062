//! Calibrated ladder tables.
//!
//! Every first-order operator used by the toolkit (the derivatives and the
//! three actions of the multiplier coordinates `x̃_μ`) acts on a matrix-base
//! element `e_mn` by shifting exactly one index by ±1. A table stores, for each
//! such shift, one dimensionless constant `c` so that the coefficient of the
//! shifted element is `c · sqrt(k / θ)`, where `k` is the larger of the old
//! and new value of the shifted index. The constants are produced by
//! [`crate::plane::ladder_calibration`] from sampled functions and persisted as
//! JSON; nothing here is hard-coded.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMat;

/// Which index of `e_mn` a shift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Row index `m` (realized as left multiplication).
    Left,
    /// Column index `n` (realized as right multiplication).
    Right,
}

/// Derivative directions available on the algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Derivative {
    /// `∂ = (∂₁ − i∂₂)/√2`
    Holomorphic,
    /// `∂̄ = (∂₁ + i∂₂)/√2`
    AntiHolomorphic,
    /// `∂₁`
    X1,
    /// `∂₂`
    X2,
}

impl Derivative {
    pub fn partial(mu: usize) -> Self {
        match mu {
            1 => Derivative::X1,
            2 => Derivative::X2,
            _ => panic!("coordinate index must be 1 or 2, got {mu}"),
        }
    }
}

/// How the coordinate multiplier `x̃_μ` acts on an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XtildeMode {
    /// `x̃_μ ⋆ a`
    StarLeft,
    /// `a ⋆ x̃_μ`
    StarRight,
    /// `x̃_μ · a`, the ordinary product
    Pointwise,
}

/// Operators covered by the calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LadderOp {
    Derivative(Derivative),
    Xtilde { mu: usize, mode: XtildeMode },
}

impl LadderOp {
    pub fn all() -> Vec<LadderOp> {
        let mut ops = vec![
            LadderOp::Derivative(Derivative::Holomorphic),
            LadderOp::Derivative(Derivative::AntiHolomorphic),
            LadderOp::Derivative(Derivative::X1),
            LadderOp::Derivative(Derivative::X2),
        ];
        for mu in [1, 2] {
            for mode in [XtildeMode::StarLeft, XtildeMode::StarRight, XtildeMode::Pointwise] {
                ops.push(LadderOp::Xtilde { mu, mode });
            }
        }
        ops
    }

    /// Stable key used in the JSON tables.
    pub fn key(&self) -> String {
        match self {
            LadderOp::Derivative(Derivative::Holomorphic) => "del".into(),
            LadderOp::Derivative(Derivative::AntiHolomorphic) => "delbar".into(),
            LadderOp::Derivative(Derivative::X1) => "d1".into(),
            LadderOp::Derivative(Derivative::X2) => "d2".into(),
            LadderOp::Xtilde { mu, mode } => {
                let m = match mode {
                    XtildeMode::StarLeft => "star_left",
                    XtildeMode::StarRight => "star_right",
                    XtildeMode::Pointwise => "pointwise",
                };
                format!("xt{mu}_{m}")
            }
        }
    }
}

/// One fitted shift law.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ShiftLaw {
    pub side: Side,
    /// +1 or −1.
    pub step: i32,
    /// Dimensionless constant `[re, im]`.
    pub coeff: [f64; 2],
    /// Max absolute deviation of calibration samples from the fitted law, in
    /// units of `1/√θ`.
    pub fit_residual: f64,
}

impl ShiftLaw {
    pub fn constant(&self) -> Complex64 {
        Complex64::new(self.coeff[0], self.coeff[1])
    }

    /// Coefficient of the shifted element when acting on index `idx`, or
    /// `None` when the shift leaves the index range `[0, n)`.
    pub fn weight(&self, idx: usize, n: usize, theta: f64) -> Option<Complex64> {
        let target = idx as i64 + self.step as i64;
        if target < 0 || target >= n as i64 {
            return None;
        }
        let k = idx.max(target as usize) as f64;
        Some(self.constant() * (k / theta).sqrt())
    }
}

/// Calibrated shifts of one operator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OpTable {
    pub shifts: Vec<ShiftLaw>,
    /// Largest projected coefficient outside the fitted shifts.
    pub sparsity_residual: f64,
}

impl OpTable {
    pub fn max_residual(&self) -> f64 {
        self.shifts
            .iter()
            .map(|s| s.fit_residual)
            .fold(self.sparsity_residual, f64::max)
    }
}

/// Provenance of a calibration run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CalibrationMeta {
    pub theta: f64,
    pub window: usize,
    pub n_pts: usize,
    pub half_width: f64,
    /// Fitted constants `κ` of the basis ladder `R ⋆ f_mn = κ √(θ(m+1)) f_{m+1,n}`
    /// for the left raiser, then the right raiser.
    pub basis_ladder: [f64; 2],
    /// Which linear function raises the row index: `"zbar"` for
    /// `(x₁ − i x₂)/√2` or `"z"` for `(x₁ + i x₂)/√2`; same for the column.
    pub left_raiser: String,
    pub right_raiser: String,
    /// Phase convention of the synthesized basis.
    pub phase_convention: String,
}

/// Collection of calibrated tables.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LadderTables {
    pub schema: u32,
    pub meta: CalibrationMeta,
    pub tables: BTreeMap<String, OpTable>,
}

static STORED: OnceLock<std::result::Result<LadderTables, String>> = OnceLock::new();

impl LadderTables {
    /// Tables shipped with the crate, produced by `moyal calibrate`.
    pub fn stored() -> Result<&'static LadderTables> {
        STORED
            .get_or_init(|| {
                serde_json::from_str(include_str!("../data/ladder_calibration.json"))
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::Configuration(format!("stored ladder tables unreadable: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn table(&self, op: LadderOp) -> Result<&OpTable> {
        self.tables
            .get(&op.key())
            .ok_or_else(|| Error::Configuration(format!("ladder table `{}` not calibrated", op.key())))
    }

    /// Largest fit or sparsity residual over all tables.
    pub fn max_residual(&self) -> f64 {
        self.tables.values().map(OpTable::max_residual).fold(0.0, f64::max)
    }

    /// Left and right factors `(L, R)` of `op` at truncation `n`, so that
    /// `op(a) = L·a + a·R` on coefficient matrices.
    pub fn action(&self, op: LadderOp, n: usize, theta: f64) -> Result<(SparseMat, SparseMat)> {
        let table = self.table(op)?;
        let mut left = SparseMat::zeros(n);
        let mut right = SparseMat::zeros(n);
        for shift in &table.shifts {
            for idx in 0..n {
                let Some(w) = shift.weight(idx, n, theta) else {
                    continue;
                };
                let target = (idx as i64 + shift.step as i64) as usize;
                match shift.side {
                    // e_mn -> e_{target,n}: L[target, idx]
                    Side::Left => left.push(target, idx, w),
                    // e_mn -> e_{m,target}: R[idx, target]
                    Side::Right => right.push(idx, target, w),
                }
            }
        }
        Ok((left, right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LadderTables {
        let mut tables = BTreeMap::new();
        tables.insert(
            "del".to_string(),
            OpTable {
                shifts: vec![
                    ShiftLaw { side: Side::Left, step: 1, coeff: [-1.0, 0.0], fit_residual: 0.0 },
                    ShiftLaw { side: Side::Right, step: -1, coeff: [1.0, 0.0], fit_residual: 0.0 },
                ],
                sparsity_residual: 0.0,
            },
        );
        LadderTables {
            schema: 1,
            meta: CalibrationMeta {
                theta: 1.0,
                window: 2,
                n_pts: 16,
                half_width: 8.0,
                basis_ladder: [1.0, 1.0],
                left_raiser: "zbar".into(),
                right_raiser: "z".into(),
                phase_convention: "test".into(),
            },
            tables,
        }
    }

    #[test]
    fn missing_table_is_configuration_error() {
        let t = toy();
        let err = t.table(LadderOp::Derivative(Derivative::X1)).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }

    #[test]
    fn action_places_weights_on_shifted_indices() {
        let t = toy();
        let (l, r) = t.action(LadderOp::Derivative(Derivative::Holomorphic), 4, 2.0).unwrap();
        // row shift m -> m+1 with weight -sqrt((m+1)/θ)
        assert!((l.get(1, 0).re + (0.5f64).sqrt()).abs() < 1e-15);
        assert!((l.get(3, 2).re + (1.5f64).sqrt()).abs() < 1e-15);
        // column shift n -> n-1 with weight +sqrt(n/θ)
        assert!((r.get(2, 1).re - 1.0).abs() < 1e-15);
        assert_eq!(l.nnz(), 3);
        assert_eq!(r.nnz(), 3);
    }
}

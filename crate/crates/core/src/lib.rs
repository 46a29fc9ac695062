//! Spectral triples on the Moyal plane at finite Fock truncation.
//!
//! Elements of the algebra are stored as coefficient matrices in the matrix
//! base `f_mn`. The ladder action of derivatives and coordinate multipliers is
//! calibrated against a sampled-function quadrature oracle ([`plane`]) and
//! stored as banded tables ([`ladder`]).

pub mod error;
pub mod dirac;
pub mod fock;
pub mod kernels;
pub mod plane;
pub mod ladder;
pub mod linalg;
pub mod lipschitz;
pub mod sparse;
pub mod states;

pub use error::{Error, Result};
pub use fock::{NormSpec, TruncatedElement};
pub use ladder::{Derivative, LadderOp, LadderTables, Side, XtildeMode};

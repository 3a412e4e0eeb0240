//! Signed link prediction in sparse social networks.
//!
//! The model factorizes a directed signed adjacency matrix as
//! `Ghat = U V U^T` and regularizes it with per-user personality scores:
//! users who behave optimistically are pushed toward higher predicted
//! degrees than their indifferent counterparts, pessimists toward lower
//! ones, each violation penalized through a squared hinge with a
//! rank-dependent margin. The crate bundles the score computation from
//! behavioral feedback, the gradient-descent trainer, a cross-validated
//! evaluation harness with AUC, and a synthetic-network generator for
//! end-to-end checks.
//!
//! The numerical core is generic over the floating-point type via
//! [`Scalar`]; the aliases below fix `f64`, which the CLI and the
//! acceptance suite use throughout.

pub mod error;
pub mod eval;
pub mod feedback;
pub mod graph;
pub mod model;
pub mod personality;
pub mod scalar;
pub mod scores;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type.
pub type Real = f64;

pub type Model = model::FactorModel<Real>;
pub type Hyper = model::Hyperparams<Real>;
pub type Margins = model::MarginRule<Real>;
pub type Scores = scores::PersonalityScores<Real>;
pub type Report = train::TrainReport<Real>;

//! Sparse counterfactual explanations for ordinal tabular classifiers.
//!
//! Given a trained classifier, an input row, and a mask of features that
//! cannot realistically change, this crate finds the smallest set of feature
//! changes that improves the predicted class by at least one notch. The
//! dense change comes from a masked, L1-penalized proximal solve; a sparsity
//! pass then ranks coordinates by relative change, builds nested sparse
//! candidates, and escalates the cross-entropy weight through a ladder until
//! a candidate qualifies.
//!
//! ```
//! use counterfact::model::{HiddenActivation, Layer, MlpModel};
//! use counterfact::solver::{CfProblem, SolverConfig, TargetDistKind};
//! use counterfact::sparsity::{run_sparsity, SparsityConfig};
//!
//! # fn main() -> counterfact::Result<()> {
//! // A 2-feature, 2-class classifier; x = (-0.65, 0.0) is predicted class 2.
//! let model = MlpModel::new(
//!     vec![Layer::new(2, vec![20.0, 2.0, -20.0, -2.0], vec![0.0, 0.0])?],
//!     HiddenActivation::Relu,
//! )?;
//! let problem = CfProblem::new(
//!     &model,
//!     vec![-0.65, 0.0],
//!     vec![1.0, 1.0], // both features may change
//!     1,              // target: the best class
//!     TargetDistKind::OneHot,
//! )?;
//! let result = run_sparsity(&problem, &SolverConfig::default(), &SparsityConfig::default())?;
//! let chosen = result.solved().expect("a one-feature change flips the class");
//! assert_eq!(chosen.l0, 1);
//! assert_eq!(chosen.predicted_ordinal, 1);
//! # Ok(())
//! # }
//! ```
//!
//! Modules:
//! - [`model`]: feed-forward classifier with exact input gradients and
//!   deterministic training.
//! - [`solver`]: the masked L1-penalized dense solvers (proximal and the
//!   dense gradient-descent baseline).
//! - [`sparsity`]: candidate construction, qualification, and the lambda
//!   escalation loop.
//! - [`synth`]: the seeded four-cluster benchmark generator.
//! - [`ingest`]: CSV loading, immutability masks, rating scales, scaling.
//! - [`eval`]: effort norms, matched-pairs t-tests, match rates, and batch
//!   aggregations.
//! - [`pipeline`]: per-row problem construction, batch driver, exports.
//! - [`report`]: the aggregate report tables and writers.
//! - [`stats`]: Student-t tails via an own incomplete-beta evaluation.
//! - [`fixtures`]: packaged sector name lists and the statement-like panel.

pub mod error;
pub mod eval;
pub mod fixtures;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod solver;
pub mod sparsity;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

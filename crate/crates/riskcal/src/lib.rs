//! Risk-aware evaluation and calibration of black-box multi-choice inference
//! models.
//!
//! The crate covers the full loop for studying how a model should *decide
//! whether to answer* a multi-choice instance at all:
//!
//! * [`domain`] — instances, benchmarks, confidence sets, and the argmax
//!   selection rule.
//! * [`rif`] — risk injection functions (NQ / WQ / NRA) that turn answerable
//!   instances into ambiguous ones, and balanced decision datasets built from
//!   them.
//! * [`features`] — feature extraction for learned decision rules, plus
//!   pluggable text embedders.
//! * [`forest`] — a from-scratch random-forest binary classifier with
//!   deterministic seeded training and versioned serialization.
//! * [`rules`] — the decision rules themselves (random, confidence-spread,
//!   calibrator, risk-adjusted calibrator, max-probability) and their
//!   training / tuning procedures.
//! * [`metrics`] — decision risk, composite risk (sensitivity, specificity,
//!   relative risk ratio with CI), significance testing, and risk-coverage
//!   curves.
//! * [`io`] — file formats for benchmarks, confidences, embeddings, rule
//!   artifacts and reports, plus a chat-completions confidence elicitation
//!   client.
//!
//! Numeric kernels are generic over the scalar type through [`scalar::Scalar`]
//! (any `num-traits` float works); the aliases below pin the `f64` instantiations
//! used by the file pipeline and CLI.

pub mod domain;
pub mod error;
pub mod features;
pub mod forest;
pub mod io;
pub mod metrics;
pub mod rif;
pub mod rules;
pub mod scalar;
pub(crate) mod util;

pub use error::Error;
pub use scalar::Scalar;

/// `Result` alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

// Concrete f64 instantiations used by the CLI and the on-disk pipeline.
pub type ConfidenceSet = domain::ConfidenceSet<f64>;
pub type Prediction = domain::Prediction<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type Forest = forest::Forest<f64>;
pub type DecisionRule = rules::DecisionRule<f64>;
pub type Decision = rules::Decision<f64>;
pub type EvalRecord = metrics::EvalRecord<f64>;

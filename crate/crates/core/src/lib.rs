//! Simulated paradigm elicitation: a rule-based inflection learner, a
//! penalty-keeping oracle, query-selection strategies and the evaluation
//! loop that ties them together.

pub mod corpus;
pub mod learner;
pub mod metrics;
pub mod oracle;
pub mod predictability;
pub mod runner;
pub mod scalar;
pub mod strategies;
pub mod synthlang;

pub use num_rational::Ratio;
pub use scalar::Scalar;

/// Exact rational scalar.
pub type Exact = Ratio<i64>;

pub type Heatmap = predictability::Heatmap<f64>;
pub type ExactHeatmap = predictability::Heatmap<Exact>;
pub type Weights = predictability::PredictivePowerWeights<f64>;
pub type Analysis = predictability::PredictabilityAnalysis<f64>;

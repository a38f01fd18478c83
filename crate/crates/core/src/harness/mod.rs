//! Evaluation harness: uncertainty, significance, thresholds, tuning,
//! and the nested encoder → model selection.
//!
//! The pieces compose in the order a study runs them:
//!
//! 1. [`bootstrap_metric`] turns fixed scores into paired metric
//!    replicates (B resamples, shared across methods);
//! 2. [`friedman_cd`] ranks methods per replicate and reports which are
//!    statistically distinguishable (Friedman omnibus, Wilcoxon
//!    post-hoc with Holm correction, maximal cliques);
//! 3. [`global_threshold`] / [`local_thresholds`] / [`cohort_eval`]
//!    translate scores into deployment targeting and per-cohort recall;
//! 4. [`random_search`] tunes the boosted reference model on validation
//!    AvRecall(10,40);
//! 5. [`select_encoder_then_model`] runs the whole nested selection and
//!    returns a refitted, serializable [`Pipeline`].
//!
//! Determinism: every stochastic step derives its stream from
//! (seed, unit index), so outputs are reproducible bit-for-bit and
//! independent of parallel scheduling.

mod bootstrap;
mod cd;
mod search;
mod select;
mod threshold;

pub use bootstrap::{bootstrap_metric, confidence_interval, BootstrapSet, MetricFn};
pub use cd::{friedman_cd, CDResult, PairwiseTest, ALPHA};
pub use search::{random_search, SearchResult, SearchSpace, TrialRecord};
pub use select::{
    fit_pipeline, select_encoder_then_model, EncoderOutcome, FamilyOutcome, LoggedTrial,
    ModelFamily, Pipeline, SelectionConfig, SelectionOutcome,
};
pub use threshold::{
    cohort_eval, global_threshold, local_thresholds, CohortReport, CohortRow, ThresholdMode,
};

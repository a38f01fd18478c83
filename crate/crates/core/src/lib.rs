//! Risk stratification for tuberculosis treatment adherence.
//!
//! This crate implements the full modeling pipeline used to rank treatment
//! episodes by their risk of loss to follow-up (LFU):
//!
//! * [`frame`] — columnar episode tables: CSV ingestion, register merging,
//!   imputation, cohort summaries, and a synthetic generator with known
//!   ground truth.
//! * [`split`] — temporal and random partitioning with leakage guards.
//! * [`encode`] — categorical encoders (count, target, leave-one-out,
//!   ordered-target, probability/odds ratios, n-gram similarity, minhash).
//! * [`model`] — scorers: rule baselines, decision tree, naive Bayes,
//!   boosted trees, cyclic gradient machine, and soft-voting ensembles.
//! * [`metric`] — top-k% rank metrics (Recall@k, AvRecall), AUC-ROC/PR.
//! * [`harness`] — bootstrap confidence intervals, critical-difference
//!   analysis, deployment thresholds, hyperparameter search, and the nested
//!   encoder/model selection protocol.
//! * [`equity`] — cohort-level performance repair: augmentation,
//!   reweighing, and per-cohort score shifts.
//! * [`multiplicity`] — predictive-multiplicity audit (ambiguity and
//!   discrepancy over an epsilon-performance set).
//! * [`explain`] — permutation feature importance, accumulated local
//!   effects, and local linear surrogates.
//!
//! Every stochastic step takes an explicit seed and is deterministic for a
//! fixed (input, config, seed) triple; parallelism never changes results.

pub mod encode;
pub mod equity;
pub mod error;
pub mod explain;
pub mod frame;
pub mod harness;
pub mod metric;
pub mod model;
pub mod multiplicity;
pub mod split;
pub mod util;

pub use error::{Error, Result};
pub use frame::{ColumnData, ColumnKind, ColumnSpec, Frame, Schema};

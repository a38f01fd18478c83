//! Command-line driver for the LFU risk-stratification pipeline.
//!
//! The binary exposes the pipeline as eleven subcommands that communicate
//! through on-disk artifacts in one output directory, so every report is
//! independently regenerable:
//!
//! ```text
//! synth | ingest  →  split  →  select  →  train  →  evaluate
//!                                            ├→  cohorts
//!                                            ├→  fairness
//!                                            ├→  multiplicity
//!                                            ├→  explain
//!                                            └→  report
//! ```
//!
//! All semantic knobs live in one TOML [`config::RunConfig`]; command-line
//! flags only rewrite config fields before anything runs. Every artifact is
//! stamped with the SHA-256 hash of the resolved configuration and the run
//! seed, commands refuse prerequisites stamped by a different
//! configuration, and two runs with equal hashes produce byte-identical
//! files.

pub mod artifact;
pub mod commands;
pub mod config;

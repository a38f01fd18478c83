//! The eleven pipeline commands and the on-disk artifacts they chain
//! through. Each command reads its prerequisites by conventional name from
//! the output directory, verifies their stamps, and writes its own
//! artifacts as `<command>.<name>.{csv,json}`.

pub mod cohorts;
pub mod evaluate;
pub mod explain;
pub mod fairness;
pub mod ingest;
pub mod multiplicity;
pub mod report;
pub mod select;
pub mod split;
pub mod synth;
pub mod train;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use lfurisk_core::encode::EncoderKind;
use lfurisk_core::frame::{read_csv, GroundTruth, Schema};
use lfurisk_core::harness::{ModelFamily, Pipeline};
use lfurisk_core::metric::av_recall;
use lfurisk_core::split::SplitPlan;
use lfurisk_core::{Error, Frame, Result};

use crate::artifact::Ctx;
use crate::config::{DataSource, RunConfig};

pub const SPLIT_MANIFEST: &str = "split.manifest.json";
pub const SELECT_OUTCOME: &str = "select.outcome.json";
pub const TRAIN_PIPELINE: &str = "train.pipeline.json";
pub const EVALUATE_REPORT: &str = "evaluate.metrics.json";
pub const COHORTS_REPORT: &str = "cohorts.report.json";
pub const FAIRNESS_SUMMARY: &str = "fairness.summary.json";
pub const MULTIPLICITY_REPORT: &str = "multiplicity.report.json";
pub const IMPORTANCE_REPORT: &str = "explain.importance.json";

/// Role of a split: what it may be used for.
pub const ROLE_TRAINING: &str = "training";
pub const ROLE_TUNING: &str = "tuning";
pub const ROLE_COMPARISON: &str = "comparison";
pub const ROLE_PASSIVE: &str = "passive_evaluation";

/// Pointer artifact produced by `synth` or `ingest`: where the register
/// and its schema live (paths relative to the output directory).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterManifest {
    pub source: String,
    pub csv: String,
    pub schema: String,
    /// Ground-truth artifact; only synthetic registers have one.
    pub truth: Option<String>,
    pub rows: usize,
    pub positives: usize,
}

/// Index lists plus usage roles produced by `split`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitArtifact {
    pub plan: SplitPlan,
    /// Split name → role (training / tuning / comparison /
    /// passive_evaluation).
    pub roles: BTreeMap<String, String>,
    /// Split name → original register row indices.
    pub splits: BTreeMap<String, Vec<usize>>,
}

impl SplitArtifact {
    pub fn rows(&self, name: &str) -> Result<&[usize]> {
        self.splits
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::config(format!("split manifest has no split named `{name}`")))
    }

    pub fn role(&self, name: &str) -> Result<&str> {
        self.roles
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| Error::config(format!("split manifest has no role for `{name}`")))
    }

    /// Materialize one split of the register.
    pub fn frame(&self, register: &Frame, name: &str) -> Result<Frame> {
        let rows = self.rows(name)?;
        if let Some(&bad) = rows.iter().find(|&&r| r >= register.n_rows()) {
            return Err(Error::data(format!(
                "split `{name}` indexes row {bad} but the register has {} rows",
                register.n_rows()
            )));
        }
        Ok(register.take_rows(rows))
    }

    /// Leakage guard: only training-role splits may fit models.
    pub fn guard_training(&self, name: &str) -> Result<()> {
        let role = self.role(name)?;
        if role != ROLE_TRAINING {
            return Err(Error::config(format!(
                "leakage guard: split `{name}` has role `{role}`; models may only be fitted on \
                 training splits"
            )));
        }
        Ok(())
    }
}

/// What `train` persists: the fitted pipeline and the choice that made it,
/// so later refits (augmentation, reweighing) reproduce it exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainArtifact {
    pub encoder: EncoderKind,
    pub family: ModelFamily,
    pub params: serde_json::Value,
    pub split: String,
    pub rows: usize,
    pub pipeline: Pipeline,
}

/// The register manifest name for the configured data source.
pub fn register_manifest_name(config: &RunConfig) -> &'static str {
    match config.data.source {
        DataSource::Synth => "synth.manifest.json",
        DataSource::Csv => "ingest.manifest.json",
    }
}

/// Load the register produced by `synth`/`ingest`.
pub fn load_register(ctx: &Ctx) -> Result<(Frame, RegisterManifest)> {
    let manifest: RegisterManifest = ctx.read_json(register_manifest_name(&ctx.config))?;
    let schema: Schema = ctx.read_json(&manifest.schema)?;
    let frame = read_csv(&ctx.path(&manifest.csv), &schema)?;
    Ok((frame, manifest))
}

/// Load the generator ground truth when the register is synthetic.
pub fn load_truth(ctx: &Ctx, manifest: &RegisterManifest) -> Result<Option<GroundTruth>> {
    manifest.truth.as_deref().map(|name| ctx.read_json(name)).transpose()
}

pub fn load_splits(ctx: &Ctx) -> Result<SplitArtifact> {
    ctx.read_json(SPLIT_MANIFEST)
}

pub fn load_pipeline(ctx: &Ctx) -> Result<TrainArtifact> {
    ctx.read_json(TRAIN_PIPELINE)
}

/// The run's ranking objective: AvRecall over the configured k range.
pub fn objective(config: &RunConfig) -> impl Fn(&[f64], &[u8]) -> Result<f64> + Sync {
    let (lo, hi) = (config.metrics.av_lo, config.metrics.av_hi);
    move |scores: &[f64], labels: &[u8]| av_recall(scores, labels, lo, hi)
}

//! Run configuration: one TOML file holds every semantic knob of a run.
//!
//! The configuration is validated before any work starts, and its SHA-256
//! hash (over the resolved semantic fields — everything except the output
//! directory and the thread cap) stamps every artifact the run writes.
//! Command-line flags never carry semantics of their own: they rewrite
//! config fields before the hash is computed, so a flag-tweaked run is
//! indistinguishable from one whose TOML said the same thing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lfurisk_core::encode::EncoderKind;
use lfurisk_core::equity::{DEFAULT_COPIES, DEFAULT_TOLERANCE};
use lfurisk_core::frame::{GeneratorConfig, AGE_COL, DISTRICT_COL};
use lfurisk_core::harness::{ModelFamily, SearchSpace, SelectionConfig};
use lfurisk_core::multiplicity::DEFAULT_EPSILON;
use lfurisk_core::split::SplitPlan;
use lfurisk_core::{Error, Result};

/// Split names a run can reference; `split` materializes exactly these.
pub const SPLIT_NAMES: [&str; 5] = ["modeling", "train", "val", "test", "pes"];

/// Where the register comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Generate a synthetic register with known ground truth (`synth`).
    Synth,
    /// Read and merge CSV registers from disk (`ingest`).
    Csv,
}

/// CSV input: one spine register plus any number of feature registers,
/// joined on `merge_key`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSource {
    /// Register CSV paths; the first is the spine the others join onto.
    pub registers: Vec<String>,
    /// Schema manifest paths, parallel to `registers`.
    pub schemas: Vec<String>,
    /// Join key column present in every register.
    pub merge_key: String,
}

impl Default for CsvSource {
    fn default() -> Self {
        CsvSource { registers: Vec::new(), schemas: Vec::new(), merge_key: "EpisodeID".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub source: DataSource,
    pub synth: GeneratorConfig,
    pub csv: CsvSource,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            source: DataSource::Synth,
            synth: GeneratorConfig::default(),
            csv: CsvSource::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    /// Trailing distinct months reserved for passive evaluation.
    pub pes_months: i64,
    /// Train/val/test fractions of the modeling period.
    pub fractions: (f64, f64, f64),
}

impl Default for SplitSection {
    fn default() -> Self {
        let plan = SplitPlan::default();
        SplitSection { pes_months: plan.pes_months, fractions: plan.fractions }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    /// Split the selection protocol runs on (must have a training role).
    pub split: String,
    /// Encoder candidates; empty means every supported encoder.
    pub encoders: Vec<EncoderKind>,
    /// Model families in the race; empty means all four.
    pub families: Vec<ModelFamily>,
    /// Random-search trials for the boosted reference model.
    pub budget: usize,
    /// Bootstrap replicates behind the family CD analysis.
    pub bootstrap_b: usize,
    /// Additive smoothing weight for target/LOO encodings.
    pub smoothing_m: f64,
    /// Prior weight for ordered-target encoding.
    pub prior_weight_a: f64,
    /// Signature dimension for minhash encoding.
    pub minhash_dim: usize,
    /// Prototype budget for similarity encoding.
    pub max_prototypes: usize,
    /// Boosted hyperparameter search space.
    pub space: SearchSpace,
}

impl Default for SelectionSection {
    fn default() -> Self {
        let core = SelectionConfig::default();
        SelectionSection {
            split: "modeling".into(),
            encoders: Vec::new(),
            families: Vec::new(),
            budget: core.budget,
            bootstrap_b: core.bootstrap_b,
            smoothing_m: core.encoder_params.smoothing_m,
            prior_weight_a: core.encoder_params.prior_weight_a,
            minhash_dim: core.encoder_params.minhash_dim,
            max_prototypes: core.encoder_params.max_prototypes,
            space: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Split the final pipeline is fitted on (must have a training role).
    pub split: String,
    /// Encoder override; empty takes the selection outcome's choice.
    pub encoder: String,
    /// Family override; empty takes the selection outcome's choice.
    pub family: String,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection { split: "modeling".into(), encoder: String::new(), family: String::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// Targeting percentage for Recall@k and thresholds.
    pub k: f64,
    /// AvRecall averaging range (inclusive).
    pub av_lo: u32,
    pub av_hi: u32,
    /// Bootstrap replicates for evaluation confidence intervals.
    pub bootstrap_b: usize,
    /// Confidence level of those intervals.
    pub level: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection { k: 20.0, av_lo: 10, av_hi: 40, bootstrap_b: 1000, level: 0.95 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Split scored by `evaluate`.
    pub split: String,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection { split: "pes".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortsSection {
    /// Split the cohort tables are computed on.
    pub split: String,
    /// Cohort columns; empty defaults to district and case type when the
    /// register is synthetic.
    pub columns: Vec<String>,
    /// Within-cohort bootstrap replicates for recall intervals.
    pub ci_b: usize,
}

impl Default for CohortsSection {
    fn default() -> Self {
        CohortsSection { split: "pes".into(), columns: Vec::new(), ci_b: 200 }
    }
}

/// Cohort-repair strategy applied by `fairness`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mitigation {
    /// Per-cohort additive score shifts fitted on the holdout split.
    Shifts,
    /// Duplicate one cohort's training rows and refit.
    Augment,
    /// Log-inverse-frequency row weights and refit (boosted family only).
    Reweigh,
}

impl Mitigation {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "shifts" => Ok(Mitigation::Shifts),
            "augment" => Ok(Mitigation::Augment),
            "reweigh" => Ok(Mitigation::Reweigh),
            other => Err(Error::config(format!(
                "fairness.mitigation: unknown strategy `{other}` (expected shifts|augment|reweigh)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mitigation::Shifts => "shifts",
            Mitigation::Augment => "augment",
            Mitigation::Reweigh => "reweigh",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairnessSection {
    /// Split the before/after comparison is reported on.
    pub split: String,
    /// Split shift fitting (and worst-cohort choice) uses; never the
    /// reporting split.
    pub holdout: String,
    /// Cohort column under repair; empty takes the first cohorts column.
    pub cohort_column: String,
    pub mitigation: Mitigation,
    /// Acceptable residual recall gap for shift fitting.
    pub tolerance: f64,
    /// Extra copies per row for the augmentation strategy.
    pub copies: usize,
    /// Category to augment; empty picks the holdout's worst cohort.
    pub augment_category: String,
}

impl Default for FairnessSection {
    fn default() -> Self {
        FairnessSection {
            split: "pes".into(),
            holdout: "val".into(),
            cohort_column: String::new(),
            mitigation: Mitigation::Shifts,
            tolerance: DEFAULT_TOLERANCE,
            copies: DEFAULT_COPIES,
            augment_category: String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiplicitySection {
    /// Split the epsilon-set is audited on.
    pub split: String,
    /// Performance band width below the best candidate.
    pub epsilon: f64,
    /// How many top search trials become candidate models.
    pub candidates: usize,
}

impl Default for MultiplicitySection {
    fn default() -> Self {
        MultiplicitySection { split: "pes".into(), epsilon: DEFAULT_EPSILON, candidates: 16 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    /// Split the explanations are computed on.
    pub split: String,
    /// Permutation repeats per feature.
    pub repeats: usize,
    /// ALE bin count.
    pub ale_bins: usize,
    /// Numeric columns to draw ALE curves for; empty defaults to the age
    /// column when the register is synthetic.
    pub ale_columns: Vec<String>,
    /// Row indices (within the split) to explain locally.
    pub surrogate_rows: Vec<usize>,
    /// Perturbation sample count per local surrogate.
    pub surrogate_samples: usize,
}

impl Default for ExplainSection {
    fn default() -> Self {
        ExplainSection {
            split: "pes".into(),
            repeats: 5,
            ale_bins: 20,
            ale_columns: Vec::new(),
            surrogate_rows: vec![0],
            surrogate_samples: 1500,
        }
    }
}

/// The whole run configuration. `out` and `threads` are runtime context:
/// they are excluded from the config hash and from the resolved-config
/// artifact, so the same configuration run into two directories produces
/// byte-identical files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stochastic step derives its stream from it.
    pub seed: u64,
    /// Output directory (flag `--out` overrides; default `lfurisk-out`).
    pub out: Option<String>,
    /// Worker-thread cap (flag `--threads` overrides; absent = all cores).
    pub threads: Option<usize>,
    pub data: DataSection,
    pub split: SplitSection,
    pub selection: SelectionSection,
    pub train: TrainSection,
    pub metrics: MetricsSection,
    pub evaluate: EvaluateSection,
    pub cohorts: CohortsSection,
    pub fairness: FairnessSection,
    pub multiplicity: MultiplicitySection,
    pub explain: ExplainSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: None,
            threads: None,
            data: DataSection::default(),
            split: SplitSection::default(),
            selection: SelectionSection::default(),
            train: TrainSection::default(),
            metrics: MetricsSection::default(),
            evaluate: EvaluateSection::default(),
            cohorts: CohortsSection::default(),
            fairness: FairnessSection::default(),
            multiplicity: MultiplicitySection::default(),
            explain: ExplainSection::default(),
        }
    }
}

impl RunConfig {
    /// Parse a TOML configuration file. Unknown keys are rejected with a
    /// message naming them.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| Error::config(format!("config `{}`: {e}", path.display())))
    }

    /// Fill source-dependent defaults so the hashed configuration states
    /// them explicitly: synthetic registers default their cohort columns
    /// to district + case type and their ALE columns to age.
    pub fn resolve(&mut self) {
        if self.data.source == DataSource::Synth {
            if self.cohorts.columns.is_empty() {
                self.cohorts.columns = vec![DISTRICT_COL.to_string(), "TypeOfCase".to_string()];
            }
            if self.explain.ale_columns.is_empty() {
                self.ale_default();
            }
        }
        if self.fairness.cohort_column.is_empty() {
            if let Some(first) = self.cohorts.columns.first() {
                self.fairness.cohort_column = first.clone();
            }
        }
    }

    fn ale_default(&mut self) {
        self.explain.ale_columns = vec![AGE_COL.to_string()];
    }

    /// Range-check every field, naming the offender on failure.
    pub fn validate(&self) -> Result<()> {
        if self.data.source == DataSource::Csv {
            if self.data.csv.registers.is_empty() {
                return Err(Error::config("data.csv.registers must list at least one file"));
            }
            if self.data.csv.registers.len() != self.data.csv.schemas.len() {
                return Err(Error::config(format!(
                    "data.csv.schemas lists {} manifests for {} registers",
                    self.data.csv.schemas.len(),
                    self.data.csv.registers.len()
                )));
            }
            if self.data.csv.merge_key.is_empty() {
                return Err(Error::config("data.csv.merge_key must name a column"));
            }
        } else {
            self.data.synth.validate()?;
        }
        self.split_plan().validate()?;

        for (field, name) in [
            ("selection.split", &self.selection.split),
            ("train.split", &self.train.split),
            ("evaluate.split", &self.evaluate.split),
            ("cohorts.split", &self.cohorts.split),
            ("fairness.split", &self.fairness.split),
            ("fairness.holdout", &self.fairness.holdout),
            ("multiplicity.split", &self.multiplicity.split),
            ("explain.split", &self.explain.split),
        ] {
            if !SPLIT_NAMES.contains(&name.as_str()) {
                return Err(Error::config(format!(
                    "{field}: unknown split `{name}` (expected one of {})",
                    SPLIT_NAMES.join("|")
                )));
            }
        }
        if self.fairness.split == self.fairness.holdout {
            return Err(Error::config(
                "fairness.holdout must differ from fairness.split (shifts may not be fitted on \
                 the split they are reported on)",
            ));
        }

        if self.selection.budget == 0 {
            return Err(Error::config("selection.budget must be at least 1"));
        }
        if self.selection.bootstrap_b < 2 {
            return Err(Error::config("selection.bootstrap_b must be at least 2"));
        }
        if !(self.selection.smoothing_m >= 0.0 && self.selection.smoothing_m.is_finite()) {
            return Err(Error::config("selection.smoothing_m must be finite and >= 0"));
        }
        if !(self.selection.prior_weight_a > 0.0 && self.selection.prior_weight_a.is_finite()) {
            return Err(Error::config("selection.prior_weight_a must be finite and > 0"));
        }
        if self.selection.minhash_dim == 0 {
            return Err(Error::config("selection.minhash_dim must be at least 1"));
        }
        if self.selection.max_prototypes == 0 {
            return Err(Error::config("selection.max_prototypes must be at least 1"));
        }
        self.selection.space.validate()?;

        if !self.train.encoder.is_empty() {
            EncoderKind::parse(&self.train.encoder)?;
        }
        if !self.train.family.is_empty() {
            ModelFamily::parse(&self.train.family)?;
        }

        if !(self.metrics.k > 0.0 && self.metrics.k <= 100.0) {
            return Err(Error::config(format!(
                "metrics.k = {} outside (0, 100]",
                self.metrics.k
            )));
        }
        if self.metrics.av_lo == 0 || self.metrics.av_lo > self.metrics.av_hi {
            return Err(Error::config("metrics.av_lo must satisfy 1 <= av_lo <= av_hi"));
        }
        if self.metrics.av_hi > 100 {
            return Err(Error::config("metrics.av_hi must be at most 100"));
        }
        if self.metrics.bootstrap_b < 2 {
            return Err(Error::config("metrics.bootstrap_b must be at least 2"));
        }
        if !(self.metrics.level > 0.0 && self.metrics.level < 1.0) {
            return Err(Error::config("metrics.level must lie in (0, 1)"));
        }

        if !(self.fairness.tolerance > 0.0 && self.fairness.tolerance < 1.0) {
            return Err(Error::config("fairness.tolerance must lie in (0, 1)"));
        }
        if self.fairness.copies == 0 {
            return Err(Error::config("fairness.copies must be at least 1"));
        }

        if !(self.multiplicity.epsilon > 0.0 && self.multiplicity.epsilon < 1.0) {
            return Err(Error::config("multiplicity.epsilon must lie in (0, 1)"));
        }
        if self.multiplicity.candidates < 2 {
            return Err(Error::config("multiplicity.candidates must be at least 2"));
        }

        if self.explain.repeats == 0 {
            return Err(Error::config("explain.repeats must be at least 1"));
        }
        if self.explain.ale_bins == 0 {
            return Err(Error::config("explain.ale_bins must be at least 1"));
        }
        if self.explain.surrogate_samples < 8 {
            return Err(Error::config("explain.surrogate_samples must be at least 8"));
        }
        Ok(())
    }

    /// The semantic configuration: everything except runtime context.
    /// This is what gets hashed and written as `run.config.json`.
    pub fn semantic(&self) -> RunConfig {
        let mut view = self.clone();
        view.out = None;
        view.threads = None;
        view
    }

    /// SHA-256 over the canonical JSON of the semantic configuration.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(&self.semantic()).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn split_plan(&self) -> SplitPlan {
        SplitPlan { pes_months: self.split.pes_months, fractions: self.split.fractions }
    }

    /// Assemble the core selection config from the relevant sections.
    pub fn selection_config(&self) -> SelectionConfig {
        let mut core = SelectionConfig::default();
        if !self.selection.encoders.is_empty() {
            core.encoders = self.selection.encoders.clone();
        }
        if !self.selection.families.is_empty() {
            core.families = self.selection.families.clone();
        }
        core.budget = self.selection.budget;
        core.bootstrap_b = self.selection.bootstrap_b;
        core.fractions = self.split.fractions;
        core.space = self.selection.space.clone();
        core.encoder_params.smoothing_m = self.selection.smoothing_m;
        core.encoder_params.prior_weight_a = self.selection.prior_weight_a;
        core.encoder_params.minhash_dim = self.selection.minhash_dim;
        core.encoder_params.max_prototypes = self.selection.max_prototypes;
        core.encoder_params.seed = self.seed;
        core.seed = self.seed;
        core
    }
}

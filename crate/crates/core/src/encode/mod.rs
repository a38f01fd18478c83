//! Categorical-to-numeric encoders.
//!
//! Almost every field in a treatment register is categorical, so encoder
//! choice is a first-class modeling decision here, not preprocessing
//! trivia. Nine encoder families are provided, spanning three ideas:
//!
//! * frequency: [`EncoderKind::Count`];
//! * label statistics: [`EncoderKind::Target`], [`EncoderKind::Loo`],
//!   [`EncoderKind::OrderedTarget`], and the ratio family
//!   ([`EncoderKind::ProbRatio`], [`EncoderKind::OddsRatio`],
//!   [`EncoderKind::LogOdds`]);
//! * string shape: [`EncoderKind::Similarity`], [`EncoderKind::Minhash`] —
//!   these read the category *text*, so facility names with shared
//!   substructure encode nearby even when individual names are rare.
//!
//! [`EncoderKind::RandomCode`] is a label-free control that assigns each
//! category a stable pseudo-random value; it deliberately destroys any
//! category signal and exists to sanity-check encoder comparisons.
//! `EntityEmbedding` and `Gap` are reserved names that error as
//! unsupported.
//!
//! Leakage rules: encoders are fitted on training rows only.
//! [`Encoder::fit_transform`] produces the training-time matrix, which for
//! leave-one-out and ordered-target kinds differs from plain
//! [`Encoder::transform`] — each training row's own label is excluded from
//! (or ordered after) the statistic it sees. Held-out data always goes
//! through `transform`, which uses full training statistics.

mod ngram;

pub use ngram::{minhash_signature, trigram_jaccard, trigram_set};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{CategoricalColumn, ColumnData, Frame, MISSING_TOKEN};
use crate::util::{mix64, str_salt, sub_rng};

/// Encoder families. String forms accept hyphen or underscore separators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Count,
    Target,
    Loo,
    OrderedTarget,
    ProbRatio,
    OddsRatio,
    LogOdds,
    Similarity,
    Minhash,
    /// Label-free control: stable pseudo-random value per category.
    RandomCode,
    /// Reserved; fitting errors with "unsupported".
    EntityEmbedding,
    /// Reserved; fitting errors with "unsupported".
    Gap,
}

impl EncoderKind {
    pub const ALL_SUPPORTED: [EncoderKind; 10] = [
        EncoderKind::Count,
        EncoderKind::Target,
        EncoderKind::Loo,
        EncoderKind::OrderedTarget,
        EncoderKind::ProbRatio,
        EncoderKind::OddsRatio,
        EncoderKind::LogOdds,
        EncoderKind::Similarity,
        EncoderKind::Minhash,
        EncoderKind::RandomCode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::Count => "count",
            EncoderKind::Target => "target",
            EncoderKind::Loo => "loo",
            EncoderKind::OrderedTarget => "ordered_target",
            EncoderKind::ProbRatio => "prob_ratio",
            EncoderKind::OddsRatio => "odds_ratio",
            EncoderKind::LogOdds => "log_odds",
            EncoderKind::Similarity => "similarity",
            EncoderKind::Minhash => "minhash",
            EncoderKind::RandomCode => "random_code",
            EncoderKind::EntityEmbedding => "entity_embedding",
            EncoderKind::Gap => "gap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase().replace('-', "_");
        let kind = match norm.as_str() {
            "count" => EncoderKind::Count,
            "target" => EncoderKind::Target,
            "loo" | "leave_one_out" => EncoderKind::Loo,
            "ordered_target" | "catboost" => EncoderKind::OrderedTarget,
            "prob_ratio" => EncoderKind::ProbRatio,
            "odds_ratio" => EncoderKind::OddsRatio,
            "log_odds" => EncoderKind::LogOdds,
            "similarity" => EncoderKind::Similarity,
            "minhash" => EncoderKind::Minhash,
            "random_code" => EncoderKind::RandomCode,
            "entity_embedding" => EncoderKind::EntityEmbedding,
            "gap" => EncoderKind::Gap,
            other => return Err(Error::config(format!("unknown encoder kind `{other}`"))),
        };
        Ok(kind)
    }

    /// Whether fitting consumes the label column.
    pub fn uses_labels(self) -> bool {
        matches!(
            self,
            EncoderKind::Target
                | EncoderKind::Loo
                | EncoderKind::OrderedTarget
                | EncoderKind::ProbRatio
                | EncoderKind::OddsRatio
                | EncoderKind::LogOdds
        )
    }
}

/// Tunable encoder parameters (defaults match the values used throughout
/// the pipeline unless a search overrides them).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderParams {
    /// Additive smoothing weight for target/LOO statistics.
    pub smoothing_m: f64,
    /// Prior weight `a` for ordered-target encoding.
    pub prior_weight_a: f64,
    /// Signature dimension for minhash encoding.
    pub minhash_dim: usize,
    /// Maximum prototype count for similarity encoding.
    pub max_prototypes: usize,
    /// Seed for ordered-target permutation, minhash hashers, random codes.
    pub seed: u64,
}

impl Default for EncoderParams {
    fn default() -> Self {
        EncoderParams {
            smoothing_m: 20.0,
            prior_weight_a: 1.0,
            minhash_dim: 30,
            max_prototypes: 30,
            seed: 0,
        }
    }
}

/// Dense encoded feature matrix, column-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Matrix {
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
    rows: usize,
}

impl Matrix {
    pub fn from_columns(names: Vec<String>, cols: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != cols.len() {
            return Err(Error::internal("matrix: name/column count mismatch"));
        }
        let rows = cols.first().map_or(0, Vec::len);
        for (name, col) in names.iter().zip(&cols) {
            if col.len() != rows {
                return Err(Error::internal(format!("matrix: ragged column `{name}`")));
            }
            if let Some(bad) = col.iter().find(|v| !v.is_finite()) {
                return Err(Error::data(format!("matrix: non-finite value {bad} in `{name}`")));
            }
        }
        Ok(Matrix { names, cols, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    pub fn value(&self, row: usize, j: usize) -> f64 {
        self.cols[j][row]
    }

    /// One row as a dense vector (allocates; prefer column access in hot
    /// paths).
    pub fn row(&self, row: usize) -> Vec<f64> {
        self.cols.iter().map(|c| c[row]).collect()
    }
}

/// Per-source-column encoding state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "encoding")]
enum ColumnEncoding {
    /// Numeric column copied through unchanged.
    Passthrough { name: String },
    /// category -> value lookup with a fallback for unseen categories.
    Map { name: String, stats: BTreeMap<String, f64>, fallback: f64 },
    /// Jaccard similarity against fitted prototype strings.
    Similarity { name: String, prototypes: Vec<String> },
    /// Seeded minhash signature of the category text.
    Minhash { name: String, seeds: Vec<u64> },
    /// Stable pseudo-random value per category text.
    RandomCode { name: String, salt: u64 },
}

impl ColumnEncoding {
    fn name(&self) -> &str {
        match self {
            ColumnEncoding::Passthrough { name }
            | ColumnEncoding::Map { name, .. }
            | ColumnEncoding::Similarity { name, .. }
            | ColumnEncoding::Minhash { name, .. }
            | ColumnEncoding::RandomCode { name, .. } => name,
        }
    }

    /// Output column names contributed by this encoding.
    fn output_names(&self) -> Vec<String> {
        match self {
            ColumnEncoding::Passthrough { name } | ColumnEncoding::Map { name, .. } => {
                vec![name.clone()]
            }
            ColumnEncoding::Similarity { name, prototypes } => {
                prototypes.iter().map(|p| format!("{name}~{p}")).collect()
            }
            ColumnEncoding::Minhash { name, seeds } => {
                (0..seeds.len()).map(|j| format!("{name}~mh{j:02}")).collect()
            }
            ColumnEncoding::RandomCode { name, .. } => vec![name.clone()],
        }
    }

    /// Encode one category token into this encoding's output space.
    fn encode_token(&self, token: &str) -> Vec<f64> {
        match self {
            ColumnEncoding::Passthrough { .. } => unreachable!("numeric passthrough"),
            ColumnEncoding::Map { stats, fallback, .. } => {
                vec![stats.get(token).copied().unwrap_or(*fallback)]
            }
            ColumnEncoding::Similarity { prototypes, .. } => {
                prototypes.iter().map(|p| trigram_jaccard(token, p)).collect()
            }
            ColumnEncoding::Minhash { seeds, .. } => minhash_signature(token, seeds),
            ColumnEncoding::RandomCode { salt, .. } => {
                vec![mix64(*salt ^ str_salt(token)) as f64 * 2.0_f64.powi(-64)]
            }
        }
    }

    /// Encode a whole categorical column. Missing cells encode like the
    /// explicit missing token for text-based kinds, and hit the fallback
    /// for map kinds (identical to an out-of-vocabulary category).
    fn encode_categorical(&self, col: &CategoricalColumn) -> Vec<Vec<f64>> {
        let lut: Vec<Vec<f64>> =
            col.categories().iter().map(|tok| self.encode_token(tok)).collect();
        let missing = match self {
            ColumnEncoding::Map { fallback, .. } => vec![*fallback],
            _ => self.encode_token(MISSING_TOKEN),
        };
        let width = missing.len();
        let mut out = vec![Vec::with_capacity(col.len()); width];
        for &code in col.codes() {
            let values = match code {
                Some(c) => &lut[c as usize],
                None => &missing,
            };
            for (j, &v) in values.iter().enumerate() {
                out[j].push(v);
            }
        }
        out
    }
}

/// Per-category label statistics gathered in one pass.
#[derive(Debug, Clone)]
struct CategoryStats {
    token: String,
    count: usize,
    positives: usize,
}

fn category_stats(col: &CategoricalColumn, labels: Option<&[u8]>) -> Vec<CategoryStats> {
    let mut stats: Vec<CategoryStats> = col
        .categories()
        .iter()
        .map(|t| CategoryStats { token: t.clone(), count: 0, positives: 0 })
        .collect();
    for (row, &code) in col.codes().iter().enumerate() {
        if let Some(c) = code {
            let s = &mut stats[c as usize];
            s.count += 1;
            if let Some(ls) = labels {
                s.positives += usize::from(ls[row]);
            }
        }
    }
    stats
}

/// Apply the ratio-family formula to raw category/global counts.
/// Laplace smoothing (one positive and one negative added to the category
/// and to the global pool) keeps every value finite.
pub fn ratio_encode(
    kind: EncoderKind,
    cat_pos: usize,
    cat_neg: usize,
    global_pos: usize,
    global_neg: usize,
) -> Result<f64> {
    let (n1c, n0c) = (cat_pos as f64 + 1.0, cat_neg as f64 + 1.0);
    let (n1, n0) = (global_pos as f64 + 1.0, global_neg as f64 + 1.0);
    let p_c = n1c / (n1c + n0c);
    let p = n1 / (n1 + n0);
    let value = match kind {
        EncoderKind::ProbRatio => p_c / p,
        EncoderKind::OddsRatio => (n1c / n0c) / (n1 / n0),
        EncoderKind::LogOdds => ((n1c / n0c) / (n1 / n0)).ln(),
        other => {
            return Err(Error::config(format!(
                "ratio_encode: `{}` is not a ratio kind",
                other.as_str()
            )))
        }
    };
    Ok(value)
}

/// Jaccard similarity profile of `value` against each prototype.
pub fn similarity_profile(value: &str, prototypes: &[String]) -> Vec<f64> {
    prototypes.iter().map(|p| trigram_jaccard(value, p)).collect()
}

/// A fitted encoder: per-column statistics plus the parameters that
/// produced them. Serializable for exact re-application.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Encoder {
    kind: EncoderKind,
    params: EncoderParams,
    /// Global prior (training prevalence) for label-using kinds.
    prior: f64,
    encodings: Vec<ColumnEncoding>,
}

impl Encoder {
    /// Fit on training rows. See [`Encoder::fit_transform`] for the
    /// training-time matrix of leakage-sensitive kinds.
    pub fn fit(kind: EncoderKind, frame: &Frame, params: &EncoderParams) -> Result<Self> {
        if matches!(kind, EncoderKind::EntityEmbedding | EncoderKind::Gap) {
            return Err(Error::config(format!("encoder kind `{}` is unsupported", kind.as_str())));
        }
        let n_categorical = frame
            .schema()
            .feature_columns()
            .filter(|(i, _)| frame.column(*i).as_categorical().is_some())
            .count();
        if n_categorical == 0 {
            return Err(Error::data("encoder: frame has no categorical columns"));
        }
        let labels = if kind.uses_labels() { Some(frame.labels()?) } else { None };
        let prior = labels
            .map(|ls| {
                if ls.is_empty() {
                    0.0
                } else {
                    ls.iter().map(|&y| f64::from(y)).sum::<f64>() / ls.len() as f64
                }
            })
            .unwrap_or(0.0);
        let global_pos = labels.map(|ls| ls.iter().map(|&y| usize::from(y)).sum::<usize>());

        let mut encodings = Vec::new();
        for (idx, spec) in frame.schema().feature_columns() {
            let col = match frame.column(idx) {
                ColumnData::Numeric(_) => {
                    encodings.push(ColumnEncoding::Passthrough { name: spec.name.clone() });
                    continue;
                }
                ColumnData::Categorical(c) => c,
                _ => unreachable!("feature columns are categorical or numeric"),
            };
            let stats = category_stats(col, labels);
            let encoding = match kind {
                EncoderKind::Count => ColumnEncoding::Map {
                    name: spec.name.clone(),
                    stats: stats
                        .iter()
                        .map(|s| {
                            (s.token.clone(), s.count as f64 / frame.n_rows().max(1) as f64)
                        })
                        .collect(),
                    fallback: 0.0,
                },
                EncoderKind::Target | EncoderKind::Loo => {
                    let m = params.smoothing_m;
                    ColumnEncoding::Map {
                        name: spec.name.clone(),
                        stats: stats
                            .iter()
                            .map(|s| {
                                let denom = s.count as f64 + m;
                                let value = if denom > 0.0 {
                                    (s.positives as f64 + m * prior) / denom
                                } else {
                                    prior
                                };
                                (s.token.clone(), value)
                            })
                            .collect(),
                        fallback: prior,
                    }
                }
                EncoderKind::OrderedTarget => {
                    let a = params.prior_weight_a;
                    ColumnEncoding::Map {
                        name: spec.name.clone(),
                        stats: stats
                            .iter()
                            .map(|s| {
                                let denom = s.count as f64 + a;
                                let value = if denom > 0.0 {
                                    (s.positives as f64 + a * prior) / denom
                                } else {
                                    prior
                                };
                                (s.token.clone(), value)
                            })
                            .collect(),
                        fallback: prior,
                    }
                }
                EncoderKind::ProbRatio | EncoderKind::OddsRatio | EncoderKind::LogOdds => {
                    let gp = global_pos.expect("ratio kinds use labels");
                    let gn = frame.n_rows().saturating_sub(gp);
                    ColumnEncoding::Map {
                        name: spec.name.clone(),
                        stats: stats
                            .iter()
                            .map(|s| {
                                let value =
                                    ratio_encode(kind, s.positives, s.count - s.positives, gp, gn)
                                        .expect("ratio kind");
                                (s.token.clone(), value)
                            })
                            .collect(),
                        fallback: match kind {
                            EncoderKind::LogOdds => 0.0,
                            _ => 1.0,
                        },
                    }
                }
                EncoderKind::Similarity => {
                    let mut order: Vec<&CategoryStats> = stats.iter().collect();
                    order.sort_by(|a, b| b.count.cmp(&a.count).then(a.token.cmp(&b.token)));
                    let prototypes: Vec<String> = order
                        .iter()
                        .take(params.max_prototypes.max(1))
                        .map(|s| s.token.clone())
                        .collect();
                    if prototypes.is_empty() {
                        return Err(Error::data(format!(
                            "similarity: column `{}` has no observed categories",
                            spec.name
                        )));
                    }
                    ColumnEncoding::Similarity { name: spec.name.clone(), prototypes }
                }
                EncoderKind::Minhash => {
                    let col_salt = str_salt(&spec.name);
                    let seeds = (0..params.minhash_dim.max(1))
                        .map(|j| mix64(params.seed ^ col_salt ^ (j as u64).wrapping_mul(0x9e37)))
                        .collect();
                    ColumnEncoding::Minhash { name: spec.name.clone(), seeds }
                }
                EncoderKind::RandomCode => ColumnEncoding::RandomCode {
                    name: spec.name.clone(),
                    salt: mix64(params.seed ^ str_salt(&spec.name)),
                },
                EncoderKind::EntityEmbedding | EncoderKind::Gap => unreachable!("rejected above"),
            };
            encodings.push(encoding);
        }
        Ok(Encoder { kind, params: *params, prior, encodings })
    }

    /// Fit on training rows and produce the training-time matrix.
    ///
    /// For [`EncoderKind::Loo`], each training row sees its category's
    /// statistic with its own label removed. For
    /// [`EncoderKind::OrderedTarget`], a seeded permutation orders rows and
    /// each row sees only the labels of preceding same-category rows. For
    /// all other kinds this equals `fit` + `transform`.
    pub fn fit_transform(
        kind: EncoderKind,
        frame: &Frame,
        params: &EncoderParams,
    ) -> Result<(Self, Matrix)> {
        let encoder = Self::fit(kind, frame, params)?;
        let matrix = match kind {
            EncoderKind::Loo => encoder.training_matrix_loo(frame)?,
            EncoderKind::OrderedTarget => encoder.training_matrix_ordered(frame)?,
            _ => encoder.transform(frame)?,
        };
        Ok((encoder, matrix))
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn params(&self) -> &EncoderParams {
        &self.params
    }

    /// Training prevalence used as the prior for label-using kinds.
    pub fn prior(&self) -> f64 {
        self.prior
    }

    /// Output dimensionality (fixed after fit).
    pub fn output_dim(&self) -> usize {
        self.encodings.iter().map(|e| e.output_names().len()).sum()
    }

    /// Encode a frame with full training statistics. Numeric columns pass
    /// through (they must be imputed already); unseen categories map to
    /// the kind's fallback.
    pub fn transform(&self, frame: &Frame) -> Result<Matrix> {
        self.check_schema(frame)?;
        let outputs: Vec<Result<(Vec<String>, Vec<Vec<f64>>)>> = self
            .encodings
            .par_iter()
            .map(|encoding| {
                let idx = frame
                    .schema()
                    .column_index(encoding.name())
                    .expect("checked by check_schema");
                let cols = match (encoding, frame.column(idx)) {
                    (ColumnEncoding::Passthrough { name }, ColumnData::Numeric(values)) => {
                        let dense: Vec<f64> = values
                            .iter()
                            .enumerate()
                            .map(|(row, v)| {
                                v.ok_or_else(|| {
                                    Error::data(format!(
                                        "column `{name}` row {row} is missing; impute before encoding"
                                    ))
                                })
                            })
                            .collect::<Result<_>>()?;
                        vec![dense]
                    }
                    (encoding, ColumnData::Categorical(col)) => encoding.encode_categorical(col),
                    (encoding, other) => {
                        return Err(Error::data(format!(
                            "column `{}` has kind {}, expected {}",
                            encoding.name(),
                            other.kind().as_str(),
                            match encoding {
                                ColumnEncoding::Passthrough { .. } => "numeric",
                                _ => "categorical",
                            }
                        )))
                    }
                };
                Ok((encoding.output_names(), cols))
            })
            .collect();

        let mut names = Vec::new();
        let mut cols = Vec::new();
        for out in outputs {
            let (n, c) = out?;
            names.extend(n);
            cols.extend(c);
        }
        Matrix::from_columns(names, cols)
    }

    /// Leave-one-out training matrix: row i of category c sees
    /// `(sum_c − y_i + m·prior) / (count_c − 1 + m)`.
    fn training_matrix_loo(&self, frame: &Frame) -> Result<Matrix> {
        let labels = frame.labels()?;
        let m = self.params.smoothing_m;
        self.training_matrix_with(frame, |col| {
            let stats = category_stats(col, Some(labels));
            col.codes()
                .iter()
                .enumerate()
                .map(|(row, code)| match code {
                    Some(c) => {
                        let s = &stats[*c as usize];
                        let denom = s.count as f64 - 1.0 + m;
                        if denom > 0.0 {
                            (s.positives as f64 - f64::from(labels[row]) + m * self.prior) / denom
                        } else {
                            self.prior
                        }
                    }
                    None => self.prior,
                })
                .collect()
        })
    }

    /// Ordered-target training matrix: rows are visited in one seeded
    /// permutation; each sees `(sum_prev + a·prior) / (count_prev + a)`
    /// over preceding same-category rows.
    fn training_matrix_ordered(&self, frame: &Frame) -> Result<Matrix> {
        let labels = frame.labels()?;
        let a = self.params.prior_weight_a;
        let mut perm: Vec<usize> = (0..frame.n_rows()).collect();
        perm.shuffle(&mut sub_rng(self.params.seed, str_salt("ordered-target-permutation")));
        self.training_matrix_with(frame, |col| {
            let mut running: Vec<(f64, f64)> = vec![(0.0, 0.0); col.categories().len()];
            let mut out = vec![0.0; col.len()];
            for &row in &perm {
                match col.codes()[row] {
                    Some(c) => {
                        let (count, sum) = running[c as usize];
                        let denom = count + a;
                        out[row] =
                            if denom > 0.0 { (sum + a * self.prior) / denom } else { self.prior };
                        running[c as usize] = (count + 1.0, sum + f64::from(labels[row]));
                    }
                    None => out[row] = self.prior,
                }
            }
            out
        })
    }

    /// Shared frame walk for training-time matrices: categorical columns
    /// get `encode_col`, numeric columns pass through.
    fn training_matrix_with(
        &self,
        frame: &Frame,
        encode_col: impl Fn(&CategoricalColumn) -> Vec<f64> + Sync,
    ) -> Result<Matrix> {
        self.check_schema(frame)?;
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for encoding in &self.encodings {
            let idx = frame.schema().column_index(encoding.name()).expect("checked");
            match frame.column(idx) {
                ColumnData::Numeric(values) => {
                    let dense: Vec<f64> = values
                        .iter()
                        .enumerate()
                        .map(|(row, v)| {
                            v.ok_or_else(|| {
                                Error::data(format!(
                                    "column `{}` row {row} is missing; impute before encoding",
                                    encoding.name()
                                ))
                            })
                        })
                        .collect::<Result<_>>()?;
                    names.push(encoding.name().to_string());
                    cols.push(dense);
                }
                ColumnData::Categorical(col) => {
                    names.push(encoding.name().to_string());
                    cols.push(encode_col(col));
                }
                _ => unreachable!("feature columns only"),
            }
        }
        Matrix::from_columns(names, cols)
    }

    /// The frame must expose exactly the feature columns this encoder was
    /// fitted on, in the same order.
    fn check_schema(&self, frame: &Frame) -> Result<()> {
        let frame_features: Vec<&str> =
            frame.schema().feature_columns().map(|(_, s)| s.name.as_str()).collect();
        let fitted: Vec<&str> = self.encodings.iter().map(|e| e.name()).collect();
        if frame_features != fitted {
            return Err(Error::data(format!(
                "encoder fitted on features [{}] but frame has [{}]",
                fitted.join(", "),
                frame_features.join(", ")
            )));
        }
        Ok(())
    }
}

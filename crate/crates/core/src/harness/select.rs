//! Nested encoder → model selection on a chronologically split register.
//!
//! Stage 1 fixes the learner to the boosted-tree reference and searches
//! encoders: each candidate is fitted on the train split, its reference
//! model tuned against validation AvRecall(10,40), and the encoders are
//! compared by the tuned model's score on the held-out test split. Stage
//! 2 fixes the winning encoder and tunes every candidate model family the
//! same way, comparing test scores (with a bootstrap critical-difference
//! analysis across families). Stage 3 refits the winning configuration on
//! the entire modeling register, ready for passive evaluation.
//!
//! Everything here sees only the modeling register the caller passes in;
//! passive-evaluation rows must be removed upstream (the forward split),
//! which is what keeps final reported numbers honest.

use serde::{Deserialize, Serialize};

use crate::encode::{Encoder, EncoderKind, EncoderParams, Matrix};
use crate::error::{Error, Result};
use crate::frame::{impute, Frame, Imputer};
use crate::harness::{
    bootstrap_metric, friedman_cd, random_search, CDResult, SearchResult, SearchSpace,
    TrialRecord,
};
use crate::metric::av_recall;
use crate::model::{
    fit_boosted, fit_cyclic_gam, fit_naive_bayes, fit_tree, GamParams, Model, TreeParams,
};
use crate::split::chronological_partition;
use crate::util::{str_salt, sub_rng};
use rand::Rng;

/// Tunable model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Boosted,
    Tree,
    NaiveBayes,
    CyclicGam,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [
        ModelFamily::Boosted,
        ModelFamily::Tree,
        ModelFamily::NaiveBayes,
        ModelFamily::CyclicGam,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Boosted => "boosted",
            ModelFamily::Tree => "tree",
            ModelFamily::NaiveBayes => "naive_bayes",
            ModelFamily::CyclicGam => "cyclic_gam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "boosted" => Ok(ModelFamily::Boosted),
            "tree" => Ok(ModelFamily::Tree),
            "naive_bayes" => Ok(ModelFamily::NaiveBayes),
            "cyclic_gam" => Ok(ModelFamily::CyclicGam),
            other => Err(Error::config(format!("unknown model family `{other}`"))),
        }
    }

    /// Whether the family consumes encoded matrices (vs raw frames).
    pub fn wants_matrix(self) -> bool {
        matches!(self, ModelFamily::Boosted | ModelFamily::Tree)
    }
}

/// A fitted scoring chain: impute, encode (matrix families), score.
/// Serializable end-to-end, so a stored pipeline re-scores bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pipeline {
    pub imputer: Option<Imputer>,
    pub encoder: Option<Encoder>,
    pub model: Model,
}

impl Pipeline {
    /// Score raw register rows end-to-end.
    pub fn score(&self, frame: &Frame) -> Result<Vec<f64>> {
        let imputed;
        let working = match &self.imputer {
            Some(imp) => {
                imputed = imp.apply(frame)?;
                &imputed
            }
            None => frame,
        };
        if self.model.wants_matrix() {
            let encoder = self
                .encoder
                .as_ref()
                .ok_or_else(|| Error::config("pipeline: matrix model without an encoder"))?;
            self.model.predict_matrix(&encoder.transform(working)?)
        } else {
            self.model.predict_frame(working)
        }
    }
}

/// Knobs of [`select_encoder_then_model`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub encoders: Vec<EncoderKind>,
    pub families: Vec<ModelFamily>,
    /// Random-search trials for the boosted reference model.
    pub budget: usize,
    /// Bootstrap replicates behind the family CD analysis.
    pub bootstrap_b: usize,
    /// Train/val/test fractions of the modeling register.
    pub fractions: (f64, f64, f64),
    pub space: SearchSpace,
    pub encoder_params: EncoderParams,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            encoders: EncoderKind::ALL_SUPPORTED.to_vec(),
            families: ModelFamily::ALL.to_vec(),
            budget: 100,
            bootstrap_b: 1000,
            fractions: (0.6, 0.2, 0.2),
            space: SearchSpace::default(),
            encoder_params: EncoderParams::default(),
            seed: 0,
        }
    }
}

/// Stage-1 summary for one encoder candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderOutcome {
    pub encoder: EncoderKind,
    pub val_objective: f64,
    pub test_objective: f64,
    pub best_params: serde_json::Value,
}

/// Stage-2 summary for one model family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub family: ModelFamily,
    pub val_objective: f64,
    pub test_objective: f64,
    pub best_params: serde_json::Value,
}

/// One flattened trial-log line (stage + context + trial data).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoggedTrial {
    pub stage: u8,
    pub context: String,
    #[serde(flatten)]
    pub record: TrialRecord,
}

/// Full selection result: choices, per-stage summaries, CD analysis, the
/// refitted final pipeline, and the complete trial log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub encoder: EncoderKind,
    pub family: ModelFamily,
    pub stage1: Vec<EncoderOutcome>,
    pub stage2: Vec<FamilyOutcome>,
    /// Family comparison; absent when only one family was in the race.
    pub cd: Option<CDResult>,
    pub pipeline: Pipeline,
    pub trial_log: Vec<LoggedTrial>,
}

/// The tuning/selection objective.
fn objective(scores: &[f64], labels: &[u8]) -> Result<f64> {
    av_recall(scores, labels, 10, 40)
}

struct Splits {
    train: Frame,
    val: Frame,
    test: Frame,
}

/// Run the three-stage selection on the modeling register.
pub fn select_encoder_then_model(
    modeling: &Frame,
    config: &SelectionConfig,
) -> Result<SelectionOutcome> {
    if config.encoders.is_empty() {
        return Err(Error::config("selection: no encoder candidates"));
    }
    if config.families.is_empty() {
        return Err(Error::config("selection: no model families"));
    }
    config.space.validate()?;

    let (train_raw, val, test) = chronological_partition(modeling, config.fractions)?;
    let (train, imputer) = impute(&train_raw)?;
    let splits = Splits { val: imputer.apply(&val)?, test: imputer.apply(&test)?, train };
    let mut trial_log = Vec::new();

    // ---- Stage 1: encoder search with the boosted reference model ----
    let mut stage1 = Vec::with_capacity(config.encoders.len());
    let mut best_encoder: Option<(usize, f64)> = None;
    let mut winner_search: Option<SearchResult> = None;
    for (i, &kind) in config.encoders.iter().enumerate() {
        let (result, test_objective) = tune_boosted_with(kind, &splits, config)?;
        for t in &result.trials {
            trial_log.push(LoggedTrial {
                stage: 1,
                context: kind.as_str().to_string(),
                record: t.clone(),
            });
        }
        stage1.push(EncoderOutcome {
            encoder: kind,
            val_objective: result.best_objective,
            test_objective,
            best_params: serde_json::to_value(&result.best)?,
        });
        if best_encoder.map_or(true, |(_, b)| test_objective > b) {
            best_encoder = Some((i, test_objective));
            winner_search = Some(result);
        }
    }
    let (best_idx, _) = best_encoder.expect("at least one encoder");
    let chosen_encoder = config.encoders[best_idx];
    let boosted_search = winner_search.expect("winner recorded");

    // ---- Stage 2: model-family search with the chosen encoder ----
    let mut stage2 = Vec::with_capacity(config.families.len());
    let mut family_scores: Vec<(String, Vec<f64>)> = Vec::new();
    let mut best_family: Option<(usize, f64)> = None;
    for (i, &family) in config.families.iter().enumerate() {
        let tuned = tune_family(family, chosen_encoder, &boosted_search, &splits, config)?;
        for t in tuned.trials {
            trial_log.push(LoggedTrial {
                stage: 2,
                context: family.as_str().to_string(),
                record: t,
            });
        }
        let test_objective = objective(&tuned.test_scores, splits.test.labels()?)?;
        family_scores.push((family.as_str().to_string(), tuned.test_scores));
        stage2.push(FamilyOutcome {
            family,
            val_objective: tuned.val_objective,
            test_objective,
            best_params: tuned.best_params,
        });
        if best_family.map_or(true, |(_, b)| test_objective > b) {
            best_family = Some((i, test_objective));
        }
    }
    let (family_idx, _) = best_family.expect("at least one family");
    let chosen_family = config.families[family_idx];

    // Critical-difference analysis across the tuned families on test.
    let cd = if family_scores.len() >= 2 {
        let cd_set = bootstrap_metric(
            &family_scores,
            splits.test.labels()?,
            config.bootstrap_b,
            config.seed ^ str_salt("stage2-cd"),
            &objective,
        )?;
        Some(friedman_cd(&cd_set)?)
    } else {
        None
    };

    // ---- Stage 3: refit the winner on the entire modeling register ----
    let pipeline = fit_pipeline(
        modeling,
        chosen_encoder,
        chosen_family,
        &stage2[family_idx].best_params,
        config,
        None,
    )?;

    Ok(SelectionOutcome {
        encoder: chosen_encoder,
        family: chosen_family,
        stage1,
        stage2,
        cd,
        pipeline,
        trial_log,
    })
}

/// Encode the three splits with one encoder candidate.
fn encode_splits(
    kind: EncoderKind,
    splits: &Splits,
    params: &EncoderParams,
) -> Result<(Encoder, Matrix, Matrix, Matrix)> {
    let (encoder, x_train) = Encoder::fit_transform(kind, &splits.train, params)?;
    let x_val = encoder.transform(&splits.val)?;
    let x_test = encoder.transform(&splits.test)?;
    Ok((encoder, x_train, x_val, x_test))
}

/// Tune the boosted reference model on one encoder; returns the search
/// result (validation objectives) and the tuned model's test objective.
fn tune_boosted_with(
    kind: EncoderKind,
    splits: &Splits,
    config: &SelectionConfig,
) -> Result<(SearchResult, f64)> {
    let (_, x_train, x_val, x_test) = encode_splits(kind, splits, &config.encoder_params)?;
    let y_train = splits.train.labels()?;
    let y_val = splits.val.labels()?;
    let seed = config.seed ^ str_salt(kind.as_str());
    let result = random_search(&config.space, config.budget, seed, |hp| {
        let model = fit_boosted(&x_train, y_train, None, hp)?;
        objective(&model.predict_matrix(&x_val)?, y_val)
    })?;
    let model = fit_boosted(&x_train, y_train, None, &result.best)?;
    let test_objective = objective(&model.predict_matrix(&x_test)?, splits.test.labels()?)?;
    Ok((result, test_objective))
}

struct TunedFamily {
    val_objective: f64,
    test_scores: Vec<f64>,
    best_params: serde_json::Value,
    trials: Vec<TrialRecord>,
}

/// Tune one family with the chosen encoder fixed. The boosted family
/// reuses its stage-1 search (identical protocol); frame families ignore
/// the encoder by construction.
fn tune_family(
    family: ModelFamily,
    encoder_kind: EncoderKind,
    boosted_search: &SearchResult,
    splits: &Splits,
    config: &SelectionConfig,
) -> Result<TunedFamily> {
    let y_train = splits.train.labels()?;
    let y_val = splits.val.labels()?;
    match family {
        ModelFamily::Boosted => {
            let (_, x_train, _, x_test) =
                encode_splits(encoder_kind, splits, &config.encoder_params)?;
            let model = fit_boosted(&x_train, y_train, None, &boosted_search.best)?;
            Ok(TunedFamily {
                val_objective: boosted_search.best_objective,
                test_scores: model.predict_matrix(&x_test)?,
                best_params: serde_json::to_value(&boosted_search.best)?,
                trials: Vec::new(), // already logged in stage 1
            })
        }
        ModelFamily::Tree => {
            let (_, x_train, x_val, x_test) =
                encode_splits(encoder_kind, splits, &config.encoder_params)?;
            let budget = config.budget.min(20);
            let seed = config.seed ^ str_salt("tree-family");
            let salt = str_salt("tree-trial");
            let mut best: Option<(f64, TreeParams)> = None;
            let mut trials = Vec::new();
            for trial in 0..budget {
                let mut rng = sub_rng(seed ^ trial as u64, salt);
                let params = TreeParams {
                    max_depth: rng.gen_range(1..=9),
                    min_leaf: [5usize, 10, 20, 50, 100][rng.gen_range(0..5)],
                };
                let model = fit_tree(&x_train, y_train, &params)?;
                let value = objective(&model.predict_matrix(&x_val)?, y_val)?;
                trials.push(TrialRecord {
                    trial,
                    seed: seed ^ trial as u64,
                    params: serde_json::to_value(params)?,
                    objective: value,
                });
                if best.as_ref().map_or(true, |(b, _)| value > *b) {
                    best = Some((value, params));
                }
            }
            let (val_objective, params) = best.expect("budget >= 1");
            let model = fit_tree(&x_train, y_train, &params)?;
            Ok(TunedFamily {
                val_objective,
                test_scores: model.predict_matrix(&x_test)?,
                best_params: serde_json::to_value(params)?,
                trials,
            })
        }
        ModelFamily::NaiveBayes => {
            let model = fit_naive_bayes(&splits.train)?;
            let val_objective = objective(&model.predict_frame(&splits.val)?, y_val)?;
            Ok(TunedFamily {
                val_objective,
                test_scores: model.predict_frame(&splits.test)?,
                best_params: serde_json::Value::Null,
                trials: vec![TrialRecord {
                    trial: 0,
                    seed: config.seed,
                    params: serde_json::Value::Null,
                    objective: val_objective,
                }],
            })
        }
        ModelFamily::CyclicGam => {
            let budget = config.budget.min(8);
            let seed = config.seed ^ str_salt("gam-family");
            let salt = str_salt("gam-trial");
            let mut best: Option<(f64, GamParams)> = None;
            let mut trials = Vec::new();
            for trial in 0..budget {
                let mut rng = sub_rng(seed ^ trial as u64, salt);
                let params = GamParams {
                    cycles: [25usize, 50, 100, 150][rng.gen_range(0..4)],
                    learning_rate: (rng.gen_range(0.02f64.ln()..=0.5f64.ln())).exp(),
                    max_bins: [16usize, 32, 64][rng.gen_range(0..3)],
                };
                let model = fit_cyclic_gam(&splits.train, &params)?;
                let value = objective(&model.predict_frame(&splits.val)?, y_val)?;
                trials.push(TrialRecord {
                    trial,
                    seed: seed ^ trial as u64,
                    params: serde_json::to_value(params)?,
                    objective: value,
                });
                if best.as_ref().map_or(true, |(b, _)| value > *b) {
                    best = Some((value, params));
                }
            }
            let (val_objective, params) = best.expect("budget >= 1");
            let model = fit_cyclic_gam(&splits.train, &params)?;
            Ok(TunedFamily {
                val_objective,
                test_scores: model.predict_frame(&splits.test)?,
                best_params: serde_json::to_value(params)?,
                trials,
            })
        }
    }
}

/// Fit a complete pipeline (imputer, encoder, model) for one chosen
/// configuration on `modeling`. `params` carries the family's
/// hyperparameters as produced by the search (JSON); pass
/// `serde_json::Value::Null` for naive Bayes. Optional per-row `weights`
/// are folded into the boosted loss; the other families reject them.
/// Stage 3 of the selection protocol calls this on the winning choice.
pub fn fit_pipeline(
    modeling: &Frame,
    encoder_kind: EncoderKind,
    family: ModelFamily,
    params: &serde_json::Value,
    config: &SelectionConfig,
    weights: Option<&[f64]>,
) -> Result<Pipeline> {
    if weights.is_some() && family != ModelFamily::Boosted {
        return Err(Error::config(format!(
            "fit: row weights are only supported by the boosted family, not {}",
            family.as_str()
        )));
    }
    let (full, imputer) = impute(modeling)?;
    let y = full.labels()?.to_vec();
    let (encoder, model) = if family.wants_matrix() {
        let (encoder, x) = Encoder::fit_transform(encoder_kind, &full, &config.encoder_params)?;
        let model = match family {
            ModelFamily::Boosted => {
                let hp = serde_json::from_value(params.clone())?;
                fit_boosted(&x, &y, weights, &hp)?
            }
            ModelFamily::Tree => {
                let tree_params = serde_json::from_value(params.clone())?;
                fit_tree(&x, &y, &tree_params)?
            }
            _ => unreachable!("matrix families are boosted|tree"),
        };
        (Some(encoder), model)
    } else {
        let model = match family {
            ModelFamily::NaiveBayes => fit_naive_bayes(&full)?,
            ModelFamily::CyclicGam => {
                let gam_params = serde_json::from_value(params.clone())?;
                fit_cyclic_gam(&full, &gam_params)?
            }
            _ => unreachable!("frame families are naive_bayes|cyclic_gam"),
        };
        (None, model)
    };
    Ok(Pipeline { imputer: Some(imputer), encoder, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{CategoricalColumn, ColumnData, ColumnKind, ColumnSpec, Schema};
    use crate::util::sigmoid;

    /// Register with one high-cardinality categorical holding a two-tier
    /// frequency/risk structure: 60 common "hub" categories carry high
    /// risk, 1200 rare "spokes" low risk. Count encoding separates the
    /// tiers with a single threshold (and sends unseen spokes to 0, the
    /// correct end), while random codes scatter hubs across the code
    /// space — beyond a capacity-limited booster — and place unseen
    /// spokes at arbitrary positions.
    fn planted_register(n: usize, common: usize, seed: u64) -> Frame {
        let mut rng = sub_rng(seed, str_salt("planted-register"));
        let rare = common * 20;
        let mut tokens = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut months = Vec::with_capacity(n);
        for i in 0..n {
            let (token, logit_v) = if rng.gen::<f64>() < 0.6 {
                (format!("hub{:03}", rng.gen_range(0..common)), -0.8)
            } else {
                (format!("spoke{:04}", rng.gen_range(0..rare)), -3.8)
            };
            tokens.push(token);
            labels.push(u8::from(rng.gen::<f64>() < sigmoid(logit_v)));
            months.push((i % 6) as i64);
        }
        let schema = Schema::new(
            vec![
                ColumnSpec::new("Facility", ColumnKind::Categorical),
                ColumnSpec::new("Month", ColumnKind::Timestamp),
                ColumnSpec::new("LFU", ColumnKind::Label),
            ],
            "yes",
        )
        .unwrap();
        Frame::new(
            schema,
            vec![
                ColumnData::Categorical(CategoricalColumn::from_tokens(
                    tokens.iter().map(|t| Some(t.as_str())),
                )),
                ColumnData::Timestamp(months),
                ColumnData::Label(labels),
            ],
        )
        .unwrap()
    }

    /// Cheap search space for tests: capacity-limited boosted models.
    fn small_space() -> SearchSpace {
        SearchSpace {
            learning_rate: (0.1, 0.4),
            n_estimators: vec![50],
            max_depth: (1, 2),
            min_child_weight: (1, 2),
            positive_class_weight: (1, 4),
            l1: (1e-5, 1e-4),
            l2: (0.5, 1.0),
            subsample: (1.0, 1.0),
            colsample: (1.0, 1.0),
            min_split_loss: vec![0.0],
        }
    }

    #[test]
    fn random_codes_never_beat_count_encoding() {
        for seed in 0..10u64 {
            let frame = planted_register(2000, 60, 100 + seed);
            let config = SelectionConfig {
                encoders: vec![EncoderKind::RandomCode, EncoderKind::Count],
                families: vec![ModelFamily::Boosted],
                budget: 3,
                bootstrap_b: 50,
                space: small_space(),
                seed,
                ..Default::default()
            };
            let outcome = select_encoder_then_model(&frame, &config).unwrap();
            assert_eq!(
                outcome.encoder,
                EncoderKind::Count,
                "seed {seed}: stage1 {:?}",
                outcome
                    .stage1
                    .iter()
                    .map(|o| (o.encoder, o.test_objective))
                    .collect::<Vec<_>>()
            );
            // Single family: returned directly, no CD analysis.
            assert_eq!(outcome.family, ModelFamily::Boosted);
            assert!(outcome.cd.is_none());
        }
    }

    #[test]
    fn full_selection_is_reproducible_bit_for_bit() {
        let frame = planted_register(900, 20, 42);
        let config = SelectionConfig {
            encoders: vec![EncoderKind::Count, EncoderKind::Target],
            families: vec![ModelFamily::Boosted, ModelFamily::NaiveBayes],
            budget: 2,
            bootstrap_b: 60,
            space: small_space(),
            seed: 7,
            ..Default::default()
        };
        let a = select_encoder_then_model(&frame, &config).unwrap();
        let b = select_encoder_then_model(&frame, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );

        // Both stages ran and were logged.
        assert_eq!(a.stage1.len(), 2);
        assert_eq!(a.stage2.len(), 2);
        assert!(a.cd.is_some());
        assert!(a.trial_log.iter().any(|t| t.stage == 1));
        assert!(a.trial_log.iter().any(|t| t.stage == 2));

        // The final pipeline scores the register end-to-end.
        let scores = a.pipeline.score(&frame).unwrap();
        assert_eq!(scores.len(), frame.n_rows());
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn pipeline_round_trips_through_json() {
        let frame = planted_register(600, 10, 3);
        let config = SelectionConfig {
            encoders: vec![EncoderKind::Count],
            families: vec![ModelFamily::Boosted],
            budget: 1,
            bootstrap_b: 50,
            space: small_space(),
            seed: 1,
            ..Default::default()
        };
        let outcome = select_encoder_then_model(&frame, &config).unwrap();
        let json = serde_json::to_string(&outcome.pipeline).unwrap();
        let back: Pipeline = serde_json::from_str(&json).unwrap();
        assert_eq!(outcome.pipeline.score(&frame).unwrap(), back.score(&frame).unwrap());
    }

    #[test]
    fn empty_candidate_sets_rejected() {
        let frame = planted_register(300, 5, 0);
        let no_enc = SelectionConfig {
            encoders: vec![],
            families: vec![ModelFamily::Boosted],
            ..Default::default()
        };
        assert!(select_encoder_then_model(&frame, &no_enc).is_err());
        let no_fam = SelectionConfig {
            encoders: vec![EncoderKind::Count],
            families: vec![],
            ..Default::default()
        };
        assert!(select_encoder_then_model(&frame, &no_fam).is_err());
    }
}

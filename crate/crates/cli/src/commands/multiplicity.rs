//! `multiplicity`: how much do near-equivalent models disagree per patient?
//!
//! The selection trial log already contains many tuned boosted candidates
//! for the winning encoder. The top distinct ones are refitted in the exact
//! stage-1 environment (impute on train, encode on train, score the target
//! split), the best becomes the baseline, and every candidate within ε of
//! its objective joins the ε-performance set. Ambiguity counts patients any
//! member flips relative to the baseline; discrepancy is the worst single
//! member's flip rate.

use rayon::prelude::*;

use lfurisk_core::encode::Encoder;
use lfurisk_core::frame::impute;
use lfurisk_core::harness::SelectionOutcome;
use lfurisk_core::model::{fit_boosted, BoostHParams};
use lfurisk_core::multiplicity::build_epsilon_set;
use lfurisk_core::{Error, Result};

use crate::artifact::Ctx;
use crate::commands::{load_register, load_splits, objective, MULTIPLICITY_REPORT, SELECT_OUTCOME};

pub fn run(ctx: &Ctx) -> Result<()> {
    let (frame, _) = load_register(ctx)?;
    let splits = load_splits(ctx)?;
    let outcome: SelectionOutcome = ctx.read_json(SELECT_OUTCOME)?;
    let section = &ctx.config.multiplicity;

    let trials = distinct_stage1_trials(&outcome, section.candidates);
    if trials.is_empty() {
        return Err(Error::data(format!(
            "multiplicity: selection outcome has no stage-1 trials for encoder `{}`",
            outcome.encoder.as_str()
        )));
    }
    log::info!(
        "multiplicity: refitting {} distinct candidates for encoder `{}`",
        trials.len(),
        outcome.encoder.as_str()
    );

    // Rebuild the stage-1 environment: imputer and encoder fitted on the
    // train split, candidates scored on the target split.
    let train_raw = splits.frame(&frame, "train")?;
    let target_raw = splits.frame(&frame, &section.split)?;
    let (train, imputer) = impute(&train_raw)?;
    let target = imputer.apply(&target_raw)?;
    let params = ctx.config.selection_config().encoder_params;
    let (encoder, x_train) = Encoder::fit_transform(outcome.encoder, &train, &params)?;
    let x_target = encoder.transform(&target)?;
    let y_train = train.labels()?;
    let y_target = target.labels()?;

    let candidates: Vec<(String, Vec<f64>)> = trials
        .par_iter()
        .map(|(name, hp, _)| -> Result<(String, Vec<f64>)> {
            let model = fit_boosted(&x_train, y_train, None, hp)?;
            Ok((name.clone(), model.predict_matrix(&x_target)?))
        })
        .collect::<Result<_>>()?;

    let obj = objective(&ctx.config);
    let set = build_epsilon_set(&candidates, y_target, &obj, section.epsilon)?;
    let report = set.report();
    ctx.write_json(MULTIPLICITY_REPORT, &report)?;

    let member_names: Vec<&str> = set.member_names();
    let mut table = ctx.table(
        "multiplicity.candidates.csv",
        &["name", "search_objective", "target_objective", "member", "disagreement"],
    )?;
    for ((name, scores), (_, _, search_objective)) in candidates.iter().zip(&trials) {
        let member = member_names.contains(&name.as_str());
        let disagreement = report
            .member_disagreement
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| *d);
        table.row(&[
            name.clone(),
            search_objective.to_string(),
            obj(scores, y_target)?.to_string(),
            member.to_string(),
            crate::artifact::cell_opt(disagreement),
        ])?;
    }
    table.finish()?;

    println!(
        "multiplicity: {} candidates, {} within eps = {} of `{}`: ambiguity {:.4}, \
         discrepancy {:.4}",
        candidates.len(),
        report.n_members,
        report.epsilon,
        report.baseline,
        report.ambiguity,
        report.discrepancy,
    );
    Ok(())
}

/// Stage-1 trials of the winning encoder, best validation objective first,
/// deduplicated by hyper-parameter value, truncated to `limit`. Returns
/// (name, parsed params, search objective).
fn distinct_stage1_trials(
    outcome: &SelectionOutcome,
    limit: usize,
) -> Vec<(String, BoostHParams, f64)> {
    let mut trials: Vec<_> = outcome
        .trial_log
        .iter()
        .filter(|t| t.stage == 1 && t.context == outcome.encoder.as_str())
        .collect();
    trials.sort_by(|a, b| b.record.objective.total_cmp(&a.record.objective));

    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for logged in trials {
        let key = logged.record.params.to_string();
        if !seen.insert(key) {
            continue;
        }
        let hp: BoostHParams = match serde_json::from_value(logged.record.params.clone()) {
            Ok(hp) => hp,
            Err(e) => {
                log::warn!(
                    "multiplicity: skipping trial {} with unparsable params: {e}",
                    logged.record.trial
                );
                continue;
            }
        };
        out.push((format!("trial{:03}", logged.record.trial), hp, logged.record.objective));
        if out.len() == limit {
            break;
        }
    }
    out
}

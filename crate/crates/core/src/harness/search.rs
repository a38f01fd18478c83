//! Seeded random hyperparameter search for the boosted-tree learner.
//!
//! Each trial draws one configuration from the published distributions
//! (log-uniform rates and penalties, discrete estimator/split-loss grids,
//! integer depth and weight ranges) using a stream seeded `seed ⊕ trial`,
//! evaluates the caller's objective, and logs the result. Per-trial
//! seeding makes the trial sequence independent of the budget, so a
//! 10-trial run is a bit-exact prefix of a 100-trial run — and the best
//! objective is monotone in the budget. Ties keep the lowest trial index.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BoostHParams;
use crate::util::{str_salt, sub_rng};

/// Sampling ranges for [`BoostHParams`]. Defaults follow the published
/// search table; every field is adjustable for cheaper sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    /// Log-uniform range.
    pub learning_rate: (f64, f64),
    /// Discrete uniform choices.
    pub n_estimators: Vec<usize>,
    /// Uniform integer range, inclusive.
    pub max_depth: (usize, usize),
    /// Uniform integer range, inclusive.
    pub min_child_weight: (u32, u32),
    /// Uniform integer range, inclusive.
    pub positive_class_weight: (u32, u32),
    /// Log-uniform range.
    pub l1: (f64, f64),
    /// Uniform range.
    pub l2: (f64, f64),
    /// Uniform range.
    pub subsample: (f64, f64),
    /// Uniform range.
    pub colsample: (f64, f64),
    /// Discrete uniform choices.
    pub min_split_loss: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            learning_rate: (1e-7, 1.0),
            n_estimators: vec![50, 100, 200, 400, 600, 800, 1000, 1200, 1500, 2000],
            max_depth: (1, 9),
            min_child_weight: (1, 8),
            positive_class_weight: (1, 90),
            l1: (1e-5, 1.0),
            l2: (1e-3, 1.0),
            subsample: (0.5, 1.0),
            colsample: (0.5, 1.0),
            min_split_loss: vec![0.0, 0.3, 0.6, 0.9, 1.2, 2.0, 4.0, 6.0, 8.0],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo <= hi;
        let checks = [
            (
                ordered(self.learning_rate.0, self.learning_rate.1) && self.learning_rate.0 > 0.0,
                "learning_rate log range needs 0 < lo <= hi",
            ),
            (!self.n_estimators.is_empty(), "n_estimators choices empty"),
            (self.n_estimators.iter().all(|&n| n >= 1), "n_estimators must be >= 1"),
            (
                self.max_depth.0 <= self.max_depth.1 && self.max_depth.1 <= 32,
                "max_depth range invalid",
            ),
            (
                self.min_child_weight.0 <= self.min_child_weight.1,
                "min_child_weight range invalid",
            ),
            (
                self.positive_class_weight.0 >= 1
                    && self.positive_class_weight.0 <= self.positive_class_weight.1,
                "positive_class_weight range invalid",
            ),
            (ordered(self.l1.0, self.l1.1) && self.l1.0 > 0.0, "l1 log range needs 0 < lo <= hi"),
            (ordered(self.l2.0, self.l2.1) && self.l2.0 >= 0.0, "l2 range invalid"),
            (
                ordered(self.subsample.0, self.subsample.1)
                    && self.subsample.0 > 0.0
                    && self.subsample.1 <= 1.0,
                "subsample range invalid",
            ),
            (
                ordered(self.colsample.0, self.colsample.1)
                    && self.colsample.0 > 0.0
                    && self.colsample.1 <= 1.0,
                "colsample range invalid",
            ),
            (!self.min_split_loss.is_empty(), "min_split_loss choices empty"),
            (
                self.min_split_loss.iter().all(|&v| v >= 0.0 && v.is_finite()),
                "min_split_loss must be >= 0",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::config(format!("search space: {msg}")));
            }
        }
        Ok(())
    }

    /// Draw one configuration. Field order is fixed; changing it would
    /// change every seeded trial.
    pub fn draw(&self, rng: &mut impl Rng, model_seed: u64) -> BoostHParams {
        let log_uniform = |rng: &mut dyn rand::RngCore, (lo, hi): (f64, f64)| {
            if lo == hi {
                lo
            } else {
                (rng.gen_range(lo.ln()..=hi.ln())).exp()
            }
        };
        let uniform = |rng: &mut dyn rand::RngCore, (lo, hi): (f64, f64)| {
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..=hi)
            }
        };
        BoostHParams {
            learning_rate: log_uniform(rng, self.learning_rate),
            n_estimators: self.n_estimators[rng.gen_range(0..self.n_estimators.len())],
            max_depth: rng.gen_range(self.max_depth.0..=self.max_depth.1),
            min_child_weight: f64::from(
                rng.gen_range(self.min_child_weight.0..=self.min_child_weight.1),
            ),
            positive_class_weight: f64::from(
                rng.gen_range(self.positive_class_weight.0..=self.positive_class_weight.1),
            ),
            l1: log_uniform(rng, self.l1),
            l2: uniform(rng, self.l2),
            subsample: uniform(rng, self.subsample),
            colsample: uniform(rng, self.colsample),
            min_split_loss: self.min_split_loss[rng.gen_range(0..self.min_split_loss.len())],
            seed: model_seed,
        }
    }
}

/// One logged search trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub params: serde_json::Value,
    pub objective: f64,
}

/// Result of a random search run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: BoostHParams,
    pub best_objective: f64,
    pub best_trial: usize,
    pub trials: Vec<TrialRecord>,
}

/// Run `budget` seeded random trials, maximizing `objective`.
pub fn random_search(
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    objective: impl Fn(&BoostHParams) -> Result<f64>,
) -> Result<SearchResult> {
    space.validate()?;
    if budget == 0 {
        return Err(Error::config("random search: budget >= 1"));
    }
    let salt = str_salt("hparam-trial");
    let mut best: Option<(usize, f64, BoostHParams)> = None;
    let mut trials = Vec::with_capacity(budget);
    for trial in 0..budget {
        let trial_seed = seed ^ trial as u64;
        let mut rng = sub_rng(trial_seed, salt);
        let hp = space.draw(&mut rng, trial_seed);
        let value = objective(&hp)?;
        if !value.is_finite() {
            return Err(Error::data(format!("trial {trial}: non-finite objective {value}")));
        }
        trials.push(TrialRecord {
            trial,
            seed: trial_seed,
            params: serde_json::to_value(&hp)?,
            objective: value,
        });
        if best.as_ref().map_or(true, |(_, b, _)| value > *b) {
            best = Some((trial, value, hp));
        }
    }
    let (best_trial, best_objective, best) = best.expect("budget >= 1");
    Ok(SearchResult { best, best_objective, best_trial, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Deterministic synthetic objective: prefers lr near 0.05, shallow
    /// trees, and small l1 — no model fitting involved.
    fn mock_objective(hp: &BoostHParams) -> Result<f64> {
        Ok(-((hp.learning_rate.ln() - 0.05f64.ln()).abs())
            - 0.05 * hp.max_depth as f64
            - hp.l1)
    }

    #[test]
    fn budget_one_returns_the_single_draw() {
        let res = random_search(&SearchSpace::default(), 1, 7, mock_objective).unwrap();
        assert_eq!(res.trials.len(), 1);
        assert_eq!(res.best_trial, 0);
        assert_eq!(
            serde_json::to_value(&res.best).unwrap(),
            res.trials[0].params
        );
    }

    #[test]
    fn constant_objective_keeps_lowest_trial_index() {
        let res = random_search(&SearchSpace::default(), 20, 3, |_| Ok(0.5)).unwrap();
        assert_eq!(res.best_trial, 0);
        assert_eq!(res.best_objective, 0.5);
    }

    #[test]
    fn larger_budget_never_does_worse_and_prefixes_match() {
        let small = random_search(&SearchSpace::default(), 10, 11, mock_objective).unwrap();
        let large = random_search(&SearchSpace::default(), 100, 11, mock_objective).unwrap();
        assert!(large.best_objective >= small.best_objective);
        for (a, b) in small.trials.iter().zip(&large.trials) {
            assert_eq!(a.params, b.params);
            assert_eq!(a.objective, b.objective);
        }
    }

    #[test]
    fn draws_respect_the_published_ranges() {
        let space = SearchSpace::default();
        let res = random_search(&space, 200, 5, mock_objective).unwrap();
        for t in &res.trials {
            let hp: BoostHParams = serde_json::from_value(t.params.clone()).unwrap();
            hp.validate().unwrap();
            assert!((1e-7..=1.0).contains(&hp.learning_rate));
            assert!(space.n_estimators.contains(&hp.n_estimators));
            assert!((1..=9).contains(&hp.max_depth));
            assert!((1.0..=8.0).contains(&hp.min_child_weight));
            assert!(hp.min_child_weight.fract() == 0.0);
            assert!((1.0..=90.0).contains(&hp.positive_class_weight));
            assert!((1e-5..=1.0).contains(&hp.l1));
            assert!((1e-3..=1.0).contains(&hp.l2));
            assert!((0.5..=1.0).contains(&hp.subsample));
            assert!((0.5..=1.0).contains(&hp.colsample));
            assert!(space.min_split_loss.contains(&hp.min_split_loss));
        }
        // The full ranges actually get exercised.
        let depths: std::collections::BTreeSet<usize> = res
            .trials
            .iter()
            .map(|t| t.params["max_depth"].as_u64().unwrap() as usize)
            .collect();
        assert!(depths.len() >= 7, "depths drawn: {depths:?}");
    }

    #[test]
    fn same_seed_reproduces_the_trial_log() {
        let a = random_search(&SearchSpace::default(), 25, 9, mock_objective).unwrap();
        let b = random_search(&SearchSpace::default(), 25, 9, mock_objective).unwrap();
        assert_eq!(
            serde_json::to_string(&a.trials).unwrap(),
            serde_json::to_string(&b.trials).unwrap()
        );
        let c = random_search(&SearchSpace::default(), 25, 10, mock_objective).unwrap();
        assert_ne!(
            serde_json::to_string(&a.trials).unwrap(),
            serde_json::to_string(&c.trials).unwrap()
        );
    }

    #[test]
    fn zero_budget_and_bad_space_rejected() {
        assert!(random_search(&SearchSpace::default(), 0, 0, mock_objective).is_err());
        let bad = SearchSpace { n_estimators: vec![], ..Default::default() };
        assert!(random_search(&bad, 5, 0, mock_objective).is_err());
    }
}

//! Scorers: everything that turns an episode into a risk score in [0, 1].
//!
//! Two input conventions exist, reflecting how the learners consume data:
//!
//! * matrix models ([`fit_boosted`], [`fit_tree`]) score an encoded
//!   [`Matrix`] — categorical structure must be encoded first;
//! * frame models ([`fit_naive_bayes`], [`fit_cyclic_gam`], [`Rule`])
//!   score the raw categorical [`Frame`] directly.
//!
//! All fits are deterministic in (data, params, seed). A degenerate label
//! vector (single class) yields a constant base-rate model with a logged
//! warning rather than an error, so a pipeline sweep never aborts on a
//! pathological cohort.

mod bayes;
mod boost;
mod gam;
mod rule;
mod tree;

pub use bayes::NaiveBayesModel;
pub use boost::{BoostHParams, BoostedModel, Tree};
pub use gam::{GamModel, GamParams};
pub use rule::{builtin_rules, Condition, Rule};
pub use tree::{TreeModel, TreeParams};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encode::Matrix;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::util::{logit, sub_rng};

/// A fitted scorer. Serializable to JSON for audit and exact re-scoring.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    /// Constant score; produced when training labels are single-class.
    Constant { value: f64 },
    Rule(Rule),
    Tree(TreeModel),
    NaiveBayes(NaiveBayesModel),
    Boosted(BoostedModel),
    CyclicGam(GamModel),
}

impl Model {
    pub fn family(&self) -> &'static str {
        match self {
            Model::Constant { .. } => "constant",
            Model::Rule(_) => "rule",
            Model::Tree(_) => "tree",
            Model::NaiveBayes(_) => "naive_bayes",
            Model::Boosted(_) => "boosted",
            Model::CyclicGam(_) => "cyclic_gam",
        }
    }

    /// Whether this model scores encoded matrices (vs raw frames).
    pub fn wants_matrix(&self) -> bool {
        matches!(self, Model::Tree(_) | Model::Boosted(_))
    }

    /// Score an encoded matrix. Errors for frame-input families.
    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Model::Constant { value } => Ok(vec![*value; x.n_rows()]),
            Model::Tree(m) => m.predict(x),
            Model::Boosted(m) => m.predict(x),
            other => Err(Error::config(format!(
                "model family `{}` scores raw frames, not matrices",
                other.family()
            ))),
        }
    }

    /// Score a raw frame. Errors for matrix-input families.
    pub fn predict_frame(&self, frame: &Frame) -> Result<Vec<f64>> {
        match self {
            Model::Constant { value } => Ok(vec![*value; frame.n_rows()]),
            Model::Rule(r) => r.score_frame(frame),
            Model::NaiveBayes(m) => m.predict(frame),
            Model::CyclicGam(m) => m.predict(frame),
            other => Err(Error::config(format!(
                "model family `{}` scores encoded matrices, not frames",
                other.family()
            ))),
        }
    }
}

/// Check labels and return the positive rate, or `None` for degenerate
/// (single-class) labels.
fn class_balance(y: &[u8]) -> Result<Option<f64>> {
    if y.is_empty() {
        return Err(Error::data("fit: empty label vector"));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::data(format!("fit: label {bad} outside {{0,1}}")));
    }
    let pos = y.iter().map(|&v| usize::from(v)).sum::<usize>();
    if pos == 0 || pos == y.len() {
        return Ok(None);
    }
    Ok(Some(pos as f64 / y.len() as f64))
}

/// Constant base-rate fallback for degenerate labels (logged, not fatal).
fn degenerate_model(y: &[u8], family: &str) -> Model {
    let rate = y.iter().map(|&v| f64::from(v)).sum::<f64>() / y.len() as f64;
    log::warn!("{family}: labels are single-class; fitting constant base-rate model ({rate})");
    // Keep the constant inside (0,1) so downstream logit/lift math stays
    // finite.
    Model::Constant { value: crate::util::sigmoid(logit(rate)) }
}

/// Newton-boosted tree ensemble on logistic loss (the reference learner).
/// `weights` are optional per-row multipliers (cohort reweighing); the
/// positive-class weight of `hp` stacks on top.
pub fn fit_boosted(
    x: &Matrix,
    y: &[u8],
    weights: Option<&[f64]>,
    hp: &BoostHParams,
) -> Result<Model> {
    hp.validate()?;
    check_rows(x, y, weights)?;
    match class_balance(y)? {
        Some(_) => Ok(Model::Boosted(boost::fit(x, y, weights, hp)?)),
        None => Ok(degenerate_model(y, "boosted")),
    }
}

/// Single CART-style classification tree on Gini impurity.
pub fn fit_tree(x: &Matrix, y: &[u8], params: &TreeParams) -> Result<Model> {
    params.validate()?;
    check_rows(x, y, None)?;
    match class_balance(y)? {
        Some(_) => Ok(Model::Tree(tree::fit(x, y, params)?)),
        None => Ok(degenerate_model(y, "tree")),
    }
}

/// Naive Bayes on raw features: Laplace-smoothed category likelihoods,
/// Gaussian likelihoods for numeric columns.
pub fn fit_naive_bayes(frame: &Frame) -> Result<Model> {
    let y = frame.labels()?;
    match class_balance(y)? {
        Some(_) => Ok(Model::NaiveBayes(bayes::fit(frame)?)),
        None => Ok(degenerate_model(y, "naive_bayes")),
    }
}

/// Cyclic gradient-boosted additive model (round-robin depth-1 stumps per
/// feature); shape functions are extractable from the fitted model.
pub fn fit_cyclic_gam(frame: &Frame, params: &GamParams) -> Result<Model> {
    params.validate()?;
    let y = frame.labels()?;
    match class_balance(y)? {
        Some(_) => Ok(Model::CyclicGam(gam::fit(frame, params)?)),
        None => Ok(degenerate_model(y, "cyclic_gam")),
    }
}

/// Element-wise mean of several score vectors (soft-voting ensemble).
pub fn ensemble_average(score_vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = score_vectors
        .first()
        .ok_or_else(|| Error::config("ensemble: no score vectors"))?;
    for (i, v) in score_vectors.iter().enumerate() {
        if v.len() != first.len() {
            return Err(Error::data(format!(
                "ensemble: vector {i} has {} scores, expected {}",
                v.len(),
                first.len()
            )));
        }
        if let Some(bad) = v.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::data(format!("ensemble: score {bad} outside [0,1]")));
        }
    }
    let k = score_vectors.len() as f64;
    Ok((0..first.len())
        .map(|i| score_vectors.iter().map(|v| v[i]).sum::<f64>() / k)
        .collect())
}

/// Seeded uniform scores in [0,1): the random baseline scorer.
pub fn random_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = sub_rng(seed, crate::util::str_salt("random-scorer"));
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

fn check_rows(x: &Matrix, y: &[u8], weights: Option<&[f64]>) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::data(format!(
            "fit: {} rows in matrix vs {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != y.len() {
            return Err(Error::data(format!("fit: {} weights vs {} labels", w.len(), y.len())));
        }
        if let Some(bad) = w.iter().find(|&&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::data(format!("fit: invalid row weight {bad}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_hand_cases() {
        let same = vec![vec![0.2, 0.8], vec![0.2, 0.8]];
        assert_eq!(ensemble_average(&same).unwrap(), vec![0.2, 0.8]);
        let sym = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(ensemble_average(&sym).unwrap(), vec![0.5, 0.5]);

        let five: Vec<Vec<f64>> =
            (0..5).map(|i| vec![0.1 * i as f64, 0.05 * i as f64 + 0.3]).collect();
        let avg = ensemble_average(&five).unwrap();
        for j in 0..2 {
            let expect = five.iter().map(|v| v[j]).sum::<f64>() / 5.0;
            assert!((avg[j] - expect).abs() < 1e-12);
        }

        assert!(ensemble_average(&[]).is_err());
        assert!(ensemble_average(&[vec![0.5], vec![0.5, 0.5]]).is_err());
        assert!(ensemble_average(&[vec![1.5]]).is_err());
    }

    #[test]
    fn random_scores_are_seed_deterministic() {
        assert_eq!(random_scores(10, 7), random_scores(10, 7));
        assert_ne!(random_scores(10, 7), random_scores(10, 8));
        assert!(random_scores(100, 1).iter().all(|s| (0.0..1.0).contains(s)));
    }

    #[test]
    fn degenerate_labels_give_constant_model() {
        let x = Matrix::from_columns(vec!["f".into()], vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let model = fit_boosted(&x, &[0, 0, 0], None, &BoostHParams::default()).unwrap();
        assert_eq!(model.family(), "constant");
        let scores = model.predict_matrix(&x).unwrap();
        assert!(scores.iter().all(|&s| s == scores[0]));
        assert!(scores[0] < 1e-6);
    }
}

//! Newton-boosted decision trees on logistic loss.
//!
//! Stagewise additive modeling: each round fits a regression tree to the
//! first/second-order statistics of the logistic loss at the current
//! margins (gradient `g = (p − y)·w`, hessian `h = p(1−p)·w`, where `w`
//! folds per-row weights and the positive-class weight together). Trees
//! are grown level-wise with exact greedy splits over pre-sorted columns:
//! one linear scan per (column, level) maintains running left-child sums
//! for every node in the level simultaneously, so a round costs
//! O(depth · columns · rows) after an O(columns · n log n) presort.
//!
//! Regularization follows the usual gradient-boosting conventions: `l2`
//! appears in both gain and leaf denominators, `l1` soft-thresholds the
//! leaf numerator, `min_split_loss` gates split admission, and
//! `min_child_weight` lower-bounds child hessian mass. Row and column
//! subsampling draw from per-round seeded streams, which makes a model a
//! bit-exact prefix of any longer run with the same seed.

use rand::seq::index::sample as index_sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::Matrix;
use crate::error::{Error, Result};
use crate::util::{logit, sigmoid, sub_rng};

/// Boosting hyperparameters. The tuning search draws each field from its
/// published range; direct construction accepts any validated value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostHParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Minimum hessian mass in each child for a split to be admissible.
    pub min_child_weight: f64,
    /// Extra multiplicative weight on positive rows.
    pub positive_class_weight: f64,
    /// Soft-threshold on leaf numerators.
    pub l1: f64,
    /// Additive term in gain/leaf denominators.
    pub l2: f64,
    /// Row fraction drawn (without replacement) per round.
    pub subsample: f64,
    /// Column fraction drawn (without replacement) per round.
    pub colsample: f64,
    /// Minimum gain for a split to be admitted (strict).
    pub min_split_loss: f64,
    pub seed: u64,
}

impl Default for BoostHParams {
    fn default() -> Self {
        BoostHParams {
            learning_rate: 0.1,
            n_estimators: 200,
            max_depth: 6,
            min_child_weight: 1.0,
            positive_class_weight: 1.0,
            l1: 0.0,
            l2: 1.0,
            subsample: 1.0,
            colsample: 1.0,
            min_split_loss: 0.0,
            seed: 0,
        }
    }
}

impl BoostHParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.learning_rate > 0.0 && self.learning_rate.is_finite(), "learning_rate > 0"),
            (self.n_estimators >= 1, "n_estimators >= 1"),
            (self.max_depth <= 32, "max_depth <= 32"),
            (self.min_child_weight >= 0.0, "min_child_weight >= 0"),
            (self.positive_class_weight > 0.0, "positive_class_weight > 0"),
            (self.l1 >= 0.0, "l1 >= 0"),
            (self.l2 >= 0.0, "l2 >= 0"),
            (self.subsample > 0.0 && self.subsample <= 1.0, "subsample in (0,1]"),
            (self.colsample > 0.0 && self.colsample <= 1.0, "colsample in (0,1]"),
            (self.min_split_loss >= 0.0, "min_split_loss >= 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::config(format!("boost hparams: {msg}")));
            }
        }
        Ok(())
    }
}

/// One regression tree stored as a flat node arena (root at index 0).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "node")]
enum Node {
    Leaf { value: f64 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

impl Tree {
    /// Margin contribution of one row.
    pub fn score_row(&self, x: &Matrix, row: usize) -> f64 {
        let mut id = 0usize;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    id = if x.value(row, *feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Feature indices used by splits (for importance-style summaries).
    pub fn split_features(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

/// Fitted boosted ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedModel {
    init_margin: f64,
    trees: Vec<Tree>,
    feature_names: Vec<String>,
    hp: BoostHParams,
}

impl BoostedModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn hparams(&self) -> &BoostHParams {
        &self.hp
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Raw additive margins (pre-sigmoid). Ranking by margins equals
    /// ranking by probabilities.
    pub fn predict_margin(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.names() != self.feature_names.as_slice() {
            return Err(Error::data(format!(
                "boosted model fitted on {} features but matrix has {}",
                self.feature_names.len(),
                x.n_cols()
            )));
        }
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|row| {
                self.init_margin + self.trees.iter().map(|t| t.score_row(x, row)).sum::<f64>()
            })
            .collect())
    }

    /// Probabilities in (0, 1).
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.predict_margin(x)?.into_iter().map(sigmoid).collect())
    }
}

/// Candidate split for one node.
#[derive(Debug, Clone, Copy)]
struct SplitCand {
    gain: f64,
    feature: u32,
    threshold: f64,
}

/// Running left-side accumulator while scanning one column.
#[derive(Debug, Clone, Copy, Default)]
struct ScanState {
    g_left: f64,
    h_left: f64,
    seen: usize,
    last_value: f64,
}

const NO_NODE: u32 = u32::MAX;

pub(super) fn fit(
    x: &Matrix,
    y: &[u8],
    row_weights: Option<&[f64]>,
    hp: &BoostHParams,
) -> Result<BoostedModel> {
    let n = x.n_rows();
    let d = x.n_cols();
    if d == 0 {
        return Err(Error::data("boost: matrix has no columns"));
    }

    let w: Vec<f64> = (0..n)
        .map(|i| {
            let base = row_weights.map_or(1.0, |rw| rw[i]);
            if y[i] == 1 {
                base * hp.positive_class_weight
            } else {
                base
            }
        })
        .collect();
    let w_total: f64 = w.iter().sum();
    if w_total <= 0.0 {
        return Err(Error::data("boost: total row weight is zero"));
    }
    let w_pos: f64 = w.iter().zip(y).filter(|(_, &yi)| yi == 1).map(|(wi, _)| wi).sum();
    let init_margin = logit(w_pos / w_total);

    // Global presort: for each column, row indices ascending by
    // (value, row) — the (value, row) key makes ordering total and the
    // whole fit deterministic.
    let sorted: Vec<Vec<u32>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let col = x.col(j);
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_unstable_by(|&a, &b| {
                col[a as usize]
                    .partial_cmp(&col[b as usize])
                    .expect("matrix values are finite")
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect();

    let mut margins = vec![init_margin; n];
    let mut trees = Vec::with_capacity(hp.n_estimators);

    for round in 0..hp.n_estimators {
        // Per-row Newton statistics at current margins.
        let mut g = vec![0.0f64; n];
        let mut h = vec![0.0f64; n];
        for i in 0..n {
            let p = sigmoid(margins[i]);
            g[i] = (p - f64::from(y[i])) * w[i];
            h[i] = p * (1.0 - p) * w[i];
        }

        // Per-round seeded row/column subsampling (streams independent of
        // round count, so shorter runs are prefixes of longer ones).
        let mut node_of = vec![0u32; n];
        if hp.subsample < 1.0 {
            let k = ((hp.subsample * n as f64).floor() as usize).max(1);
            let mut rng = sub_rng(hp.seed, 2 * round as u64 + 1);
            node_of = vec![NO_NODE; n];
            for i in index_sample(&mut rng, n, k) {
                node_of[i] = 0;
            }
        }
        let columns: Vec<usize> = if hp.colsample < 1.0 {
            let k = ((hp.colsample * d as f64).ceil() as usize).clamp(1, d);
            let mut rng = sub_rng(hp.seed, 2 * round as u64 + 2);
            let mut cols: Vec<usize> = index_sample(&mut rng, d, k).into_iter().collect();
            cols.sort_unstable();
            cols
        } else {
            (0..d).collect()
        };

        let tree = grow_tree(x, &sorted, &columns, &g, &h, &mut node_of, hp);
        // Margin update uses every row (sampling affects growth only).
        let deltas: Vec<f64> =
            (0..n).into_par_iter().map(|row| tree.score_row(x, row)).collect();
        for (m, delta) in margins.iter_mut().zip(deltas) {
            *m += delta;
        }
        trees.push(tree);
    }

    Ok(BoostedModel { init_margin, trees, feature_names: x.names().to_vec(), hp: *hp })
}

/// Grow one tree level-wise. `node_of` maps rows to their current node
/// (NO_NODE = excluded by subsampling or settled in a finished leaf).
fn grow_tree(
    x: &Matrix,
    sorted: &[Vec<u32>],
    columns: &[usize],
    g: &[f64],
    h: &[f64],
    node_of: &mut [u32],
    hp: &BoostHParams,
) -> Tree {
    let mut nodes: Vec<Node> = vec![Node::Leaf { value: 0.0 }];

    // (G, H) totals for the current level's nodes, ids [start, start+len).
    let mut start = 0u32;
    let mut level_stats: Vec<(f64, f64)> = vec![node_of.iter().enumerate().fold(
        (0.0, 0.0),
        |(gs, hs), (i, &nid)| {
            if nid == 0 {
                (gs + g[i], hs + h[i])
            } else {
                (gs, hs)
            }
        },
    )];

    for _depth in 0..hp.max_depth {
        if level_stats.is_empty() {
            break;
        }
        let n_active = level_stats.len();

        // Best split per node, scanning each column once. Columns are
        // evaluated in parallel; the reduction walks them in index order,
        // so ties resolve to the lowest column then lowest threshold.
        let per_column: Vec<Vec<Option<SplitCand>>> = columns
            .par_iter()
            .map(|&j| {
                let mut best: Vec<Option<SplitCand>> = vec![None; n_active];
                let mut state: Vec<ScanState> = vec![ScanState::default(); n_active];
                let col = x.col(j);
                for &r in &sorted[j] {
                    let nid = node_of[r as usize];
                    if nid < start || nid == NO_NODE {
                        continue;
                    }
                    let slot = (nid - start) as usize;
                    if slot >= n_active {
                        continue;
                    }
                    let v = col[r as usize];
                    let s = &mut state[slot];
                    if s.seen > 0 && v > s.last_value {
                        let (g_tot, h_tot) = level_stats[slot];
                        let g_r = g_tot - s.g_left;
                        let h_r = h_tot - s.h_left;
                        if s.h_left >= hp.min_child_weight && h_r >= hp.min_child_weight {
                            let gain = 0.5
                                * (s.g_left * s.g_left / (s.h_left + hp.l2)
                                    + g_r * g_r / (h_r + hp.l2)
                                    - g_tot * g_tot / (h_tot + hp.l2));
                            if best[slot].map_or(true, |b| gain > b.gain) {
                                best[slot] = Some(SplitCand {
                                    gain,
                                    feature: j as u32,
                                    threshold: 0.5 * (s.last_value + v),
                                });
                            }
                        }
                    }
                    s.g_left += g[r as usize];
                    s.h_left += h[r as usize];
                    s.seen += 1;
                    s.last_value = v;
                }
                best
            })
            .collect();

        let mut chosen: Vec<Option<SplitCand>> = vec![None; n_active];
        for col_best in &per_column {
            for (slot, cand) in col_best.iter().enumerate() {
                if let Some(c) = cand {
                    let better = match chosen[slot] {
                        None => true,
                        Some(prev) => {
                            c.gain > prev.gain
                                || (c.gain == prev.gain
                                    && (c.feature, c.threshold) < (prev.feature, prev.threshold))
                        }
                    };
                    if better {
                        chosen[slot] = Some(*c);
                    }
                }
            }
        }

        // Materialize splits/leaves for this level.
        let next_start = nodes.len() as u32;
        let mut split_of: Vec<Option<(SplitCand, u32, u32)>> = vec![None; n_active];
        let mut next_stats: Vec<(f64, f64)> = Vec::new();
        for slot in 0..n_active {
            let nid = start + slot as u32;
            let (g_tot, h_tot) = level_stats[slot];
            match chosen[slot] {
                Some(cand) if cand.gain > hp.min_split_loss => {
                    let left = nodes.len() as u32;
                    nodes.push(Node::Leaf { value: 0.0 });
                    let right = nodes.len() as u32;
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[nid as usize] = Node::Split {
                        feature: cand.feature,
                        threshold: cand.threshold,
                        left,
                        right,
                    };
                    split_of[slot] = Some((cand, left, right));
                    next_stats.push((0.0, 0.0));
                    next_stats.push((0.0, 0.0));
                }
                _ => {
                    nodes[nid as usize] = Node::Leaf { value: leaf_value(g_tot, h_tot, hp) };
                }
            }
        }
        if next_stats.is_empty() {
            return Tree { nodes };
        }

        // Route rows of split nodes to their children and accumulate
        // child statistics.
        for i in 0..node_of.len() {
            let nid = node_of[i];
            if nid < start || nid == NO_NODE {
                continue;
            }
            let slot = (nid - start) as usize;
            if slot >= n_active {
                continue;
            }
            if let Some((cand, left, right)) = split_of[slot] {
                let child = if x.value(i, cand.feature as usize) <= cand.threshold {
                    left
                } else {
                    right
                };
                node_of[i] = child;
                let cs = &mut next_stats[(child - next_start) as usize];
                cs.0 += g[i];
                cs.1 += h[i];
            }
        }
        start = next_start;
        level_stats = next_stats;
    }

    // Depth budget exhausted: finalize the remaining level as leaves.
    for (slot, &(g_tot, h_tot)) in level_stats.iter().enumerate() {
        nodes[start as usize + slot] = Node::Leaf { value: leaf_value(g_tot, h_tot, hp) };
    }
    Tree { nodes }
}

/// Newton leaf: −lr · soft_l1(G) / (H + l2), with a zero guard for empty
/// hessian mass under l2 = 0.
fn leaf_value(g: f64, h: f64, hp: &BoostHParams) -> f64 {
    let numer = g.signum() * (g.abs() - hp.l1).max(0.0);
    let denom = h + hp.l2;
    if denom <= f64::EPSILON {
        0.0
    } else {
        -hp.learning_rate * numer / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fit_boosted, Model};
    use rand::Rng;

    /// Two informative numeric features plus one noise column; logits are
    /// linear in the features.
    fn toy_data(n: usize, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = sub_rng(seed, 0x70_79);
        let f1: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let f2: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<u8> = (0..n)
            .map(|i| {
                let p = sigmoid(-2.5 + 2.0 * f1[i] + 1.2 * f2[i]);
                u8::from(rng.gen::<f64>() < p)
            })
            .collect();
        let x = Matrix::from_columns(
            vec!["f1".into(), "f2".into(), "noise".into()],
            vec![f1, f2, noise],
        )
        .unwrap();
        (x, y)
    }

    fn logloss(scores: &[f64], y: &[u8]) -> f64 {
        scores
            .iter()
            .zip(y)
            .map(|(&p, &yi)| {
                let p = p.clamp(1e-12, 1.0 - 1e-12);
                if yi == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / y.len() as f64
    }

    #[test]
    fn depth_zero_single_round_stays_at_base_rate() {
        // Analytically: at the base-rate init, sum of gradients is zero,
        // so the single depth-0 leaf contributes nothing.
        let x = Matrix::from_columns(
            vec!["f".into()],
            vec![(0..8).map(|i| i as f64).collect()],
        )
        .unwrap();
        let y = [1, 0, 0, 0, 1, 0, 0, 0]; // prevalence 0.25
        let hp = BoostHParams {
            learning_rate: 1.0,
            n_estimators: 1,
            max_depth: 0,
            l1: 0.0,
            l2: 0.0,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let model = fit_boosted(&x, &y, None, &hp).unwrap();
        let scores = model.predict_matrix(&x).unwrap();
        for s in scores {
            assert!((s - 0.25).abs() < 1e-9, "score {s}");
        }
    }

    #[test]
    fn same_seed_reproduces_bit_exactly() {
        let (x, y) = toy_data(400, 5);
        let hp = BoostHParams {
            n_estimators: 12,
            max_depth: 3,
            subsample: 0.7,
            colsample: 0.7,
            seed: 42,
            ..Default::default()
        };
        let a = fit_boosted(&x, &y, None, &hp).unwrap();
        let b = fit_boosted(&x, &y, None, &hp).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = fit_boosted(&x, &y, None, &BoostHParams { seed: 43, ..hp }).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn training_logloss_non_increasing_over_rounds() {
        let (x, y) = toy_data(600, 9);
        let mut last = f64::INFINITY;
        for t in [1, 3, 6, 12, 24] {
            let hp = BoostHParams {
                n_estimators: t,
                max_depth: 3,
                learning_rate: 0.1,
                ..Default::default()
            };
            let model = fit_boosted(&x, &y, None, &hp).unwrap();
            let loss = logloss(&model.predict_matrix(&x).unwrap(), &y);
            assert!(loss <= last + 1e-9, "loss rose from {last} to {loss} at {t} trees");
            last = loss;
        }
    }

    #[test]
    fn shorter_run_is_prefix_of_longer_run() {
        let (x, y) = toy_data(300, 2);
        let hp = BoostHParams {
            n_estimators: 10,
            max_depth: 3,
            subsample: 0.8,
            colsample: 0.8,
            seed: 7,
            ..Default::default()
        };
        let long = fit_boosted(&x, &y, None, &hp).unwrap();
        let short =
            fit_boosted(&x, &y, None, &BoostHParams { n_estimators: 4, ..hp }).unwrap();
        let (Model::Boosted(long), Model::Boosted(short)) = (&long, &short) else {
            panic!("expected boosted models");
        };
        for t in 0..4 {
            assert_eq!(
                serde_json::to_string(&long.trees()[t]).unwrap(),
                serde_json::to_string(&short.trees()[t]).unwrap()
            );
        }
    }

    #[test]
    fn learns_signal_and_ignores_noise() {
        let (x, y) = toy_data(2500, 13);
        let hp = BoostHParams { n_estimators: 40, max_depth: 3, ..Default::default() };
        let model = fit_boosted(&x, &y, None, &hp).unwrap();
        let scores = model.predict_matrix(&x).unwrap();
        let auc = crate::metric::auc_roc(&scores, &y).unwrap();
        assert!(auc > 0.70, "training AUC {auc}");

        // Split usage concentrates on informative features.
        let Model::Boosted(m) = &model else { panic!() };
        let mut counts = [0usize; 3];
        for tree in m.trees() {
            for f in tree.split_features() {
                counts[f as usize] += 1;
            }
        }
        assert!(counts[0] > counts[2], "f1 {counts:?}");
    }

    #[test]
    fn scores_strictly_inside_unit_interval_and_rank_invariant() {
        let (x, y) = toy_data(300, 3);
        let hp = BoostHParams { n_estimators: 10, max_depth: 2, ..Default::default() };
        let model = fit_boosted(&x, &y, None, &hp).unwrap();
        let Model::Boosted(m) = &model else { panic!() };
        let probs = m.predict(&x).unwrap();
        assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));

        // Any strictly increasing transform of margins preserves ranking.
        let margins = m.predict_margin(&x).unwrap();
        let transformed: Vec<f64> = margins.iter().map(|&v| v.powi(3) + v).collect();
        assert_eq!(
            crate::util::argsort_desc(&probs),
            crate::util::argsort_desc(&transformed)
        );
    }

    /// Rare-positive variant of [`toy_data`] (~7% prevalence), the regime
    /// where positive upweighting matters.
    fn rare_data(n: usize, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = sub_rng(seed, 0x72_61);
        let f1: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let f2: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<u8> = (0..n)
            .map(|i| {
                let p = sigmoid(-4.2 + 2.0 * f1[i] + 1.4 * f2[i]);
                u8::from(rng.gen::<f64>() < p)
            })
            .collect();
        let x =
            Matrix::from_columns(vec!["f1".into(), "f2".into()], vec![f1, f2]).unwrap();
        (x, y)
    }

    #[test]
    fn positive_class_weight_recovers_more_positives_on_average() {
        // Weak statistical monotonicity over 10 seeds in the rare-positive
        // regime: mean training positives inside the top-20% does not drop
        // when upweighting.
        let mut hits = [0.0f64; 2];
        for seed in 0..10u64 {
            let (x, y) = rare_data(1200, 100 + seed);
            for (slot, pcw) in [(0usize, 1.0f64), (1, 12.0)] {
                let hp = BoostHParams {
                    n_estimators: 30,
                    max_depth: 3,
                    positive_class_weight: pcw,
                    seed,
                    ..Default::default()
                };
                let model = fit_boosted(&x, &y, None, &hp).unwrap();
                let scores = model.predict_matrix(&x).unwrap();
                let order = crate::util::argsort_desc(&scores);
                let top = y.len() / 5;
                hits[slot] +=
                    order[..top].iter().filter(|&&r| y[r] == 1).count() as f64 / 10.0;
            }
        }
        assert!(
            hits[1] >= hits[0] - 0.5,
            "weighted {h1} vs unweighted {h0}",
            h1 = hits[1],
            h0 = hits[0]
        );
    }

    #[test]
    fn row_weights_equal_duplication_on_dyadic_instance() {
        // 8 rows with power-of-two weights and weighted prevalence exactly
        // 1/2 versus the physically duplicated 16-row dataset. The init
        // margin is 0, so round-one probabilities are exactly 0.5 and
        // every gradient/hessian partial sum is a short dyadic rational:
        // the two fits must agree bit-for-bit.
        let values = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let y = vec![1, 1, 1, 1, 0, 0, 0, 0];
        let weights = vec![1.0, 2.0, 4.0, 1.0, 2.0, 4.0, 1.0, 1.0]; // Σw=16, Σwy=8

        let mut dup_vals = Vec::new();
        let mut dup_y = Vec::new();
        for i in 0..values.len() {
            for _ in 0..weights[i] as usize {
                dup_vals.push(values[i]);
                dup_y.push(y[i]);
            }
        }
        let hp = BoostHParams {
            n_estimators: 1,
            max_depth: 2,
            learning_rate: 0.5,
            l2: 1.0,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let xa = Matrix::from_columns(vec!["v".into()], vec![values.clone()]).unwrap();
        let xb = Matrix::from_columns(vec!["v".into()], vec![dup_vals]).unwrap();
        let ma = fit_boosted(&xa, &y, Some(&weights), &hp).unwrap();
        let mb = fit_boosted(&xb, &dup_y, None, &hp).unwrap();
        let sa = ma.predict_matrix(&xa).unwrap();
        let sb = mb.predict_matrix(&xa).unwrap();
        assert_eq!(sa, sb, "weighted fit must equal duplicated fit exactly");
    }
}

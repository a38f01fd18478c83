//! Single classification tree (CART-style, Gini impurity).
//!
//! Exact greedy growth: every node evaluates every (column, boundary
//! between distinct values) pair and keeps the split with the largest
//! Gini decrease, ties resolved to the lowest column index then lowest
//! threshold. Leaves score the positive fraction of their training rows,
//! so predictions are probabilities in [0, 1]. The fit is deterministic —
//! no randomness enters anywhere.

use serde::{Deserialize, Serialize};

use crate::encode::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum training rows in each child.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 6, min_leaf: 20 }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth > 32 {
            return Err(Error::config("tree params: max_depth <= 32"));
        }
        if self.min_leaf == 0 {
            return Err(Error::config("tree params: min_leaf >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "node")]
enum Node {
    Leaf { value: f64, rows: usize },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

/// Fitted classification tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<Node>,
    feature_names: Vec<String>,
    params: TreeParams,
}

impl TreeModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.names() != self.feature_names.as_slice() {
            return Err(Error::data(format!(
                "tree fitted on {} features but matrix has {}",
                self.feature_names.len(),
                x.n_cols()
            )));
        }
        Ok((0..x.n_rows()).map(|row| self.score_row(x, row)).collect())
    }

    fn score_row(&self, x: &Matrix, row: usize) -> f64 {
        let mut id = 0usize;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value, .. } => return *value,
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

    /// (value, training rows) for each leaf, in arena order.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { value, rows } => Some((*value, *rows)),
                Node::Split { .. } => None,
            })
            .collect()
    }
}

/// Weighted Gini impurity mass of a child: 2·pos·neg/n. Summing over the
/// two children and dividing by the parent size gives the split impurity.
fn gini_mass(pos: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    2.0 * pos * (n - pos) / n
}

pub(super) fn fit(x: &Matrix, y: &[u8], params: &TreeParams) -> Result<TreeModel> {
    if x.n_cols() == 0 {
        return Err(Error::data("tree: matrix has no columns"));
    }
    let mut nodes = Vec::new();
    let indices: Vec<u32> = (0..x.n_rows() as u32).collect();
    grow(x, y, params, indices, 0, &mut nodes);
    Ok(TreeModel { nodes, feature_names: x.names().to_vec(), params: *params })
}

/// Recursively grow the subtree for `indices`; returns its arena id.
fn grow(
    x: &Matrix,
    y: &[u8],
    params: &TreeParams,
    indices: Vec<u32>,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let n = indices.len();
    let pos = indices.iter().filter(|&&i| y[i as usize] == 1).count();
    let id = nodes.len() as u32;

    let make_leaf = |nodes: &mut Vec<Node>| {
        nodes.push(Node::Leaf { value: pos as f64 / n as f64, rows: n });
    };

    if depth >= params.max_depth || n < 2 * params.min_leaf || pos == 0 || pos == n {
        make_leaf(nodes);
        return id;
    }

    // Exact greedy search over all columns. Strict `<` on child impurity
    // with ascending (column, threshold) iteration makes ties land on the
    // lowest column then lowest threshold.
    let parent_mass = gini_mass(pos as f64, n as f64);
    let mut best: Option<(f64, usize, f64)> = None; // (child mass, col, thr)
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
    for j in 0..x.n_cols() {
        let col = x.col(j);
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (col[i as usize], y[i as usize])));
        pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        let mut left_n = 0usize;
        let mut left_pos = 0usize;
        for w in 0..n - 1 {
            left_n += 1;
            left_pos += usize::from(pairs[w].1);
            if pairs[w + 1].0 <= pairs[w].0 {
                continue; // no boundary between equal values
            }
            if left_n < params.min_leaf || n - left_n < params.min_leaf {
                continue;
            }
            let mass = gini_mass(left_pos as f64, left_n as f64)
                + gini_mass((pos - left_pos) as f64, (n - left_n) as f64);
            if best.map_or(true, |(b, _, _)| mass < b) {
                best = Some((mass, j, 0.5 * (pairs[w].0 + pairs[w + 1].0)));
            }
        }
    }

    let Some((mass, feature, threshold)) = best else {
        make_leaf(nodes);
        return id;
    };
    if mass >= parent_mass - 1e-12 {
        make_leaf(nodes); // no impurity decrease
        return id;
    }

    let col = x.col(feature);
    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
        indices.iter().partition(|&&i| col[i as usize] <= threshold);

    nodes.push(Node::Leaf { value: 0.0, rows: 0 }); // placeholder
    let left = grow(x, y, params, left_rows, depth + 1, nodes);
    let right = grow(x, y, params, right_rows, depth + 1, nodes);
    nodes[id as usize] = Node::Split { feature: feature as u32, threshold, left, right };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fit_tree, Model};

    fn matrix(cols: Vec<(&str, Vec<f64>)>) -> Matrix {
        let names = cols.iter().map(|(n, _)| (*n).to_string()).collect();
        let data = cols.into_iter().map(|(_, c)| c).collect();
        Matrix::from_columns(names, data).unwrap()
    }

    #[test]
    fn separable_data_yields_pure_leaves() {
        let x = matrix(vec![("f", vec![1.0, 2.0, 3.0, 4.0])]);
        let y = [0, 0, 1, 1];
        let params = TreeParams { max_depth: 3, min_leaf: 1 };
        let model = fit_tree(&x, &y, &params).unwrap();
        let scores = model.predict_matrix(&x).unwrap();
        assert_eq!(scores, vec![0.0, 0.0, 1.0, 1.0]);
        let Model::Tree(t) = &model else { panic!() };
        assert_eq!(t.n_leaves(), 2, "one split at the class boundary suffices");
    }

    #[test]
    fn depth_zero_scores_prevalence() {
        let x = matrix(vec![("f", vec![1.0, 2.0, 3.0, 4.0])]);
        let y = [0, 1, 1, 1];
        let model = fit_tree(&x, &y, &TreeParams { max_depth: 0, min_leaf: 1 }).unwrap();
        assert_eq!(model.predict_matrix(&x).unwrap(), vec![0.75; 4]);
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let x = matrix(vec![("f", vec![1.0, 2.0, 3.0, 4.0])]);
        let y = [0, 0, 1, 1];
        // Any split leaves one child below 3 rows, so the root stays a leaf.
        let model = fit_tree(&x, &y, &TreeParams { max_depth: 4, min_leaf: 3 }).unwrap();
        let Model::Tree(t) = &model else { panic!() };
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(model.predict_matrix(&x).unwrap(), vec![0.5; 4]);

        // And every leaf of a deeper fit respects the floor.
        let y2 = [0, 1, 0, 1];
        let model = fit_tree(&x, &y2, &TreeParams { max_depth: 4, min_leaf: 2 }).unwrap();
        let Model::Tree(t) = &model else { panic!() };
        assert!(t.leaves().iter().all(|&(_, rows)| rows >= 2));
    }

    #[test]
    fn prefers_informative_column_on_gain_and_lowest_on_tie() {
        // Column `b` separates perfectly; `a` does not.
        let x = matrix(vec![
            ("a", vec![1.0, 2.0, 1.0, 2.0]),
            ("b", vec![0.0, 0.0, 1.0, 1.0]),
        ]);
        let y = [0, 0, 1, 1];
        let model = fit_tree(&x, &y, &TreeParams { max_depth: 1, min_leaf: 1 }).unwrap();
        let Model::Tree(t) = &model else { panic!() };
        match &t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 1);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }

        // Duplicate the separating column: the tie goes to the earlier one.
        let x2 = matrix(vec![
            ("b1", vec![0.0, 0.0, 1.0, 1.0]),
            ("b2", vec![0.0, 0.0, 1.0, 1.0]),
        ]);
        let model = fit_tree(&x2, &y, &TreeParams { max_depth: 1, min_leaf: 1 }).unwrap();
        let Model::Tree(t) = &model else { panic!() };
        match &t.nodes[0] {
            Node::Split { feature, .. } => assert_eq!(*feature, 0),
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn round_trips_through_json() {
        let x = matrix(vec![("f", vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])]);
        let y = [0, 0, 1, 0, 1, 1];
        let model = fit_tree(&x, &y, &TreeParams { max_depth: 3, min_leaf: 1 }).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: Model = serde_json::from_str(&json).unwrap();
        assert_eq!(
            model.predict_matrix(&x).unwrap(),
            back.predict_matrix(&x).unwrap()
        );
    }
}

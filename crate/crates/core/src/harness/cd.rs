//! Critical-difference analysis over paired bootstrap replicates.
//!
//! Every replicate is a block: methods are ranked within it (rank 1 =
//! best metric value, average ranks on ties) and the Friedman chi-square
//! tests whether average ranks differ at all. Only if that omnibus test
//! rejects at α = 0.05 are pairwise two-sided Wilcoxon signed-rank tests
//! run on replicate differences, with Holm's step-down correction across
//! the pairs. Cliques — maximal sets of methods with no significant
//! pairwise difference — are what a critical-difference diagram draws as
//! connecting bars; they are computed greedily over the rank ordering.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::harness::BootstrapSet;

pub const ALPHA: f64 = 0.05;

/// One pairwise post-hoc comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub p_raw: f64,
    pub p_holm: f64,
    pub significant: bool,
}

/// Outcome of the Friedman/Wilcoxon critical-difference analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CDResult {
    /// Methods in input order.
    pub methods: Vec<String>,
    /// Average rank per method (aligned with `methods`), in [1, k].
    pub avg_ranks: Vec<f64>,
    pub statistic: f64,
    pub p_value: f64,
    /// Whether the Friedman omnibus test rejected at α = 0.05.
    pub rejected: bool,
    /// Pairwise Wilcoxon tests (empty when the omnibus test did not
    /// reject — no post-hoc is run then).
    pub pairwise: Vec<PairwiseTest>,
    /// Maximal groups of mutually non-distinguishable methods, each
    /// listed best-rank first. Methods may appear in several cliques.
    pub cliques: Vec<Vec<String>>,
}

/// Rank `values` descending (rank 1 = largest) with average ranks on ties.
fn rank_desc(values: &[f64]) -> Vec<f64> {
    let k = values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite metric"));
    let mut ranks = vec![0.0; k];
    let mut i = 0;
    while i < k {
        let mut j = i;
        while j + 1 < k && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank p-value (normal approximation with tie
/// correction; zero differences dropped).
fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> f64 {
    let mut diffs: Vec<f64> =
        a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let nr = diffs.len();
    if nr == 0 {
        return 1.0;
    }
    diffs.sort_by(|x, y| x.abs().partial_cmp(&y.abs()).expect("finite differences"));
    let mut w_plus = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < nr {
        let mut j = i;
        while j + 1 < nr && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += (t.powi(3) - t) / 48.0;
        for &d in &diffs[i..=j] {
            if d > 0.0 {
                w_plus += avg_rank;
            }
        }
        i = j + 1;
    }
    let nf = nr as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0)
}

/// Holm step-down adjustment; returns p-values aligned with the input.
fn holm_adjust(raw: &[f64]) -> Vec<f64> {
    let m = raw.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw[a].partial_cmp(&raw[b]).expect("finite p-values"));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (i, &idx) in order.iter().enumerate() {
        running = running.max(((m - i) as f64 * raw[idx]).min(1.0));
        adjusted[idx] = running;
    }
    adjusted
}

pub fn friedman_cd(set: &BootstrapSet) -> Result<CDResult> {
    let k = set.methods().len();
    let b = set.n_replicates();
    if k < 2 {
        return Err(Error::config("cd analysis needs >= 2 methods"));
    }
    if b < 10 {
        return Err(Error::config(format!("cd analysis needs >= 10 replicates, got {b}")));
    }

    // Average rank per method over all blocks.
    let mut rank_sums = vec![0.0; k];
    let mut block = vec![0.0; k];
    for rep in 0..b {
        for (m, sum) in block.iter_mut().enumerate() {
            *sum = set.replicates(m)[rep];
        }
        for (m, r) in rank_desc(&block).into_iter().enumerate() {
            rank_sums[m] += r;
        }
    }
    let avg_ranks: Vec<f64> = rank_sums.iter().map(|s| s / b as f64).collect();

    let kf = k as f64;
    let bf = b as f64;
    let statistic = 12.0 * bf / (kf * (kf + 1.0))
        * avg_ranks.iter().map(|r| (r - (kf + 1.0) / 2.0).powi(2)).sum::<f64>();
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::internal(e.to_string()))?;
    let p_value = if statistic <= 0.0 { 1.0 } else { 1.0 - chi.cdf(statistic) };
    let rejected = p_value < ALPHA;

    // Post-hoc pairwise tests only after the omnibus rejection.
    let mut pairwise = Vec::new();
    if rejected {
        let mut pairs = Vec::new();
        let mut raw = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                pairs.push((i, j));
                raw.push(wilcoxon_signed_rank(set.replicates(i), set.replicates(j)));
            }
        }
        let holm = holm_adjust(&raw);
        for (((i, j), p_raw), p_holm) in pairs.into_iter().zip(raw).zip(holm) {
            pairwise.push(PairwiseTest {
                a: set.methods()[i].clone(),
                b: set.methods()[j].clone(),
                p_raw,
                p_holm,
                significant: p_holm <= ALPHA,
            });
        }
    }

    // Significance lookup in input indices.
    let significant = |a: usize, b: usize| {
        pairwise.iter().any(|t| {
            t.significant
                && ((t.a == set.methods()[a] && t.b == set.methods()[b])
                    || (t.a == set.methods()[b] && t.b == set.methods()[a]))
        })
    };

    // Greedy maximal windows over the rank ordering: a clique is the
    // longest run of rank-adjacent methods with no significant pair.
    let mut by_rank: Vec<usize> = (0..k).collect();
    by_rank.sort_by(|&a, &b| {
        avg_ranks[a].partial_cmp(&avg_ranks[b]).expect("finite ranks").then(a.cmp(&b))
    });
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for start in 0..k {
        let mut end = start;
        'grow: while end + 1 < k {
            for x in start..=end {
                if significant(by_rank[x], by_rank[end + 1]) {
                    break 'grow;
                }
            }
            end += 1;
        }
        let window: Vec<usize> = (start..=end).collect();
        if cliques.last().map_or(true, |prev| *prev.last().unwrap() < end) {
            cliques.push(window);
        }
    }
    let cliques = cliques
        .into_iter()
        .map(|w| w.into_iter().map(|pos| set.methods()[by_rank[pos]].clone()).collect())
        .collect();

    Ok(CDResult {
        methods: set.methods().to_vec(),
        avg_ranks,
        statistic,
        p_value,
        rejected,
        pairwise,
        cliques,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::bootstrap_metric;
    use crate::metric::recall_at_k;
    use crate::model::random_scores;

    fn make_set(methods: Vec<(&str, Vec<f64>)>) -> BootstrapSet {
        BootstrapSet::from_replicates(
            methods.iter().map(|(n, _)| (*n).to_string()).collect(),
            methods.into_iter().map(|(_, v)| v).collect(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn identical_methods_single_clique() {
        let reps: Vec<f64> = (0..40).map(|i| 0.3 + (i % 7) as f64 * 0.01).collect();
        let set = make_set(vec![("a", reps.clone()), ("b", reps.clone()), ("c", reps)]);
        let cd = friedman_cd(&set).unwrap();
        assert_eq!(cd.statistic, 0.0);
        assert!(!cd.rejected);
        assert!(cd.pairwise.is_empty());
        assert_eq!(cd.cliques, vec![vec!["a", "b", "c"]]);
        assert!(cd.avg_ranks.iter().all(|&r| (r - 2.0).abs() < 1e-12));
    }

    #[test]
    fn strict_dominance_is_significant() {
        let base: Vec<f64> = (0..60).map(|i| 0.2 + (i % 11) as f64 * 0.01).collect();
        let better: Vec<f64> = base.iter().map(|v| v + 0.1).collect();
        let set = make_set(vec![("worse", base), ("better", better)]);
        let cd = friedman_cd(&set).unwrap();
        assert!(cd.rejected, "p {}", cd.p_value);
        assert_eq!(cd.avg_ranks, vec![2.0, 1.0]);
        assert_eq!(cd.pairwise.len(), 1);
        assert!(cd.pairwise[0].significant);
        assert_eq!(cd.cliques, vec![vec!["better"], vec!["worse"]]);
    }

    #[test]
    fn hand_dataset_matches_direct_rank_arithmetic() {
        // 3 methods, 12 replicates; compute the Friedman statistic
        // independently from first principles.
        let a: Vec<f64> = (0..12).map(|i| (i as f64 * 17.0 % 5.0) + 1.0).collect();
        let b: Vec<f64> = (0..12).map(|i| (i as f64 * 13.0 % 7.0) + 0.5).collect();
        let c: Vec<f64> = (0..12).map(|i| (i as f64 * 11.0 % 3.0) + 2.0).collect();
        let set = make_set(vec![("a", a.clone()), ("b", b.clone()), ("c", c.clone())]);
        let cd = friedman_cd(&set).unwrap();

        // Independent computation with per-block insertion ranking.
        let mut sums = [0.0f64; 3];
        for i in 0..12 {
            let vals = [a[i], b[i], c[i]];
            for m in 0..3 {
                let higher = vals.iter().filter(|&&v| v > vals[m]).count() as f64;
                let equal = vals.iter().filter(|&&v| v == vals[m]).count() as f64;
                sums[m] += higher + (equal + 1.0) / 2.0;
            }
        }
        let expect_ranks: Vec<f64> = sums.iter().map(|s| s / 12.0).collect();
        for (got, want) in cd.avg_ranks.iter().zip(&expect_ranks) {
            assert!((got - want).abs() < 1e-12);
        }
        let expect_stat = 12.0 * 12.0 / (3.0 * 4.0)
            * expect_ranks.iter().map(|r| (r - 2.0).powi(2)).sum::<f64>();
        assert!((cd.statistic - expect_stat).abs() < 1e-12);
    }

    #[test]
    fn statistic_invariant_under_constant_shift() {
        let a: Vec<f64> = (0..30).map(|i| (i as f64).sin().abs()).collect();
        let b: Vec<f64> = (0..30).map(|i| (i as f64).cos().abs()).collect();
        let cd1 = friedman_cd(&make_set(vec![("a", a.clone()), ("b", b.clone())])).unwrap();
        let shift = |v: &[f64]| v.iter().map(|x| x + 0.37).collect::<Vec<_>>();
        let cd2 = friedman_cd(&make_set(vec![("a", shift(&a)), ("b", shift(&b))])).unwrap();
        assert_eq!(cd1.statistic, cd2.statistic);
        assert_eq!(cd1.avg_ranks, cd2.avg_ranks);
    }

    #[test]
    fn holm_adjustment_is_monotone() {
        let raw = [0.001, 0.04, 0.012, 0.3, 0.02];
        let adj = holm_adjust(&raw);
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&x, &y| raw[x].partial_cmp(&raw[y]).unwrap());
        let sorted_adj: Vec<f64> = order.iter().map(|&i| adj[i]).collect();
        assert!(sorted_adj.windows(2).all(|w| w[0] <= w[1]), "{sorted_adj:?}");
        assert!(adj.iter().all(|&p| (0.0..=1.0).contains(&p)));
        // First (smallest) raw p is multiplied by the full pair count.
        assert!((adj[0] - 0.005).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_sanity() {
        // Symmetric differences around zero → not significant.
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..50).map(|i| i as f64 + if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let p = wilcoxon_signed_rank(&a, &b);
        assert!(p > 0.5, "p {p}");
        // All-positive differences → tiny p.
        let c: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
        assert!(wilcoxon_signed_rank(&c, &a) < 1e-6);
        // Identical vectors → p = 1.
        assert_eq!(wilcoxon_signed_rank(&a, &a), 1.0);
    }

    #[test]
    fn works_on_real_bootstrap_output() {
        let n = 400;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 8 == 0)).collect();
        // A strong scorer (labels + noise) vs a random scorer.
        let strong: Vec<f64> = labels
            .iter()
            .zip(random_scores(n, 3))
            .map(|(&y, r)| f64::from(y) * 0.6 + 0.4 * r)
            .collect();
        let set = bootstrap_metric(
            &[("strong".into(), strong), ("random".into(), random_scores(n, 4))],
            &labels,
            120,
            7,
            &|s, y| recall_at_k(s, y, 20.0),
        )
        .unwrap();
        let cd = friedman_cd(&set).unwrap();
        assert!(cd.rejected);
        assert!(cd.avg_ranks[0] < cd.avg_ranks[1]);
        assert_eq!(cd.cliques.len(), 2);
    }
}

//! Paired bootstrap resampling of evaluation metrics.
//!
//! All methods are scored once on the evaluation rows; uncertainty comes
//! from resampling rows with replacement and re-evaluating the fixed
//! scores. Replicate `b` of every method uses the identical resample
//! (drawn from a stream seeded `seed ⊕ b`), so replicate-wise differences
//! between methods are meaningful — that pairing is what the rank tests
//! downstream rely on, and it is checkable via the per-replicate index
//! checksums.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::util::{mix64, str_salt, sub_rng};

/// Metric evaluated on (scores, labels) of one resample.
pub type MetricFn<'a> = &'a (dyn Fn(&[f64], &[u8]) -> Result<f64> + Sync);

/// Bootstrap replicates for several methods on one evaluation set.
#[derive(Debug, Clone)]
pub struct BootstrapSet {
    methods: Vec<String>,
    /// `replicates[m][b]` = metric of method `m` on resample `b`.
    replicates: Vec<Vec<f64>>,
    /// Order-sensitive checksum of resample `b`'s row indices.
    checksums: Vec<u64>,
    seed: u64,
}

impl BootstrapSet {
    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn n_replicates(&self) -> usize {
        self.checksums.len()
    }

    pub fn replicates(&self, method: usize) -> &[f64] {
        &self.replicates[method]
    }

    /// Per-replicate resample checksums; equality across two runs proves
    /// the same row multisets were drawn (the pairing invariant).
    pub fn checksums(&self) -> &[u64] {
        &self.checksums
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Assemble a set from precomputed replicate vectors (e.g. reloaded
    /// from disk). The caller asserts the vectors were paired; checksums
    /// are not reconstructable and are left empty of meaning (all zero).
    pub fn from_replicates(
        methods: Vec<String>,
        replicates: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        if methods.is_empty() || methods.len() != replicates.len() {
            return Err(Error::config("replicate matrix does not match method list"));
        }
        let b = replicates[0].len();
        if replicates.iter().any(|r| r.len() != b) {
            return Err(Error::data("methods have different replicate counts"));
        }
        if replicates.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite replicate value"));
        }
        Ok(BootstrapSet { methods, replicates, checksums: vec![0; b], seed })
    }
}

/// Evaluate `metric` on `b` paired resamples of the evaluation rows.
///
/// `scores_per_method` are parallel score vectors over the same rows as
/// `labels`. Errors from the metric (e.g. a resample without positives)
/// propagate.
pub fn bootstrap_metric(
    methods: &[(String, Vec<f64>)],
    labels: &[u8],
    b: usize,
    seed: u64,
    metric: MetricFn,
) -> Result<BootstrapSet> {
    if b < 2 {
        return Err(Error::config(format!("bootstrap: B = {b} < 2")));
    }
    if methods.is_empty() {
        return Err(Error::config("bootstrap: no methods"));
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::data("bootstrap: empty evaluation set"));
    }
    for (name, scores) in methods {
        if scores.len() != n {
            return Err(Error::data(format!(
                "bootstrap: method `{name}` has {} scores for {n} labels",
                scores.len()
            )));
        }
    }

    let salt = str_salt("bootstrap-resample");
    let per_replicate: Vec<(u64, Vec<f64>)> = (0..b as u64)
        .into_par_iter()
        .map(|rep| -> Result<(u64, Vec<f64>)> {
            let mut rng = sub_rng(seed ^ rep, salt);
            let mut checksum = 0xcbf2_9ce4_8422_2325u64;
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let row = rng.gen_range(0..n);
                rows.push(row);
                checksum = mix64(checksum ^ row as u64);
            }
            let r_labels: Vec<u8> = rows.iter().map(|&r| labels[r]).collect();
            let mut values = Vec::with_capacity(methods.len());
            let mut r_scores = Vec::with_capacity(n);
            for (_, scores) in methods {
                r_scores.clear();
                r_scores.extend(rows.iter().map(|&r| scores[r]));
                values.push(metric(&r_scores, &r_labels)?);
            }
            Ok((checksum, values))
        })
        .collect::<Result<_>>()?;

    let mut replicates = vec![Vec::with_capacity(b); methods.len()];
    let mut checksums = Vec::with_capacity(b);
    for (checksum, values) in per_replicate {
        checksums.push(checksum);
        for (m, v) in values.into_iter().enumerate() {
            replicates[m].push(v);
        }
    }
    Ok(BootstrapSet {
        methods: methods.iter().map(|(n, _)| n.clone()).collect(),
        replicates,
        checksums,
        seed,
    })
}

/// Empirical percentile interval of bootstrap replicates.
pub fn confidence_interval(replicates: &[f64], level: f64) -> Result<(f64, f64)> {
    if replicates.len() < 30 {
        return Err(Error::config(format!(
            "confidence interval needs >= 30 replicates, got {}",
            replicates.len()
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::config(format!("confidence level {level} outside (0,1)")));
    }
    let mut sorted = replicates.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite replicates"));
    let tail = (1.0 - level) / 2.0;
    Ok((
        crate::util::quantile_sorted(&sorted, tail),
        crate::util::quantile_sorted(&sorted, 1.0 - tail),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::recall_at_k;
    use crate::model::random_scores;

    fn recall20(scores: &[f64], labels: &[u8]) -> Result<f64> {
        recall_at_k(scores, labels, 20.0)
    }

    #[test]
    fn identical_methods_have_identical_replicates() {
        let labels: Vec<u8> = (0..200).map(|i| u8::from(i % 5 == 0)).collect();
        let scores = random_scores(200, 7);
        let set = bootstrap_metric(
            &[("a".into(), scores.clone()), ("b".into(), scores)],
            &labels,
            50,
            3,
            &recall20,
        )
        .unwrap();
        assert_eq!(set.replicates(0), set.replicates(1));
    }

    #[test]
    fn same_seed_reproduces_and_checksums_pair_runs() {
        let labels: Vec<u8> = (0..150).map(|i| u8::from(i % 4 == 0)).collect();
        let a = bootstrap_metric(
            &[("m".into(), random_scores(150, 1))],
            &labels,
            40,
            9,
            &recall20,
        )
        .unwrap();
        let b = bootstrap_metric(
            &[("m".into(), random_scores(150, 2))],
            &labels,
            40,
            9,
            &recall20,
        )
        .unwrap();
        // Different scores, same seed: resamples (and checksums) pair up.
        assert_eq!(a.checksums(), b.checksums());
        let c = bootstrap_metric(
            &[("m".into(), random_scores(150, 1))],
            &labels,
            40,
            10,
            &recall20,
        )
        .unwrap();
        assert_ne!(a.checksums(), c.checksums());

        let a2 = bootstrap_metric(
            &[("m".into(), random_scores(150, 1))],
            &labels,
            40,
            9,
            &recall20,
        )
        .unwrap();
        assert_eq!(a.replicates(0), a2.replicates(0));
    }

    #[test]
    fn random_scorer_recall_centers_on_k() {
        // Recall@20 of a random scorer is ~Binomial(pos, 0.2)/pos per
        // resample; the replicate mean must land within a few standard
        // errors of 0.20.
        let n = 2000;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 10 == 0)).collect(); // 200 positives
        let set = bootstrap_metric(
            &[("rand".into(), random_scores(n, 11))],
            &labels,
            300,
            5,
            &recall20,
        )
        .unwrap();
        let reps = set.replicates(0);
        let mean = reps.iter().sum::<f64>() / reps.len() as f64;
        // σ of a single replicate ≈ sqrt(0.2·0.8/200) ≈ 0.028; the Monte-
        // Carlo mean of 300 replicates is far tighter, but the scorer
        // itself is one fixed draw, so allow 3 single-replicate σ.
        assert!((mean - 0.20).abs() < 0.085, "mean recall {mean}");
    }

    #[test]
    fn interval_brackets_and_degenerates() {
        let constant = vec![0.4; 100];
        assert_eq!(confidence_interval(&constant, 0.95).unwrap(), (0.4, 0.4));

        // Uniform grid on [0,1]: the 95% interval is ≈ (0.025, 0.975).
        let uniform: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let (lo, hi) = confidence_interval(&uniform, 0.95).unwrap();
        assert!((lo - 0.025).abs() < 0.005, "lo {lo}");
        assert!((hi - 0.975).abs() < 0.005, "hi {hi}");

        assert!(confidence_interval(&[0.1; 10], 0.95).is_err());
    }

    #[test]
    fn rejects_bad_b_and_mismatched_scores() {
        let labels = vec![0, 1, 0, 1];
        let err =
            bootstrap_metric(&[("m".into(), vec![0.5; 4])], &labels, 1, 0, &recall20);
        assert!(err.is_err());
        let err =
            bootstrap_metric(&[("m".into(), vec![0.5; 3])], &labels, 10, 0, &recall20);
        assert!(err.is_err());
    }
}

//! Character trigram machinery for string-shape encoders.
//!
//! Strings are padded with boundary markers (`"##"` before, `"#"` after)
//! so that single characters and short tokens still yield a non-empty
//! trigram set, and so prefixes/suffixes are distinguishable from interior
//! substrings.

use std::collections::BTreeSet;

use crate::util::{mix64, str_salt};

/// Character-3-gram set of the padded form of `s` (`"abcd"` →
/// `{"##a", "#ab", "abc", "bcd", "cd#"}`). Never empty: the empty string
/// pads to `"###"`.
pub fn trigram_set(s: &str) -> BTreeSet<String> {
    let padded: Vec<char> = "##".chars().chain(s.chars()).chain("#".chars()).collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

/// Jaccard similarity of the padded trigram sets of two strings.
pub fn trigram_jaccard(a: &str, b: &str) -> f64 {
    let sa = trigram_set(a);
    let sb = trigram_set(b);
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

/// MinHash signature of `s` under one 64-bit mixing hasher per seed:
/// component j = min over trigrams g of `mix64(seed_j ^ hash(g))`, scaled
/// to [0, 1) by 2⁻⁶⁴.
pub fn minhash_signature(s: &str, seeds: &[u64]) -> Vec<f64> {
    let gram_hashes: Vec<u64> = trigram_set(s).iter().map(|g| str_salt(g)).collect();
    seeds
        .iter()
        .map(|&seed| {
            let min = gram_hashes.iter().map(|&g| mix64(seed ^ g)).min().expect("padded set");
            min as f64 * 2.0_f64.powi(-64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_produces_expected_grams() {
        let grams = trigram_set("abcd");
        let expect: BTreeSet<String> =
            ["##a", "#ab", "abc", "bcd", "cd#"].iter().map(|s| s.to_string()).collect();
        assert_eq!(grams, expect);
        assert_eq!(trigram_set("").len(), 1); // "###"
        assert_eq!(trigram_set("a").len(), 2); // "##a", "#a#"
    }

    #[test]
    fn jaccard_hand_cases() {
        assert_eq!(trigram_jaccard("abcd", "abcd"), 1.0);
        // Sets {##a,#ab,abc,bcd,cd#} vs {##a,#ab,abc,bce,ce#}:
        // 3 shared of 7 total.
        assert!((trigram_jaccard("abcd", "abce") - 3.0 / 7.0).abs() < 1e-12);
        assert_eq!(trigram_jaccard("xyz", "abc"), 0.0);
    }

    #[test]
    fn minhash_collision_rate_estimates_jaccard() {
        let seeds: Vec<u64> = (0..128).map(|j| mix64(0xfeed ^ j)).collect();
        for (a, b) in [("district-low-04", "district-low-11"), ("abcd", "abce"), ("tbu", "phi")] {
            let sa = minhash_signature(a, &seeds);
            let sb = minhash_signature(b, &seeds);
            let agree = sa.iter().zip(&sb).filter(|(x, y)| x == y).count() as f64 / 128.0;
            let j = trigram_jaccard(a, b);
            assert!(
                (agree - j).abs() < 0.15,
                "{a} vs {b}: collision rate {agree:.3}, jaccard {j:.3}"
            );
        }
    }

    #[test]
    fn minhash_is_deterministic_and_bounded() {
        let seeds = [1u64, 2, 3];
        let a = minhash_signature("karnataka", &seeds);
        let b = minhash_signature("karnataka", &seeds);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (0.0..1.0).contains(v)));
        // Singleton gram set under one hasher: exactly that gram's hash.
        let sig = minhash_signature("", &[7]);
        let expect = mix64(7 ^ str_salt("###")) as f64 * 2.0_f64.powi(-64);
        assert_eq!(sig, vec![expect]);
    }
}

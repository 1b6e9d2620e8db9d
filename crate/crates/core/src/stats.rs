//! Exact and rank statistics: binomial proportions test, sign test, Spearman
//! correlation, and word-similarity benchmark evaluation.
//!
//! The binomial test is exact (full outcome enumeration by count) up to
//! n = 1000 and switches to a normal approximation with continuity correction
//! above that. The two-sided p-value follows the "sum of outcome probabilities
//! no larger than the observed outcome's probability" convention; both
//! one-sided tails are carried alongside so callers can report them.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::embeddings::{cosine, EmbeddingError, EmbeddingSpace};

/// Largest n handled by the exact enumeration.
const EXACT_LIMIT: u64 = 1000;
/// Largest n whose binomial coefficients are all exactly representable in f64.
const EXACT_COEFF_LIMIT: u64 = 56;
/// Relative slack when comparing outcome probabilities to the observed one,
/// absorbing rounding in the log-space pmf route.
const TWO_SIDED_SLACK: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("successes {successes} exceed trial count {n}")]
    SuccessesExceedN { successes: u64, n: u64 },
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("null proportion must lie strictly between 0 and 1, got {p0}")]
    BadNullProportion { p0: f64 },
    #[error("input length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 observations, got {n}")]
    TooFewObservations { n: usize },
    #[error("{side} values are all equal; rank correlation undefined")]
    ConstantInput { side: &'static str },
    #[error("non-finite value in {side}")]
    NonFinite { side: &'static str },
    #[error("only {covered} of {total} benchmark pairs are in vocabulary; need at least 2")]
    CoverageTooLow { covered: usize, total: usize },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    BadPairLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: no benchmark pairs")]
    EmptyPairs { path: String },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// How the binomial p-values were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinomialMethod {
    Exact,
    NormalApprox,
}

/// Result of a one-sample binomial proportions test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialTest {
    pub successes: u64,
    pub n: u64,
    pub p0: f64,
    /// Observed proportion successes / n.
    pub estimate: f64,
    /// Two-sided p-value (the canonical result).
    pub p_value: f64,
    /// One-sided tail P(X >= successes).
    pub p_greater: f64,
    /// One-sided tail P(X <= successes).
    pub p_less: f64,
    pub method: BinomialMethod,
}

/// Exact two-sided binomial test of `successes` out of `n` against `p0`.
pub fn proportions_test(successes: u64, n: u64, p0: f64) -> Result<BinomialTest, StatsError> {
    if n == 0 {
        return Err(StatsError::ZeroTrials);
    }
    if successes > n {
        return Err(StatsError::SuccessesExceedN { successes, n });
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(StatsError::BadNullProportion { p0 });
    }
    let estimate = successes as f64 / n as f64;
    if n <= EXACT_LIMIT {
        let pmf = binomial_pmf_table(n, p0);
        let observed = pmf[successes as usize];
        let threshold = observed * (1.0 + TWO_SIDED_SLACK);
        let mut two_sided = 0.0;
        let mut greater = 0.0;
        let mut less = 0.0;
        for (k, &prob) in pmf.iter().enumerate() {
            if prob <= threshold {
                two_sided += prob;
            }
            if k as u64 >= successes {
                greater += prob;
            }
            if k as u64 <= successes {
                less += prob;
            }
        }
        Ok(BinomialTest {
            successes,
            n,
            p0,
            estimate,
            p_value: two_sided.clamp(0.0, 1.0),
            p_greater: greater.clamp(0.0, 1.0),
            p_less: less.clamp(0.0, 1.0),
            method: BinomialMethod::Exact,
        })
    } else {
        let normal = Normal::standard();
        let mean = n as f64 * p0;
        let sd = (n as f64 * p0 * (1.0 - p0)).sqrt();
        let k = successes as f64;
        let diff = (k - mean).abs();
        let p_value = if diff <= 0.5 {
            1.0
        } else {
            2.0 * (1.0 - normal.cdf((diff - 0.5) / sd))
        };
        let p_greater = 1.0 - normal.cdf((k - 0.5 - mean) / sd);
        let p_less = normal.cdf((k + 0.5 - mean) / sd);
        Ok(BinomialTest {
            successes,
            n,
            p0,
            estimate,
            p_value: p_value.clamp(0.0, 1.0),
            p_greater: p_greater.clamp(0.0, 1.0),
            p_less: p_less.clamp(0.0, 1.0),
            method: BinomialMethod::NormalApprox,
        })
    }
}

/// Exact two-sided sign test: binomial test at p0 = 1/2.
pub fn sign_test(successes: u64, n: u64) -> Result<BinomialTest, StatsError> {
    proportions_test(successes, n, 0.5)
}

/// Binomial pmf for k = 0..=n.
///
/// For n ≤ 56 every binomial coefficient fits the f64 mantissa, so the
/// coefficient recurrence C(n,k+1) = C(n,k)·(n−k)/(k+1) is exact and, at
/// p0 = 1/2, so is the whole pmf (power-of-two scaling). Larger n goes through
/// log-gamma to dodge overflow.
fn binomial_pmf_table(n: u64, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let len = (n + 1) as usize;
    let mut pmf = Vec::with_capacity(len);
    if n <= EXACT_COEFF_LIMIT {
        let mut coeff = 1.0f64;
        for k in 0..=n {
            pmf.push(coeff * p.powi(k as i32) * q.powi((n - k) as i32));
            if k < n {
                coeff = coeff * (n - k) as f64 / (k + 1) as f64;
            }
        }
    } else {
        let ln_n_fact = ln_factorial(n);
        let (ln_p, ln_q) = (p.ln(), q.ln());
        for k in 0..=n {
            let ln_pmf = ln_n_fact - ln_factorial(k) - ln_factorial(n - k)
                + k as f64 * ln_p
                + (n - k) as f64 * ln_q;
            pmf.push(ln_pmf.exp());
        }
    }
    pmf
}

fn ln_factorial(k: u64) -> f64 {
    statrs::function::gamma::ln_gamma(k as f64 + 1.0)
}

/// Spearman rank correlation: Pearson correlation of mid-ranks, averaging
/// ranks within tied groups.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFewObservations { n: xs.len() });
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite { side: "first" });
    }
    if ys.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite { side: "second" });
    }
    let rx = midranks(xs);
    let ry = midranks(ys);
    pearson(&rx, &ry)
}

/// Mid-ranks (1-based); tied values share the average of their rank range.
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finiteness checked by caller")
    });
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end+1 collapse to their average.
        let mid = (start + end) as f64 / 2.0 + 1.0;
        for &idx in &order[start..=end] {
            ranks[idx] = mid;
        }
        start = end + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantInput { side: "first" });
    }
    if syy == 0.0 {
        return Err(StatsError::ConstantInput { side: "second" });
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// A word-similarity benchmark: scored word pairs plus a display name.
#[derive(Debug, Clone)]
pub struct BenchmarkPairs {
    pub name: String,
    pub rows: Vec<(String, String, f64)>,
}

impl BenchmarkPairs {
    /// Build from rows, rejecting duplicate unordered pairs and non-finite
    /// scores.
    pub fn new(name: &str, rows: Vec<(String, String, f64)>) -> Result<Self, StatsError> {
        let mut seen = BTreeSet::new();
        for (line, (w1, w2, score)) in rows.iter().enumerate() {
            let line = line + 1;
            if w1.is_empty() || w2.is_empty() {
                return Err(StatsError::BadPairLine {
                    path: name.to_string(),
                    line,
                    reason: "empty word".to_string(),
                });
            }
            if !score.is_finite() {
                return Err(StatsError::BadPairLine {
                    path: name.to_string(),
                    line,
                    reason: format!("non-finite score {score}"),
                });
            }
            let key = if w1 <= w2 {
                (w1.clone(), w2.clone())
            } else {
                (w2.clone(), w1.clone())
            };
            if !seen.insert(key) {
                return Err(StatsError::BadPairLine {
                    path: name.to_string(),
                    line,
                    reason: format!("duplicate pair {w1:?}/{w2:?}"),
                });
            }
        }
        if rows.is_empty() {
            return Err(StatsError::EmptyPairs {
                path: name.to_string(),
            });
        }
        Ok(Self {
            name: name.to_string(),
            rows,
        })
    }

    /// Load a TSV file with lines `word1<TAB>word2<TAB>score`.
    pub fn load_tsv(path: &Path) -> Result<Self, StatsError> {
        let path_str = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| StatsError::Io {
            path: path_str.clone(),
            source,
        })?;
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 3 {
                return Err(StatsError::BadPairLine {
                    path: path_str.clone(),
                    line,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let score = fields[2]
                .trim()
                .parse::<f64>()
                .map_err(|_| StatsError::BadPairLine {
                    path: path_str.clone(),
                    line,
                    reason: format!("non-numeric score {:?}", fields[2]),
                })?;
            rows.push((fields[0].to_string(), fields[1].to_string(), score));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "benchmark".to_string());
        let mut pairs = Self::new(&name, rows)?;
        pairs.name = name;
        Ok(pairs)
    }
}

/// Benchmark evaluation: Spearman correlation between model cosines and human
/// scores over the covered pairs, with the coverage fraction alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkReport {
    pub rho: f64,
    pub covered: usize,
    pub total: usize,
}

impl BenchmarkReport {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }
}

/// Correlate a space's cosine similarities with human scores; pairs with
/// either word out of vocabulary are skipped and counted against coverage.
pub fn benchmark_eval(
    space: &EmbeddingSpace,
    pairs: &BenchmarkPairs,
) -> Result<BenchmarkReport, StatsError> {
    let mut cosines = Vec::new();
    let mut scores = Vec::new();
    for (w1, w2, score) in &pairs.rows {
        if let (Some(a), Some(b)) = (space.vector(w1), space.vector(w2)) {
            cosines.push(cosine(a, b)?);
            scores.push(*score);
        }
    }
    let covered = cosines.len();
    let total = pairs.rows.len();
    if covered < 2 {
        return Err(StatsError::CoverageTooLow { covered, total });
    }
    Ok(BenchmarkReport {
        rho: spearman(&cosines, &scores)?,
        covered,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Oracle: binomial pmf by the dynamic-programming recurrence over trial
    /// outcomes, a route independent of the coefficient/log-gamma table.
    fn dp_pmf(n: u64, p: f64) -> Vec<f64> {
        let mut probs = vec![1.0f64];
        for _ in 0..n {
            let mut next = vec![0.0; probs.len() + 1];
            for (k, &prob) in probs.iter().enumerate() {
                next[k] += prob * (1.0 - p);
                next[k + 1] += prob * p;
            }
            probs = next;
        }
        probs
    }

    /// Oracle: exact fair-coin pmf by aggregating all 2^n outcomes per count
    /// (Pascal's triangle in u128, so counts are exact integers).
    fn fair_coin_pmf(n: u64) -> Vec<f64> {
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![0u128; row.len() + 1];
            for (k, &c) in row.iter().enumerate() {
                next[k] += c;
                next[k + 1] += c;
            }
            row = next;
        }
        let denom = 2f64.powi(n as i32);
        row.iter().map(|&c| c as f64 / denom).collect()
    }

    fn two_sided_from_pmf(pmf: &[f64], k: usize) -> f64 {
        let threshold = pmf[k] * (1.0 + 1e-7);
        pmf.iter()
            .filter(|&&p| p <= threshold)
            .sum::<f64>()
            .min(1.0)
    }

    #[test]
    fn frozen_sign_test_values() {
        assert_eq!(sign_test(8, 10).unwrap().p_value, 0.109375);
        assert_eq!(sign_test(10, 10).unwrap().p_value, 0.001953125);
        assert_eq!(sign_test(5, 10).unwrap().p_value, 1.0);
    }

    #[test]
    fn proportions_test_matches_sign_test_at_half() {
        for (k, n) in [(0, 7), (3, 9), (8, 10), (10, 10)] {
            assert_eq!(
                proportions_test(k, n, 0.5).unwrap(),
                sign_test(k, n).unwrap()
            );
        }
    }

    #[test]
    fn symmetry_at_half() {
        for n in [1u64, 4, 10, 17, 33, 56, 57, 200] {
            for k in 0..=n {
                let a = proportions_test(k, n, 0.5).unwrap();
                let b = proportions_test(n - k, n, 0.5).unwrap();
                assert!(
                    (a.p_value - b.p_value).abs() < 1e-12,
                    "asymmetry at k={k} n={n}: {} vs {}",
                    a.p_value,
                    b.p_value
                );
            }
        }
    }

    #[test]
    fn exact_test_matches_fair_coin_enumeration_up_to_30() {
        for n in 1..=30u64 {
            let pmf = fair_coin_pmf(n);
            for k in 0..=n {
                let got = proportions_test(k, n, 0.5).unwrap();
                assert_eq!(
                    got.p_value,
                    two_sided_from_pmf(&pmf, k as usize),
                    "k={k} n={n}"
                );
                let greater: f64 = pmf[k as usize..].iter().sum();
                let less: f64 = pmf[..=k as usize].iter().sum();
                assert!((got.p_greater - greater.min(1.0)).abs() < 1e-12);
                assert!((got.p_less - less.min(1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn skewed_null_matches_dp_oracle() {
        for &(n, p0) in &[(9u64, 0.3), (25, 0.7), (56, 0.1), (200, 0.45)] {
            let pmf = dp_pmf(n, p0);
            for k in (0..=n).step_by(3) {
                let got = proportions_test(k, n, p0).unwrap();
                let want = two_sided_from_pmf(&pmf, k as usize);
                assert!(
                    (got.p_value - want).abs() < 1e-10,
                    "n={n} p0={p0} k={k}: {} vs {want}",
                    got.p_value
                );
            }
        }
    }

    #[test]
    fn log_gamma_route_agrees_with_dp_oracle() {
        // n = 200 exercises the log-gamma branch (> 56 coefficients).
        let pmf = dp_pmf(200, 0.5);
        let got = proportions_test(85, 200, 0.5).unwrap();
        assert!((got.p_value - two_sided_from_pmf(&pmf, 85)).abs() < 1e-10);
    }

    #[test]
    fn large_n_switches_to_normal_approximation() {
        let got = proportions_test(520, 1002, 0.5).unwrap();
        assert_eq!(got.method, BinomialMethod::NormalApprox);
        // Continuity-corrected normal against the exact log-gamma sum.
        let pmf = binomial_pmf_table(1002, 0.5);
        let exact = two_sided_from_pmf(&pmf, 520);
        assert!((got.p_value - exact).abs() < 0.01);
        // Dead-center observation is certain.
        assert_eq!(proportions_test(501, 1002, 0.5).unwrap().p_value, 1.0);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            proportions_test(3, 0, 0.5),
            Err(StatsError::ZeroTrials)
        ));
        assert!(matches!(
            proportions_test(5, 3, 0.5),
            Err(StatsError::SuccessesExceedN { .. })
        ));
        assert!(matches!(
            proportions_test(1, 3, 0.0),
            Err(StatsError::BadNullProportion { .. })
        ));
        assert!(matches!(
            proportions_test(1, 3, 1.0),
            Err(StatsError::BadNullProportion { .. })
        ));
    }

    #[test]
    fn spearman_perfect_orderings() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&xs, &[10.0, 20.0, 30.0, 40.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &[40.0, 30.0, 20.0, 10.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_ties_match_counting_oracle() {
        // Oracle: mid-rank by counting smaller/equal values, then Pearson —
        // independent of the sort-and-group implementation.
        fn counting_midranks(values: &[f64]) -> Vec<f64> {
            values
                .iter()
                .map(|&v| {
                    let below = values.iter().filter(|&&o| o < v).count() as f64;
                    let equal = values.iter().filter(|&&o| o == v).count() as f64;
                    below + (equal + 1.0) / 2.0
                })
                .collect()
        }
        let xs = [1.0, 2.0, 2.0, 4.0];
        let ys = [1.0, 3.0, 2.0, 4.0];
        let got = spearman(&xs, &ys).unwrap();
        let want = pearson(&counting_midranks(&xs), &counting_midranks(&ys)).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn spearman_invariant_under_monotone_transforms() {
        let xs = [0.3, -1.2, 0.8, 2.5, -0.4, 0.8];
        let ys = [1.0, 0.2, -0.7, 3.1, 0.9, -2.0];
        let base = spearman(&xs, &ys).unwrap();
        let cubed: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
        let exped: Vec<f64> = ys.iter().map(|y| y.exp()).collect();
        assert!((spearman(&cubed, &ys).unwrap() - base).abs() < 1e-12);
        assert!((spearman(&xs, &exped).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn spearman_rejects_bad_input() {
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            spearman(&[1.0], &[1.0]),
            Err(StatsError::TooFewObservations { .. })
        ));
        assert!(matches!(
            spearman(&[2.0, 2.0], &[1.0, 3.0]),
            Err(StatsError::ConstantInput { side: "first" })
        ));
        assert!(matches!(
            spearman(&[1.0, f64::NAN], &[1.0, 2.0]),
            Err(StatsError::NonFinite { .. })
        ));
    }

    #[test]
    fn benchmark_eval_scored_by_cosines() {
        let space = EmbeddingSpace::new(
            "t",
            vec![
                ("a".to_string(), vec![1.0, 0.0]),
                ("b".to_string(), vec![1.0, 0.2]),
                ("c".to_string(), vec![0.0, 1.0]),
            ],
        )
        .unwrap();
        let cos =
            |x: &str, y: &str| cosine(space.vector(x).unwrap(), space.vector(y).unwrap()).unwrap();
        let rows = vec![
            ("a".to_string(), "b".to_string(), cos("a", "b")),
            ("a".to_string(), "c".to_string(), cos("a", "c")),
            ("b".to_string(), "c".to_string(), cos("b", "c")),
        ];
        let pairs = BenchmarkPairs::new("self", rows.clone()).unwrap();
        let report = benchmark_eval(&space, &pairs).unwrap();
        assert!((report.rho - 1.0).abs() < 1e-12);
        assert_eq!(report.coverage(), 1.0);

        let negated: Vec<_> = rows
            .iter()
            .map(|(a, b, s)| (a.clone(), b.clone(), -s))
            .collect();
        let pairs = BenchmarkPairs::new("neg", negated).unwrap();
        assert!((benchmark_eval(&space, &pairs).unwrap().rho + 1.0).abs() < 1e-12);
    }

    #[test]
    fn benchmark_eval_skips_oov_half() {
        let space = EmbeddingSpace::new(
            "t",
            vec![
                ("a".to_string(), vec![1.0, 0.0]),
                ("b".to_string(), vec![1.0, 0.2]),
                ("c".to_string(), vec![0.0, 1.0]),
            ],
        )
        .unwrap();
        let rows = vec![
            ("a".to_string(), "b".to_string(), 9.0),
            ("a".to_string(), "c".to_string(), 2.0),
            ("a".to_string(), "zzz".to_string(), 5.0),
            ("yyy".to_string(), "b".to_string(), 4.0),
        ];
        let pairs = BenchmarkPairs::new("half", rows).unwrap();
        let report = benchmark_eval(&space, &pairs).unwrap();
        assert_eq!(report.covered, 2);
        assert_eq!(report.total, 4);
        assert_eq!(report.coverage(), 0.5);
        assert!((report.rho - 1.0).abs() < 1e-12);

        let all_oov =
            BenchmarkPairs::new("oov", vec![("x".to_string(), "y".to_string(), 1.0)]).unwrap();
        assert!(matches!(
            benchmark_eval(&space, &all_oov),
            Err(StatsError::CoverageTooLow {
                covered: 0,
                total: 1
            })
        ));
    }

    #[test]
    fn benchmark_pairs_reject_duplicates_either_order() {
        let rows = vec![
            ("a".to_string(), "b".to_string(), 1.0),
            ("b".to_string(), "a".to_string(), 2.0),
        ];
        assert!(matches!(
            BenchmarkPairs::new("dup", rows),
            Err(StatsError::BadPairLine { .. })
        ));
    }

    #[test]
    fn benchmark_tsv_round_trip() {
        use std::io::Write;
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, "a\tb\t8.5\nc\td\t1.25\n").unwrap();
        let pairs = BenchmarkPairs::load_tsv(file.path()).unwrap();
        assert_eq!(pairs.rows.len(), 2);
        assert_eq!(pairs.rows[0], ("a".to_string(), "b".to_string(), 8.5));

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "a\tb").unwrap();
        assert!(matches!(
            BenchmarkPairs::load_tsv(bad.path()),
            Err(StatsError::BadPairLine { .. })
        ));
    }

    proptest! {
        #[test]
        fn p_values_stay_in_unit_interval(
            n in 1u64..2000,
            frac in 0.0f64..=1.0,
            p0 in 0.01f64..0.99,
        ) {
            let k = ((n as f64) * frac).round() as u64;
            let k = k.min(n);
            let t = proportions_test(k, n, p0).unwrap();
            prop_assert!((0.0..=1.0).contains(&t.p_value));
            prop_assert!((0.0..=1.0).contains(&t.p_greater));
            prop_assert!((0.0..=1.0).contains(&t.p_less));
        }

        #[test]
        fn spearman_stays_in_range(values in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..30)) {
            let xs: Vec<f64> = values.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = values.iter().map(|p| p.1).collect();
            if let Ok(rho) = spearman(&xs, &ys) {
                prop_assert!((-1.0..=1.0).contains(&rho));
            }
        }
    }
}

//! Ranking and significance metrics for the evaluation tasks: top-1
//! accuracy, NDCG, rank-biased overlap, mean reciprocal rank, and the
//! Wilcoxon signed-rank test.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{JimError, Result};

/// A ranking of channel labels with their (descending) scores.
#[derive(Debug, Clone)]
pub struct RankedList {
    pub items: Vec<String>,
    pub scores: Vec<f64>,
}

impl RankedList {
    /// Build from unordered (label, score) pairs; ties break by label order.
    pub fn from_scores(pairs: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut pairs: Vec<(String, f64)> = pairs.into_iter().collect();
        pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut seen = BTreeSet::new();
        for (label, _) in &pairs {
            if !seen.insert(label.clone()) {
                return Err(JimError::InvalidParameter(format!(
                    "duplicate label {label:?} in ranking"
                )));
            }
        }
        let (items, scores) = pairs.into_iter().unzip();
        Ok(Self { items, scores })
    }
}

/// Fraction of positions where the predicted and actual argmax labels agree.
pub fn accuracy_top1(predicted: &[String], actual: &[String]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(JimError::InvalidParameter(format!(
            "length mismatch: {} predicted vs {} actual",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(JimError::InvalidParameter("no positions to score".into()));
    }
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// NDCG of a predicted order against per-label gains; discount is
/// `log2(rank+1)`, full-list depth. Defined as 1.0 when every gain is zero.
pub fn ndcg(predicted: &RankedList, gains: &BTreeMap<String, f64>) -> Result<f64> {
    let gain_of = |label: &str| -> Result<f64> {
        gains.get(label).copied().ok_or_else(|| {
            JimError::InvalidParameter(format!("no gain entry for label {label:?}"))
        })
    };
    let mut dcg = 0.0;
    for (r, label) in predicted.items.iter().enumerate() {
        dcg += gain_of(label)? / ((r + 2) as f64).log2();
    }
    let mut ideal: Vec<f64> = predicted
        .items
        .iter()
        .map(|l| gain_of(l))
        .collect::<Result<_>>()?;
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal
        .iter()
        .enumerate()
        .map(|(r, g)| g / ((r + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg / idcg)
}

/// Rank-biased overlap at persistence `p`, truncated at the longer list's
/// depth (base score, no extrapolation).
pub fn rbo(list_a: &[String], list_b: &[String], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(JimError::InvalidParameter(format!(
            "rbo persistence must lie in (0,1), got {p}"
        )));
    }
    for list in [list_a, list_b] {
        let set: BTreeSet<&String> = list.iter().collect();
        if set.len() != list.len() {
            return Err(JimError::InvalidParameter(
                "rbo: duplicate labels within a list".into(),
            ));
        }
    }
    let depth = list_a.len().max(list_b.len());
    let mut seen_a: BTreeSet<&String> = BTreeSet::new();
    let mut seen_b: BTreeSet<&String> = BTreeSet::new();
    let mut overlap = 0usize;
    let mut sum = 0.0;
    let mut weight = 1.0;
    for d in 0..depth {
        match (list_a.get(d), list_b.get(d)) {
            (Some(x), Some(y)) if x == y => {
                overlap += 1;
                seen_a.insert(x);
                seen_b.insert(y);
            }
            (Some(x), Some(y)) => {
                if seen_b.contains(x) {
                    overlap += 1;
                }
                if seen_a.contains(y) {
                    overlap += 1;
                }
                seen_a.insert(x);
                seen_b.insert(y);
            }
            (Some(x), None) => {
                if seen_b.contains(x) {
                    overlap += 1;
                }
                seen_a.insert(x);
            }
            (None, Some(y)) => {
                if seen_a.contains(y) {
                    overlap += 1;
                }
                seen_b.insert(y);
            }
            (None, None) => {}
        }
        sum += weight * overlap as f64 / (d + 1) as f64;
        weight *= p;
    }
    Ok((1.0 - p) * sum)
}

/// Mean reciprocal rank of a nonempty list of reciprocal ranks.
pub fn mrr(reciprocal_ranks: &[f64]) -> Result<f64> {
    if reciprocal_ranks.is_empty() {
        return Err(JimError::InvalidParameter("mrr of an empty list".into()));
    }
    Ok(reciprocal_ranks.iter().sum::<f64>() / reciprocal_ranks.len() as f64)
}

/// Outcome of the paired Wilcoxon signed-rank test at level 0.05.
#[derive(Debug, Clone, Copy)]
pub struct WilcoxonOutcome {
    /// min(W+, W-) over the non-zero differences.
    pub statistic: f64,
    pub significant: bool,
    /// Number of non-zero differences actually ranked.
    pub n_used: usize,
}

/// Two-sided Wilcoxon signed-rank test with zero-difference exclusion and
/// midrank ties. Exact null distribution for n <= 25, normal approximation
/// with continuity correction above.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonOutcome> {
    if a.len() != b.len() {
        return Err(JimError::InvalidParameter(
            "wilcoxon: paired samples differ in length".into(),
        ));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonOutcome {
            statistic: 0.0,
            significant: false,
            n_used: 0,
        });
    }
    let ranks = midranks(&diffs);
    let mut w_plus = 0.0;
    for (d, r) in diffs.iter().zip(&ranks) {
        if *d > 0.0 {
            w_plus += r;
        }
    }
    let total = n as f64 * (n as f64 + 1.0) / 2.0;
    let statistic = w_plus.min(total - w_plus);
    if n < 6 {
        return Ok(WilcoxonOutcome {
            statistic,
            significant: false,
            n_used: n,
        });
    }
    let significant = if n <= 25 {
        exact_two_sided_p(&ranks, statistic) <= 0.05
    } else {
        let mean = total / 2.0;
        let mut var = n as f64 * (n as f64 + 1.0) * (2.0 * n as f64 + 1.0) / 24.0;
        var -= tie_correction(&ranks) / 48.0;
        let z = (statistic - mean + 0.5) / var.sqrt();
        z.abs() > 1.959963984540054
    };
    Ok(WilcoxonOutcome {
        statistic,
        significant,
        n_used: n,
    })
}

fn midranks(diffs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    ranks
}

fn tie_correction(ranks: &[f64]) -> f64 {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for r in ranks {
        *counts.entry((r * 2.0) as u64).or_insert(0) += 1;
    }
    counts
        .values()
        .map(|&t| (t * t * t - t) as f64)
        .sum()
}

/// Exact two-sided p-value: the probability, over all 2^n sign assignments
/// of the given ranks, that min(W+, W-) is at most the observed statistic.
/// Ranks are doubled so midranks stay integral in the subset-sum table.
fn exact_two_sided_p(ranks: &[f64], statistic: f64) -> f64 {
    let scaled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = scaled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &scaled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let w = (statistic * 2.0).round() as usize;
    let mut favorable = 0.0;
    for (s, c) in counts.iter().enumerate() {
        if s.min(total - s) <= w {
            favorable += c;
        }
    }
    favorable / 2.0f64.powi(ranks.len() as i32)
}

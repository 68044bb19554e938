//! Hourly-binned prediction tasks and baseline predictors.
//!
//! Five tasks run against a binned view of the joint dataset: predict the
//! most influential event, rank events, predict the most frequent query,
//! rank queries, and query auto-completion. Model-based scores come from
//! the fitted intensities; baselines are naive-frequency, autoregression
//! (plain and differenced) and vector autoregression.

use std::collections::BTreeMap;

use crate::error::{JimError, Result};
use crate::intensity::intensity_right_limit;
use crate::model::{ModelParams, PointSequence};
use crate::util::solve_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Event,
    Query,
}

/// Counts of points per (bin, channel) over contiguous bins covering the
/// observation window.
#[derive(Debug, Clone)]
pub struct ForecastFrame {
    pub bin_width: f64,
    pub t_start: f64,
    /// `series[bin][channel]`, non-negative counts.
    pub series: Vec<Vec<f64>>,
    pub channel_kind: ChannelKind,
    pub labels: Vec<String>,
}

impl ForecastFrame {
    pub fn n_bins(&self) -> usize {
        self.series.len()
    }

    pub fn n_channels(&self) -> usize {
        self.labels.len()
    }

    /// End time of bin `b` (exclusive upper edge).
    pub fn bin_end(&self, b: usize) -> f64 {
        self.t_start + (b + 1) as f64 * self.bin_width
    }

    pub fn total(&self) -> f64 {
        self.series.iter().flatten().sum()
    }
}

#[derive(Debug, Clone)]
pub struct ForecastConfig {
    pub bin_width: f64,
    pub split_fraction: f64,
    pub ar_order: usize,
    pub rbo_p: f64,
    /// Half-life (hours) of the decayed-count share used for query-level scores.
    pub decay_half_life: f64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            bin_width: 1.0,
            split_fraction: 0.8,
            ar_order: 3,
            rbo_p: 0.9,
            decay_half_life: 24.0,
        }
    }
}

fn bin_grid(seq: &PointSequence, bin_width: f64) -> Result<usize> {
    if !(bin_width > 0.0) {
        return Err(JimError::Config("bin_width must be > 0".into()));
    }
    let n = (seq.window() / bin_width).ceil() as usize;
    Ok(n.max(1))
}

fn bin_of(t: f64, t_start: f64, bin_width: f64, n_bins: usize) -> usize {
    (((t - t_start) / bin_width).floor() as usize).min(n_bins - 1)
}

/// Event-level counts per bin; channel labels are the event indices.
pub fn bin_counts(seq: &PointSequence, bin_width: f64) -> Result<ForecastFrame> {
    let n_bins = bin_grid(seq, bin_width)?;
    let mut series = vec![vec![0.0; seq.k]; n_bins];
    for p in seq.points() {
        series[bin_of(p.t, seq.t_start, bin_width, n_bins)][p.d] += 1.0;
    }
    Ok(ForecastFrame {
        bin_width,
        t_start: seq.t_start,
        series,
        channel_kind: ChannelKind::Event,
        labels: (0..seq.k).map(|j| j.to_string()).collect(),
    })
}

/// Query-level counts per bin over a fixed vocabulary (defaults to the
/// distinct texts present). Points with out-of-vocabulary texts are skipped.
pub fn bin_counts_queries(
    seq: &PointSequence,
    texts: &[String],
    bin_width: f64,
    vocab: Option<&[String]>,
) -> Result<ForecastFrame> {
    if texts.len() != seq.len() {
        return Err(JimError::InvalidParameter(
            "texts must parallel the point sequence".into(),
        ));
    }
    let labels: Vec<String> = match vocab {
        Some(v) => v.to_vec(),
        None => {
            let mut distinct: Vec<String> = texts.to_vec();
            distinct.sort();
            distinct.dedup();
            distinct
        }
    };
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let n_bins = bin_grid(seq, bin_width)?;
    let mut series = vec![vec![0.0; labels.len()]; n_bins];
    for (p, text) in seq.points().iter().zip(texts) {
        if let Some(&c) = index.get(text.as_str()) {
            series[bin_of(p.t, seq.t_start, bin_width, n_bins)][c] += 1.0;
        }
    }
    Ok(ForecastFrame {
        bin_width,
        t_start: seq.t_start,
        series,
        channel_kind: ChannelKind::Query,
        labels,
    })
}

/// Intensity score per event at the end of a bin (right limit, including
/// the jump of any point exactly at the bin edge).
pub fn jim_scores(params: &ModelParams, seq: &PointSequence, bin_end_time: f64) -> Result<Vec<f64>> {
    intensity_right_limit(params, seq, bin_end_time)
}

/// Naive frequency: the counts of `bin` are the prediction for `bin + 1`.
pub fn baseline_nf(frame: &ForecastFrame, bin: usize) -> Result<Vec<f64>> {
    frame
        .series
        .get(bin)
        .cloned()
        .ok_or_else(|| JimError::InvalidParameter(format!("bin {bin} out of range")))
}

/// Per-channel AR(p) coefficients `(intercept, lag 1..p)` fitted by OLS on
/// the given rows, with a small ridge fallback for singular designs.
fn fit_ar_channel(values: &[f64], p: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n < p + 2 {
        return Err(JimError::InsufficientData(format!(
            "AR({p}) needs at least {} observations, got {n}",
            p + 2
        )));
    }
    let rows = n - p;
    let dim = p + 1;
    // normal equations X'X beta = X'y
    let mut xtx = vec![vec![0.0; dim]; dim];
    let mut xty = vec![0.0; dim];
    for t in p..n {
        let mut x = vec![1.0];
        for lag in 1..=p {
            x.push(values[t - lag]);
        }
        for a in 0..dim {
            xty[a] += x[a] * values[t];
            for b in 0..dim {
                xtx[a][b] += x[a] * x[b];
            }
        }
    }
    let _ = rows;
    match solve_linear(xtx.clone(), xty.clone()) {
        Ok(beta) => Ok(beta),
        Err(_) => {
            for (i, row) in xtx.iter_mut().enumerate() {
                row[i] += 1e-6;
            }
            solve_linear(xtx, xty)
        }
    }
}

fn ar_predict(beta: &[f64], history: &[f64]) -> f64 {
    let p = beta.len() - 1;
    let mut y = beta[0];
    for lag in 1..=p {
        y += beta[lag] * history[history.len() - lag];
    }
    y.max(0.0)
}

/// One-step AR(p) predictions for every test bin. Fits on the training span
/// `[0, split_bin)`; each prediction for bin `b+1` uses actual history up to
/// bin `b`. `differenced` fits the AR on first differences and integrates
/// the forecast back.
pub fn baseline_ar(
    frame: &ForecastFrame,
    order: usize,
    differenced: bool,
    split_bin: usize,
) -> Result<Vec<Vec<f64>>> {
    let n_bins = frame.n_bins();
    let k = frame.n_channels();
    if split_bin >= n_bins {
        return Err(JimError::InvalidParameter("split_bin out of range".into()));
    }
    let mut betas = Vec::with_capacity(k);
    for c in 0..k {
        let train: Vec<f64> = (0..split_bin).map(|b| frame.series[b][c]).collect();
        let series: Vec<f64> = if differenced {
            train.windows(2).map(|w| w[1] - w[0]).collect()
        } else {
            train
        };
        betas.push(fit_ar_channel(&series, order)?);
    }
    let mut out = Vec::new();
    for b in split_bin..n_bins {
        // predict bin b from history ending at bin b-1
        let mut pred = vec![0.0; k];
        for c in 0..k {
            let hist: Vec<f64> = (0..b).map(|i| frame.series[i][c]).collect();
            if differenced {
                let diffs: Vec<f64> = hist.windows(2).map(|w| w[1] - w[0]).collect();
                let d = {
                    let p = betas[c].len() - 1;
                    let mut y = betas[c][0];
                    for lag in 1..=p {
                        y += betas[c][lag] * diffs[diffs.len() - lag];
                    }
                    y
                };
                pred[c] = (hist[hist.len() - 1] + d).max(0.0);
            } else {
                pred[c] = ar_predict(&betas[c], &hist);
            }
        }
        out.push(pred);
    }
    Ok(out)
}

/// One-step VAR(p) predictions for every test bin: multivariate least
/// squares with intercept across all channels jointly, clamped at zero.
pub fn baseline_var(frame: &ForecastFrame, order: usize, split_bin: usize) -> Result<Vec<Vec<f64>>> {
    let n_bins = frame.n_bins();
    let k = frame.n_channels();
    if split_bin >= n_bins {
        return Err(JimError::InvalidParameter("split_bin out of range".into()));
    }
    if split_bin < k * order + 2 {
        return Err(JimError::InsufficientData(format!(
            "VAR({order}) with k={k} needs at least {} training bins, got {split_bin}",
            k * order + 2
        )));
    }
    let dim = 1 + k * order;
    let design_row = |series: &[Vec<f64>], t: usize| -> Vec<f64> {
        let mut x = vec![1.0];
        for lag in 1..=order {
            x.extend(series[t - lag].iter().copied());
        }
        x
    };
    let mut xtx = vec![vec![0.0; dim]; dim];
    let mut xty = vec![vec![0.0; k]; dim];
    for t in order..split_bin {
        let x = design_row(&frame.series, t);
        for a in 0..dim {
            for b in 0..dim {
                xtx[a][b] += x[a] * x[b];
            }
            for c in 0..k {
                xty[a][c] += x[a] * frame.series[t][c];
            }
        }
    }
    let mut betas: Vec<Vec<f64>> = Vec::with_capacity(k); // per channel, length dim
    for c in 0..k {
        let rhs: Vec<f64> = (0..dim).map(|a| xty[a][c]).collect();
        let beta = match solve_linear(xtx.clone(), rhs.clone()) {
            Ok(beta) => beta,
            Err(_) => {
                let mut ridged = xtx.clone();
                for (i, row) in ridged.iter_mut().enumerate() {
                    row[i] += 1e-6;
                }
                solve_linear(ridged, rhs)?
            }
        };
        betas.push(beta);
    }
    let mut out = Vec::new();
    for b in split_bin..n_bins {
        let x = design_row(&frame.series, b);
        let pred: Vec<f64> = (0..k)
            .map(|c| {
                betas[c]
                    .iter()
                    .zip(&x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect();
        out.push(pred);
    }
    Ok(out)
}

/// Query-level influence scores at a bin edge: the triggering event's
/// intensity split across that event's queries in proportion to their
/// exponentially decayed occurrence counts (shares sum to 1 per event).
pub fn query_level_scores(
    params: &ModelParams,
    seq: &PointSequence,
    texts: &[String],
    bin_end_time: f64,
    decay_half_life: f64,
) -> Result<BTreeMap<String, f64>> {
    if texts.len() != seq.len() {
        return Err(JimError::InvalidParameter(
            "texts must parallel the point sequence".into(),
        ));
    }
    if !(decay_half_life > 0.0) {
        return Err(JimError::Config("decay_half_life must be > 0".into()));
    }
    let lambdas = intensity_right_limit(params, seq, bin_end_time)?;
    let mut decayed: Vec<BTreeMap<&str, f64>> = vec![BTreeMap::new(); seq.k];
    let mut totals = vec![0.0; seq.k];
    for (p, text) in seq.points().iter().zip(texts) {
        if p.t > bin_end_time {
            break;
        }
        let w = 0.5f64.powf((bin_end_time - p.t) / decay_half_life);
        *decayed[p.d].entry(text.as_str()).or_insert(0.0) += w;
        totals[p.d] += w;
    }
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for j in 0..seq.k {
        if totals[j] <= 0.0 {
            continue; // empty-history event contributes no query shares
        }
        for (text, w) in &decayed[j] {
            *scores.entry(text.to_string()).or_insert(0.0) += lambdas[j] * w / totals[j];
        }
    }
    Ok(scores)
}

/// Where predicted score vectors come from.
pub enum ScoreSource<'a> {
    /// Naive frequency on the frame itself.
    NaiveFrequency,
    /// AR(p); `differenced` selects the ARD variant.
    Autoregression { differenced: bool },
    /// VAR(p) across all channels jointly.
    VectorAutoregression,
    /// Event-level intensities of a fitted model.
    Model {
        params: &'a ModelParams,
        seq: &'a PointSequence,
    },
    /// Query-level decomposition of a fitted model's intensities.
    ModelQueryLevel {
        params: &'a ModelParams,
        seq: &'a PointSequence,
        texts: &'a [String],
    },
    /// Feeds the actual next-bin counts back as scores (upper bound).
    Oracle,
}

/// Per-bin predictions and actuals over the test span.
#[derive(Debug, Clone)]
pub struct TaskOutput {
    /// Target bin indices (the bins being predicted).
    pub bins: Vec<usize>,
    pub predicted: Vec<Vec<f64>>,
    pub actual: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub split_time: f64,
}

/// Run one prediction task: for every test bin, produce the predicted score
/// vector (using only data before that bin) and the actual counts.
pub fn run_task(
    source: &ScoreSource,
    frame: &ForecastFrame,
    split_bin: usize,
    cfg: &ForecastConfig,
) -> Result<TaskOutput> {
    let n_bins = frame.n_bins();
    if split_bin == 0 || split_bin >= n_bins {
        return Err(JimError::InvalidParameter(format!(
            "split_bin {split_bin} must lie strictly inside [1, {n_bins})"
        )));
    }
    let targets: Vec<usize> = (split_bin..n_bins).collect();
    let predicted: Vec<Vec<f64>> = match source {
        ScoreSource::NaiveFrequency => targets
            .iter()
            .map(|&b| baseline_nf(frame, b - 1))
            .collect::<Result<_>>()?,
        ScoreSource::Autoregression { differenced } => {
            baseline_ar(frame, cfg.ar_order, *differenced, split_bin)?
        }
        ScoreSource::VectorAutoregression => baseline_var(frame, cfg.ar_order, split_bin)?,
        ScoreSource::Model { params, seq } => targets
            .iter()
            .map(|&b| jim_scores(params, seq, frame.bin_end(b - 1)))
            .collect::<Result<_>>()?,
        ScoreSource::ModelQueryLevel { params, seq, texts } => targets
            .iter()
            .map(|&b| {
                let scores = query_level_scores(
                    params,
                    seq,
                    texts,
                    frame.bin_end(b - 1),
                    cfg.decay_half_life,
                )?;
                Ok(frame
                    .labels
                    .iter()
                    .map(|l| scores.get(l).copied().unwrap_or(0.0))
                    .collect())
            })
            .collect::<Result<_>>()?,
        ScoreSource::Oracle => targets.iter().map(|&b| frame.series[b].clone()).collect(),
    };
    let actual: Vec<Vec<f64>> = targets.iter().map(|&b| frame.series[b].clone()).collect();
    for row in &predicted {
        if row.iter().any(|v| *v < 0.0) {
            return Err(JimError::Numerical("negative predicted score".into()));
        }
    }
    Ok(TaskOutput {
        bins: targets,
        predicted,
        actual,
        labels: frame.labels.clone(),
        split_time: frame.t_start + split_bin as f64 * frame.bin_width,
    })
}

/// Argmax label of a score vector; ties break by position in the label list.
pub fn argmax_label<'a>(labels: &'a [String], scores: &[f64]) -> &'a str {
    let mut best = 0usize;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    &labels[best]
}

/// Aggregate ranking metrics for a task run.
#[derive(Debug, Clone)]
pub struct RankingMetrics {
    pub accuracy: f64,
    pub ndcg_mean: f64,
    pub rbo_mean: f64,
    pub per_bin_ndcg: Vec<f64>,
    pub per_bin_rbo: Vec<f64>,
    /// NDCG averaged over bins with at least one non-zero gain.
    pub ndcg_informative: f64,
    pub n_informative: usize,
    pub n_bins: usize,
}

/// Reduce a task run to accuracy / NDCG / RBO aggregates.
pub fn ranking_metrics(output: &TaskOutput, rbo_p: f64) -> Result<RankingMetrics> {
    use crate::metrics::{accuracy_top1, ndcg, rbo};
    let n = output.bins.len();
    let mut pred_tops = Vec::with_capacity(n);
    let mut actual_tops = Vec::with_capacity(n);
    let mut per_bin_ndcg = Vec::with_capacity(n);
    let mut per_bin_rbo = Vec::with_capacity(n);
    let mut informative_sum = 0.0;
    let mut n_informative = 0usize;
    for (pred, act) in output.predicted.iter().zip(&output.actual) {
        pred_tops.push(argmax_label(&output.labels, pred).to_string());
        actual_tops.push(argmax_label(&output.labels, act).to_string());
        let ranked = ranked_by_position(&output.labels, pred);
        let gains: BTreeMap<String, f64> = output
            .labels
            .iter()
            .cloned()
            .zip(act.iter().copied())
            .collect();
        let nd = ndcg(&ranked, &gains)?;
        per_bin_ndcg.push(nd);
        if act.iter().any(|g| *g > 0.0) {
            informative_sum += nd;
            n_informative += 1;
        }
        let actual_ranked = ranked_by_position(&output.labels, act);
        per_bin_rbo.push(rbo(&ranked.items, &actual_ranked.items, rbo_p)?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    Ok(RankingMetrics {
        accuracy: accuracy_top1(&pred_tops, &actual_tops)?,
        ndcg_mean: mean(&per_bin_ndcg),
        rbo_mean: mean(&per_bin_rbo),
        ndcg_informative: if n_informative > 0 {
            informative_sum / n_informative as f64
        } else {
            1.0
        },
        n_informative,
        per_bin_ndcg,
        per_bin_rbo,
        n_bins: n,
    })
}

/// Rank labels by score descending; ties keep label-list position order.
fn ranked_by_position(labels: &[String], scores: &[f64]) -> crate::metrics::RankedList {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    crate::metrics::RankedList {
        items: idx.iter().map(|&i| labels[i].clone()).collect(),
        scores: idx.iter().map(|&i| scores[i]).collect(),
    }
}

/// Reciprocal rank of `actual` among the known queries sharing its first
/// token, ranked by score descending (ties lexicographic). Absent queries
/// score 0.
pub fn qac_rank(scores: &BTreeMap<String, f64>, prefix_word: &str, actual: &str) -> f64 {
    let mut candidates: Vec<(&String, f64)> = scores
        .iter()
        .filter(|(q, _)| {
            crate::ingest::tokenize(q)
                .first()
                .map(|t| t == prefix_word)
                .unwrap_or(false)
        })
        .map(|(q, s)| (q, *s))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    candidates
        .iter()
        .position(|(q, _)| q.as_str() == actual)
        .map(|r| 1.0 / (r + 1) as f64)
        .unwrap_or(0.0)
}

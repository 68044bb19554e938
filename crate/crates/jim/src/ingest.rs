//! Event and query-log parsing, BM25-variant intent-match scoring, and
//! construction of the joint event-query dataset.
//!
//! File formats:
//! - events: JSON Lines, one `{"id", "title", "body", "timestamp"}` per line;
//! - query log: tab-separated `query_text<TAB>epoch_seconds`, no header;
//! - joint dataset: JSON Lines, a `{"k", "t_start", "t_end"}` header line
//!   followed by one `{"t", "d", "x", "text"}` object per point.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{JimError, Result};
use crate::model::{MarkedPoint, PointSequence};

pub const DEFAULT_THRESHOLD: f64 = 1.25;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: i64,
    pub title: String,
    #[serde(default)]
    pub body: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone)]
pub struct QueryRecord {
    pub text: String,
    pub timestamp: i64,
}

/// BM25-variant scoring parameters. `avgql` and `idf` are computed from the
/// query corpus by [`corpus_stats`].
#[derive(Debug, Clone)]
pub struct SimilarityConfig {
    pub k1: f64,
    pub b: f64,
    pub avgql: f64,
    pub idf: BTreeMap<String, f64>,
}

impl SimilarityConfig {
    pub fn idf_of(&self, term: &str) -> f64 {
        self.idf.get(term).copied().unwrap_or(0.0)
    }
}

/// Dataset-build options; `use_body` appends body tokens to the event terms.
#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub k1: f64,
    pub b: f64,
    pub threshold: f64,
    pub use_body: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            threshold: DEFAULT_THRESHOLD,
            use_body: false,
        }
    }
}

#[derive(Debug)]
pub struct JointDataset {
    pub events: Vec<EventRecord>,
    pub sequence: PointSequence,
    /// Original query text per point, parallel to `sequence.points()`.
    pub texts: Vec<String>,
}

impl JointDataset {
    /// Per-event kept-query counts and average similarity.
    pub fn summary(&self) -> Vec<(i64, usize, f64)> {
        let k = self.sequence.k;
        let mut count = vec![0usize; k];
        let mut sum = vec![0.0; k];
        for p in self.sequence.points() {
            count[p.d] += 1;
            sum[p.d] += p.x;
        }
        (0..k)
            .map(|j| {
                let avg = if count[j] > 0 { sum[j] / count[j] as f64 } else { 0.0 };
                (self.events[j].id, count[j], avg)
            })
            .collect()
    }
}

/// Lowercase, split on non-alphanumerics, drop tokens shorter than 2 chars.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_string)
        .collect()
}

/// Weighted BM25-variant similarity between an event (terms with weights
/// summing to 1) and a query token list.
pub fn similarity(
    event_terms: &[(String, f64)],
    query_terms: &[String],
    cfg: &SimilarityConfig,
) -> Result<f64> {
    let total: f64 = event_terms.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(JimError::Config(format!(
            "event term weights must sum to 1, got {total}"
        )));
    }
    let ql = query_terms.len() as f64;
    let mut score = 0.0;
    for (term, weight) in event_terms {
        let tf = query_terms.iter().filter(|q| *q == term).count() as f64;
        if tf == 0.0 {
            continue;
        }
        let denom = tf + cfg.k1 * (1.0 - cfg.b + cfg.b * ql / cfg.avgql);
        score += weight * cfg.idf_of(term) * tf * (cfg.k1 + 1.0) / denom;
    }
    Ok(score)
}

/// Average query length and smoothed IDF (`ln((N+1)/(df+1)) + 1`) over the
/// query corpus, restricted to the terms of interest.
pub fn corpus_stats<'a>(
    queries: &[Vec<String>],
    terms: impl Iterator<Item = &'a str>,
) -> (f64, BTreeMap<String, f64>) {
    let n = queries.len() as f64;
    let avgql = if queries.is_empty() {
        1.0
    } else {
        (queries.iter().map(|q| q.len()).sum::<usize>() as f64 / n).max(1e-9)
    };
    let mut idf = BTreeMap::new();
    for term in terms {
        if idf.contains_key(term) {
            continue;
        }
        let df = queries.iter().filter(|q| q.iter().any(|t| t == term)).count() as f64;
        idf.insert(term.to_string(), ((n + 1.0) / (df + 1.0)).ln() + 1.0);
    }
    (avgql, idf)
}

fn event_terms(event: &EventRecord, use_body: bool) -> Vec<(String, f64)> {
    let mut tokens = tokenize(&event.title);
    if use_body {
        tokens.extend(tokenize(&event.body));
    }
    let w = if tokens.is_empty() { 0.0 } else { 1.0 / tokens.len() as f64 };
    tokens.into_iter().map(|t| (t, w)).collect()
}

/// Score every query against every event, keep queries whose best score
/// clears the threshold, and assemble the joint dataset. The triggering
/// event is the argmax-similarity event, ties broken by lower event id.
pub fn build_joint_dataset(
    events: &[EventRecord],
    queries: &[QueryRecord],
    cfg: &BuildConfig,
) -> Result<JointDataset> {
    if events.is_empty() {
        return Err(JimError::EmptyResult("no events to score against".into()));
    }
    let mut events: Vec<EventRecord> = events.to_vec();
    events.sort_by_key(|e| e.id);
    for e in &events {
        if e.title.trim().is_empty() {
            return Err(JimError::InvalidParameter(format!(
                "event {} has an empty title",
                e.id
            )));
        }
    }
    let query_tokens: Vec<Vec<String>> = queries.iter().map(|q| tokenize(&q.text)).collect();
    let per_event_terms: Vec<Vec<(String, f64)>> =
        events.iter().map(|e| event_terms(e, cfg.use_body)).collect();
    let (avgql, idf) = corpus_stats(
        &query_tokens,
        per_event_terms
            .iter()
            .flatten()
            .map(|(t, _)| t.as_str()),
    );
    let sim_cfg = SimilarityConfig {
        k1: cfg.k1,
        b: cfg.b,
        avgql,
        idf,
    };

    struct Kept {
        t_hours: f64,
        d: usize,
        x: f64,
        text: String,
        order: usize,
    }
    let mut kept: Vec<Kept> = Vec::new();
    for (order, (q, tokens)) in queries.iter().zip(&query_tokens).enumerate() {
        if tokens.is_empty() {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (d, terms) in per_event_terms.iter().enumerate() {
            let score = similarity(terms, tokens, &sim_cfg)?;
            let better = match best {
                None => true,
                Some((_, bs)) => score > bs,
            };
            if better {
                best = Some((d, score));
            }
        }
        if let Some((d, score)) = best {
            // zero similarity means no influence regardless of threshold
            if score >= cfg.threshold && score > 0.0 {
                kept.push(Kept {
                    t_hours: q.timestamp as f64 / 3600.0,
                    d,
                    x: score,
                    text: q.text.clone(),
                    order,
                });
            }
        }
    }
    if kept.is_empty() {
        return Err(JimError::EmptyResult(format!(
            "no query reached the similarity threshold {}",
            cfg.threshold
        )));
    }
    kept.sort_by(|a, b| a.t_hours.total_cmp(&b.t_hours).then(a.order.cmp(&b.order)));
    let t_start = kept[0].t_hours.floor();
    let t_end = kept.last().unwrap().t_hours.ceil().max(t_start + 1.0);
    let mut prev = f64::NEG_INFINITY;
    let mut points = Vec::with_capacity(kept.len());
    let mut texts = Vec::with_capacity(kept.len());
    for rec in kept {
        let mut t = rec.t_hours;
        if t <= prev {
            t = prev + 1e-9;
        }
        prev = t;
        points.push(MarkedPoint {
            t,
            d: rec.d,
            x: rec.x,
        });
        texts.push(rec.text);
    }
    let sequence = PointSequence::new(points, t_start, t_end, events.len())?;
    Ok(JointDataset {
        events,
        sequence,
        texts,
    })
}

fn io_err(path: &Path, source: std::io::Error) -> JimError {
    JimError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_events_jsonl(path: &Path) -> Result<Vec<EventRecord>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut events = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord = serde_json::from_str(&line).map_err(|e| JimError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        events.push(rec);
    }
    Ok(events)
}

pub fn read_query_log_tsv(path: &Path) -> Result<Vec<QueryRecord>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut queries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| JimError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        let (text, ts) = line
            .rsplit_once('\t')
            .ok_or_else(|| parse_err("expected query_text<TAB>epoch_seconds".into()))?;
        let timestamp: i64 = ts
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad timestamp {ts:?}: {e}")))?;
        queries.push(QueryRecord {
            text: text.to_string(),
            timestamp,
        });
    }
    Ok(queries)
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    k: usize,
    t_start: f64,
    t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rng: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetLine {
    t: f64,
    d: usize,
    x: f64,
    #[serde(default)]
    text: String,
}

/// Write a point sequence (optionally with query texts, and with the RNG
/// provenance for simulated data) in the joint-dataset JSONL format.
pub fn write_dataset(
    path: &Path,
    seq: &PointSequence,
    texts: Option<&[String]>,
    provenance: Option<(&str, u64)>,
) -> Result<()> {
    let header = DatasetHeader {
        k: seq.k,
        t_start: seq.t_start,
        t_end: seq.t_end,
        rng: provenance.map(|(name, _)| name.to_string()),
        seed: provenance.map(|(_, seed)| seed),
    };
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    for (i, p) in seq.points().iter().enumerate() {
        let line = DatasetLine {
            t: p.t,
            d: p.d,
            x: p.x,
            text: texts.map(|t| t[i].clone()).unwrap_or_default(),
        };
        out.push_str(&serde_json::to_string(&line).expect("line serializes"));
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}

/// Read a joint-dataset JSONL file back into a sequence plus parallel texts.
pub fn read_dataset(path: &Path) -> Result<(PointSequence, Vec<String>)> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let parse_err = |line: usize, msg: String| JimError::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty dataset file".into()))?;
    let first = first.map_err(|e| io_err(path, e))?;
    let header: DatasetHeader =
        serde_json::from_str(&first).map_err(|e| parse_err(1, e.to_string()))?;
    let mut points = Vec::new();
    let mut texts = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetLine =
            serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        points.push(MarkedPoint {
            t: rec.t,
            d: rec.d,
            x: rec.x,
        });
        texts.push(rec.text);
    }
    let seq = PointSequence::new(points, header.t_start, header.t_end, header.k)?;
    Ok((seq, texts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_cfg(avgql: f64, idf_one: &[&str]) -> SimilarityConfig {
        SimilarityConfig {
            k1: 1.2,
            b: 0.75,
            avgql,
            idf: idf_one.iter().map(|t| (t.to_string(), 1.0)).collect(),
        }
    }

    #[test]
    fn similarity_hand_anchor() {
        let cfg = flat_cfg(2.0, &["aa", "bb"]);
        let event = vec![("aa".to_string(), 0.5), ("bb".to_string(), 0.5)];
        let query = vec!["aa".to_string(), "aa".to_string()];
        let s = similarity(&event, &query, &cfg).unwrap();
        assert!((s - 0.6875).abs() < 1e-12, "{s}");
    }

    #[test]
    fn similarity_no_overlap_is_zero() {
        let cfg = flat_cfg(2.0, &["aa"]);
        let event = vec![("aa".to_string(), 1.0)];
        let query = vec!["zz".to_string()];
        assert_eq!(similarity(&event, &query, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn similarity_linear_in_idf() {
        let mut cfg = flat_cfg(3.0, &["aa", "bb"]);
        let event = vec![("aa".to_string(), 0.6), ("bb".to_string(), 0.4)];
        let query = vec!["aa".to_string(), "bb".to_string(), "cc".to_string()];
        let s1 = similarity(&event, &query, &cfg).unwrap();
        for v in cfg.idf.values_mut() {
            *v *= 2.0;
        }
        let s2 = similarity(&event, &query, &cfg).unwrap();
        assert!((s2 - 2.0 * s1).abs() < 1e-12);
    }

    #[test]
    fn similarity_rejects_unnormalized_weights() {
        let cfg = flat_cfg(2.0, &["aa"]);
        let event = vec![("aa".to_string(), 0.7)];
        assert!(similarity(&event, &["aa".to_string()], &cfg).is_err());
    }

    #[test]
    fn tokenizer_behavior() {
        assert_eq!(
            tokenize("Trump, Indiana-Result! a"),
            vec!["trump", "indiana", "result"]
        );
        assert!(tokenize("a . !").is_empty());
    }

    fn sample_events() -> Vec<EventRecord> {
        vec![
            EventRecord {
                id: 0,
                title: "trump indiana primaries".into(),
                body: String::new(),
                timestamp: 0,
            },
            EventRecord {
                id: 1,
                title: "panama papers leaked".into(),
                body: String::new(),
                timestamp: 0,
            },
        ]
    }

    fn q(text: &str, ts: i64) -> QueryRecord {
        QueryRecord {
            text: text.into(),
            timestamp: ts,
        }
    }

    #[test]
    fn build_keeps_matching_queries_only() {
        let events = sample_events();
        let queries = vec![
            q("trump indiana primaries", 3_600),
            q("weather tomorrow", 7_200),
            q("panama papers leaked list", 10_800),
        ];
        let ds = build_joint_dataset(&events, &queries, &BuildConfig::default()).unwrap();
        assert_eq!(ds.sequence.len(), 2);
        assert_eq!(ds.sequence.points()[0].d, 0);
        assert_eq!(ds.sequence.points()[1].d, 1);
        assert_eq!(ds.texts[0], "trump indiana primaries");
        let summary = ds.summary();
        assert_eq!(summary[0].1, 1);
        assert_eq!(summary[1].1, 1);
        assert!(summary[0].2 >= DEFAULT_THRESHOLD);
    }

    #[test]
    fn threshold_zero_keeps_any_overlap() {
        let events = sample_events();
        let queries = vec![q("trump speech", 1000), q("nothing relevant here", 2000)];
        let mut cfg = BuildConfig::default();
        cfg.threshold = 0.0;
        let ds = build_joint_dataset(&events, &queries, &cfg).unwrap();
        // any positive overlap survives; zero-overlap queries never do
        assert_eq!(ds.sequence.len(), 1);
        assert_eq!(ds.sequence.points()[0].d, 0);
    }

    #[test]
    fn monotone_threshold_property() {
        let events = sample_events();
        let queries: Vec<QueryRecord> = (0..30)
            .map(|i| {
                let text = match i % 3 {
                    0 => "trump indiana primaries result",
                    1 => "panama papers",
                    _ => "celebrity gossip news",
                };
                q(text, 1000 * (i + 1))
            })
            .collect();
        let mut prev = usize::MAX;
        for threshold in [0.0, 0.5, 1.0, 1.25, 2.0, 5.0] {
            let mut cfg = BuildConfig::default();
            cfg.threshold = threshold;
            let n = match build_joint_dataset(&events, &queries, &cfg) {
                Ok(ds) => ds.sequence.len(),
                Err(JimError::EmptyResult(_)) => 0,
                Err(e) => panic!("{e}"),
            };
            assert!(n <= prev, "threshold {threshold} kept {n} > {prev}");
            prev = n;
        }
    }

    #[test]
    fn equal_timestamps_are_nudged() {
        let events = sample_events();
        let queries = vec![
            q("trump indiana", 3600),
            q("trump primaries", 3600),
            q("trump indiana primaries", 3600),
        ];
        let mut cfg = BuildConfig::default();
        cfg.threshold = 0.1;
        let ds = build_joint_dataset(&events, &queries, &cfg).unwrap();
        let pts = ds.sequence.points();
        assert_eq!(pts.len(), 3);
        assert!(pts.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn impossible_threshold_is_empty_result() {
        let events = sample_events();
        let queries = vec![q("trump indiana", 3600)];
        let mut cfg = BuildConfig::default();
        cfg.threshold = 1e6;
        assert!(matches!(
            build_joint_dataset(&events, &queries, &cfg),
            Err(JimError::EmptyResult(_))
        ));
    }

    #[test]
    fn dataset_round_trip() {
        let seq = PointSequence::new(
            vec![
                MarkedPoint { t: 1.5, d: 0, x: 2.0 },
                MarkedPoint { t: 2.25, d: 1, x: 1.5 },
            ],
            1.0,
            3.0,
            2,
        )
        .unwrap();
        let texts = vec!["first query".to_string(), "second query".to_string()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        write_dataset(&path, &seq, Some(&texts), Some(("chacha8", 7))).unwrap();
        let (back, back_texts) = read_dataset(&path).unwrap();
        assert_eq!(back.points(), seq.points());
        assert_eq!(back.k, 2);
        assert_eq!(back_texts, texts);
        let raw = std::fs::read_to_string(&path).unwrap();
        assert!(raw.starts_with(r#"{"k":2,"t_start":1.0,"t_end":3.0,"rng":"chacha8","seed":7}"#));
    }

    #[test]
    fn query_log_parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.tsv");
        std::fs::write(&path, "good query\t100\nbad line without tab\n").unwrap();
        match read_query_log_tsv(&path) {
            Err(JimError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}

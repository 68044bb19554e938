//! Query auto-completion from influence scores: split each event's
//! intensity across its queries by decayed occurrence share, then rank the
//! candidates that share the typed first word.
//!
//! Run with: `cargo run --example autocomplete`

use jim::forecast::{qac_rank, query_level_scores};
use jim::model::{MarkedPoint, ModelParams, PointSequence};

fn main() -> jim::Result<()> {
    let params = ModelParams {
        eta: vec![0.2, 0.2],
        alpha: vec![0.5, 0.5],
        mic: vec![vec![0.5, 0.1], vec![0.1, 0.5]],
        rho: vec![3.0, 3.0],
        mu: vec![2.0, 2.0],
        phi: vec![1.0, 1.0],
        psi: vec![0.5, 0.5],
    };
    let points = vec![
        MarkedPoint { t: 1.0, d: 0, x: 2.0 },
        MarkedPoint { t: 2.0, d: 0, x: 1.5 },
        MarkedPoint { t: 3.0, d: 0, x: 2.5 },
        MarkedPoint { t: 8.0, d: 1, x: 1.0 },
        MarkedPoint { t: 9.0, d: 1, x: 1.2 },
    ];
    let texts: Vec<String> = [
        "trump indiana primaries",
        "trump indiana result",
        "trump indiana primaries",
        "panama papers leaked",
        "panama papers list",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let seq = PointSequence::new(points, 0.0, 12.0, 2)?;

    let scores = query_level_scores(&params, &seq, &texts, 10.0, 24.0)?;
    println!("query-level influence scores at t=10h:");
    for (query, score) in &scores {
        println!("  {score:.4}  {query:?}");
    }

    for (prefix, actual) in [
        ("trump", "trump indiana primaries"),
        ("trump", "trump indiana result"),
        ("panama", "panama papers list"),
        ("trump", "trump unseen query"),
    ] {
        println!(
            "typing {prefix:?}, actual {actual:?}: reciprocal rank {}",
            qac_rank(&scores, prefix, actual)
        );
    }
    Ok(())
}

//! Tour of the evaluation metrics: top-1 accuracy, NDCG, rank-biased
//! overlap, mean reciprocal rank and the Wilcoxon signed-rank test.
//!
//! Run with: `cargo run --example ranking_metrics`

use std::collections::BTreeMap;

use jim::metrics::{accuracy_top1, mrr, ndcg, rbo, wilcoxon_signed_rank, RankedList};

fn main() -> jim::Result<()> {
    let predicted: Vec<String> = ["a", "b", "a", "c"].iter().map(|s| s.to_string()).collect();
    let actual: Vec<String> = ["a", "b", "c", "c"].iter().map(|s| s.to_string()).collect();
    println!("accuracy: {}", accuracy_top1(&predicted, &actual)?);

    let ranking = RankedList::from_scores(vec![
        ("B".to_string(), 9.0),
        ("A".to_string(), 8.0),
        ("C".to_string(), 7.0),
    ])?;
    let gains: BTreeMap<String, f64> = [("A", 3.0), ("B", 2.0), ("C", 1.0)]
        .iter()
        .map(|(l, g)| (l.to_string(), *g))
        .collect();
    println!("ndcg with top two swapped: {:.7}", ndcg(&ranking, &gains)?);

    let ab: Vec<String> = vec!["A".into(), "B".into()];
    let ba: Vec<String> = vec!["B".into(), "A".into()];
    println!("rbo of reversed pair at p=0.9: {:.2}", rbo(&ab, &ba, 0.9)?);
    println!(
        "rbo of identical depth-5 lists: {:.5} (= 1 - 0.9^5)",
        rbo(
            &["a", "b", "c", "d", "e"].map(String::from),
            &["a", "b", "c", "d", "e"].map(String::from),
            0.9
        )?
    );

    println!("mrr of ranks 1 and 2: {}", mrr(&[1.0, 0.5])?);

    let a: Vec<f64> = (0..30).map(|i| 10.0 + i as f64).collect();
    let b: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let w = wilcoxon_signed_rank(&a, &b)?;
    println!(
        "signed-rank on a dominant sample: statistic {}, significant: {}",
        w.statistic, w.significant
    );
    Ok(())
}

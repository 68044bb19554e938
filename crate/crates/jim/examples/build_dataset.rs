//! Score a small query log against an event list and assemble the joint
//! dataset, printing which queries survive the similarity threshold and
//! which event each one is attributed to.
//!
//! Run with: `cargo run --example build_dataset`

use jim::ingest::{build_joint_dataset, BuildConfig, EventRecord, QueryRecord};

fn main() -> jim::Result<()> {
    let events = vec![
        EventRecord {
            id: 0,
            title: "trump indiana primaries".into(),
            body: "republican primary results from indiana".into(),
            timestamp: 0,
        },
        EventRecord {
            id: 1,
            title: "panama papers leaked".into(),
            body: "offshore documents leaked from panama law firm".into(),
            timestamp: 0,
        },
    ];
    let queries = vec![
        ("trump indiana primaries", 3_600),
        ("indiana primaries polls", 9_000),
        ("trump indiana result", 14_400),
        ("panama papers leaked", 25_200),
        ("panama papers list of names", 32_400),
        ("weather tomorrow", 36_000),
    ]
    .into_iter()
    .map(|(text, timestamp)| QueryRecord {
        text: text.into(),
        timestamp,
    })
    .collect::<Vec<_>>();

    let cfg = BuildConfig {
        threshold: 1.0,
        ..BuildConfig::default()
    };
    let dataset = build_joint_dataset(&events, &queries, &cfg)?;
    println!(
        "kept {} of {} queries; window [{}, {}] hours",
        dataset.sequence.len(),
        queries.len(),
        dataset.sequence.t_start,
        dataset.sequence.t_end
    );
    for (p, text) in dataset.sequence.points().iter().zip(&dataset.texts) {
        println!(
            "t={:>5.2}h  event {} ({:?})  similarity {:.4}  {:?}",
            p.t, p.d, dataset.events[p.d].title, p.x, text
        );
    }
    for (id, count, avg) in dataset.summary() {
        println!("event {id}: {count} queries kept, average similarity {avg:.4}");
    }
    Ok(())
}

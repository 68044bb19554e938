//! Compare the fitted model against the baseline predictors on the
//! event-level prediction tasks (top event and event ranking), using data
//! simulated from a strongly self-exciting ground truth.
//!
//! Run with: `cargo run --release --example forecasting_tasks`

use jim::estimate::{fit, FitConfig};
use jim::forecast::{bin_counts, ranking_metrics, run_task, ForecastConfig, ScoreSource};
use jim::model::ModelParams;
use jim::simulate::{simulate, SimConfig};

fn main() -> jim::Result<()> {
    let truth = ModelParams {
        eta: vec![0.4; 3],
        alpha: vec![1.0; 3],
        mic: vec![
            vec![0.7, 0.05, 0.05],
            vec![0.05, 0.7, 0.05],
            vec![0.05, 0.05, 0.7],
        ],
        rho: vec![3.0; 3],
        mu: vec![2.0; 3],
        phi: vec![1.0; 3],
        psi: vec![0.5; 3],
    };
    let sim = SimConfig::new(0.0, 300.0, 7)?;
    let data = simulate(&truth, &sim)?;
    println!("simulated {} points on 3 channels", data.len());

    let model = fit(
        &data,
        &FitConfig {
            max_iters: 2500,
            restarts: 0,
            ..FitConfig::default()
        },
    )?;
    println!("fitted objective {:.2}", model.objective);

    let cfg = ForecastConfig::default();
    let frame = bin_counts(&data, cfg.bin_width)?;
    let split = (frame.n_bins() as f64 * cfg.split_fraction).floor() as usize;
    println!(
        "{} hourly bins, holding out the last {} for testing",
        frame.n_bins(),
        frame.n_bins() - split
    );

    let sources: Vec<(&str, ScoreSource)> = vec![
        ("NF", ScoreSource::NaiveFrequency),
        ("AR", ScoreSource::Autoregression { differenced: false }),
        ("ARD", ScoreSource::Autoregression { differenced: true }),
        ("VAR", ScoreSource::VectorAutoregression),
        (
            "fitted model",
            ScoreSource::Model {
                params: &model.params,
                seq: &data,
            },
        ),
        ("oracle", ScoreSource::Oracle),
    ];
    println!("{:<14} {:>9} {:>9} {:>9}", "method", "accuracy", "ndcg", "rbo");
    for (name, source) in &sources {
        let out = run_task(source, &frame, split, &cfg)?;
        let m = ranking_metrics(&out, cfg.rbo_p)?;
        println!(
            "{name:<14} {:>9.4} {:>9.4} {:>9.4}",
            m.accuracy, m.ndcg_mean, m.rbo_mean
        );
    }
    Ok(())
}

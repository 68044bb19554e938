//! Evaluate the influence function of a small hand-made sequence and print
//! it as CSV, together with the closed-form compensator per channel.
//!
//! Run with: `cargo run --example intensity_trace`

use jim::intensity::{compensator_at, intensity_trace, log_likelihood};
use jim::model::{MarkedPoint, ModelParams, PointSequence};

fn main() -> jim::Result<()> {
    let params = ModelParams {
        eta: vec![0.5, 0.25],
        alpha: vec![1.0, 2.0],
        mic: vec![vec![0.4, 0.1], vec![0.2, 0.3]],
        rho: vec![3.0, 3.0],
        mu: vec![2.0, 2.0],
        phi: vec![1.0, 1.0],
        psi: vec![0.5, 0.5],
    };
    let points = vec![
        MarkedPoint { t: 1.0, d: 0, x: 1.5 },
        MarkedPoint { t: 2.5, d: 1, x: 0.4 },
        MarkedPoint { t: 2.9, d: 0, x: 3.0 },
        MarkedPoint { t: 6.0, d: 1, x: 0.9 },
    ];
    let seq = PointSequence::new(points, 0.0, 8.0, 2)?;

    let trace = intensity_trace(&params, &seq, 0.5)?;
    print!("{}", trace.to_csv());

    for j in 0..2 {
        println!(
            "# compensator channel {j}: {:.6}  (observed points: {})",
            compensator_at(&params, &seq, j, seq.t_end)?,
            seq.channel_count(j)
        );
    }
    println!("# log-likelihood: {:.6}", log_likelihood(&params, &seq)?);
    Ok(())
}

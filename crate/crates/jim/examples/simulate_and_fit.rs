//! Simulate a two-channel process and recover its parameters by penalized
//! maximum likelihood.
//!
//! Run with: `cargo run --release --example simulate_and_fit`

use jim::estimate::{fit, FitConfig};
use jim::intensity::influence_summary;
use jim::model::ModelParams;
use jim::simulate::{simulate, SimConfig};

fn main() -> jim::Result<()> {
    let truth = ModelParams {
        eta: vec![0.3, 0.3],
        alpha: vec![1.0, 1.0],
        mic: vec![vec![0.5, 0.1], vec![0.1, 0.5]],
        rho: vec![3.0, 3.0],
        mu: vec![2.0, 2.0],
        phi: vec![1.0, 1.0],
        psi: vec![0.5, 0.5],
    };
    let sim = SimConfig::new(0.0, 2000.0, 42)?;
    let data = simulate(&truth, &sim)?;
    println!("simulated {} points over {} hours", data.len(), data.window());

    let cfg = FitConfig {
        max_iters: 4000,
        restarts: 1,
        seed: 1,
        ..FitConfig::default()
    };
    let result = fit(&data, &cfg)?;
    println!(
        "objective {:.4} after {} iterations (converged: {})",
        result.objective, result.iterations, result.converged
    );
    let p = &result.params;
    for j in 0..2 {
        println!(
            "channel {j}: eta {:.3} (true 0.3), alpha {:.3} (true 1.0), direct nu {:.3} (true 0.5)",
            p.eta[j], p.alpha[j], p.mic[j][j]
        );
    }
    let summary = influence_summary(p)?;
    println!(
        "spectral radius {:.3}; direct mean {:.3} vs indirect mean {:.3}",
        summary.spectral_radius, summary.direct_mean, summary.indirect_mean
    );
    Ok(())
}

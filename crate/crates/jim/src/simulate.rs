//! Ogata-thinning simulation of the marked multivariate process.
//!
//! With exponential kernels the total intensity only decays between
//! arrivals, so the current right-limit total is a valid local upper bound
//! for the thinning proposal. All randomness comes from a seeded ChaCha8
//! generator, so runs are reproducible from the seed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{JimError, Result};
use crate::model::{pareto_inverse_cdf, MarkedPoint, ModelParams, PointSequence};

/// Name of the random generator recorded in simulation-derived artifacts.
pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Safety cap on the number of generated points.
    pub max_points: usize,
}

impl SimConfig {
    pub fn new(t_start: f64, t_end: f64, seed: u64) -> Result<Self> {
        if !(t_start < t_end) {
            return Err(JimError::Config(format!(
                "simulation window [{t_start}, {t_end}] is empty or inverted"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            seed,
            max_points: 10_000_000,
        })
    }
}

/// Simulate a marked point sequence from the model over the configured window.
pub fn simulate(params: &ModelParams, sim: &SimConfig) -> Result<PointSequence> {
    params.validate_elementwise()?;
    let spr = crate::intensity::spectral_radius(&params.mic)?;
    if spr >= 1.0 {
        return Err(JimError::Unstable {
            spectral_radius: spr,
        });
    }
    if !(sim.t_start < sim.t_end) {
        return Err(JimError::Config("invalid simulation window".into()));
    }
    let k = params.k();
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let mut points: Vec<MarkedPoint> = Vec::new();
    // excitation[j] = lambda_j - eta_j at the current time (right limit)
    let mut excitation = vec![0.0f64; k];
    let mut t = sim.t_start;
    loop {
        let bound: f64 = params.eta.iter().sum::<f64>() + excitation.iter().sum::<f64>();
        if bound <= 0.0 {
            break; // no immigrants, no offspring
        }
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let dt = -u.ln() / bound;
        let candidate = t + dt;
        if candidate > sim.t_end {
            break;
        }
        // decay excitation to the candidate time
        for j in 0..k {
            excitation[j] *= (-params.alpha[j] * dt).exp();
        }
        t = candidate;
        let lambdas: Vec<f64> = (0..k).map(|j| params.eta[j] + excitation[j]).collect();
        let total: f64 = lambdas.iter().sum();
        let accept: f64 = rng.gen_range(0.0..1.0);
        if accept * bound > total {
            continue;
        }
        // pick the channel proportionally to its intensity
        let mut pick: f64 = rng.gen_range(0.0..1.0) * total;
        let mut d = k - 1;
        for (j, l) in lambdas.iter().enumerate() {
            if pick < *l {
                d = j;
                break;
            }
            pick -= l;
        }
        let mark_u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let x = pareto_inverse_cdf(params.rho[d], params.mu[d], mark_u);
        let mut point_t = t;
        if let Some(last) = points.last() {
            if point_t <= last.t {
                point_t = last.t + 1e-9;
                if point_t > sim.t_end {
                    break;
                }
                t = point_t;
            }
        }
        points.push(MarkedPoint { t: point_t, d, x });
        if points.len() >= sim.max_points {
            return Err(JimError::Numerical(format!(
                "simulation exceeded the {} point cap",
                sim.max_points
            )));
        }
        // the new point excites every channel
        let g = params.impact_of(d, x)?;
        for j in 0..k {
            excitation[j] += params.mic[j][d] * g * params.alpha[j];
        }
    }
    PointSequence::new(points, sim.t_start, sim.t_end, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::average_influence;

    fn diag_params(k: usize, eta: f64, alpha: f64, nu: f64) -> ModelParams {
        ModelParams {
            eta: vec![eta; k],
            alpha: vec![alpha; k],
            mic: (0..k)
                .map(|j| (0..k).map(|i| if i == j { nu } else { 0.0 }).collect())
                .collect(),
            rho: vec![3.0; k],
            mu: vec![2.0; k],
            phi: vec![1.0; k],
            psi: vec![0.5; k],
        }
    }

    #[test]
    fn homogeneous_count_within_tolerance() {
        let params = diag_params(1, 2.0, 1.0, 0.0);
        let sim = SimConfig::new(0.0, 1000.0, 42).unwrap();
        let s = simulate(&params, &sim).unwrap();
        let expected: f64 = 2000.0;
        let slack = 4.0 * expected.sqrt();
        assert!(
            (s.len() as f64 - expected).abs() < slack,
            "count {} outside {expected} +/- {slack}",
            s.len()
        );
    }

    #[test]
    fn zero_base_rate_yields_empty_sequence() {
        let mut params = diag_params(2, 0.0, 1.0, 0.8);
        params.mic[0][1] = 0.1;
        let sim = SimConfig::new(0.0, 500.0, 1).unwrap();
        assert!(simulate(&params, &sim).unwrap().is_empty());
    }

    #[test]
    fn branching_ratio_between_channels() {
        // channel 1 excited only by channel 0; expected offspring ratio 0.8
        let mut ratios = Vec::new();
        for seed in 0..20 {
            let params = ModelParams {
                eta: vec![1.0, 0.0],
                alpha: vec![1.0, 1.0],
                mic: vec![vec![0.0, 0.0], vec![0.8, 0.0]],
                rho: vec![3.0, 3.0],
                mu: vec![2.0, 2.0],
                phi: vec![1.0, 1.0],
                psi: vec![0.0, 0.0],
            };
            let sim = SimConfig::new(0.0, 5000.0, seed).unwrap();
            let s = simulate(&params, &sim).unwrap();
            let c0 = s.channel_count(0) as f64;
            let c1 = s.channel_count(1) as f64;
            ratios.push(c1 / c0);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 0.8).abs() / 0.8 < 0.15, "mean ratio {mean}");
    }

    #[test]
    fn empirical_rate_matches_average_influence() {
        let params = diag_params(2, 0.4, 1.0, 0.5);
        let target = average_influence(&params).unwrap();
        let horizon = 5000.0 / target.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut rates = vec![0.0; 2];
        let n_seeds = 10;
        for seed in 0..n_seeds {
            let sim = SimConfig::new(0.0, horizon, 100 + seed).unwrap();
            let s = simulate(&params, &sim).unwrap();
            for j in 0..2 {
                rates[j] += s.channel_count(j) as f64 / horizon / n_seeds as f64;
            }
        }
        for j in 0..2 {
            assert!(
                (rates[j] - target[j]).abs() / target[j] < 0.10,
                "rate {} vs {}",
                rates[j],
                target[j]
            );
        }
    }

    #[test]
    fn marks_have_expected_mean() {
        let params = diag_params(1, 1.0, 1.0, 0.3);
        let sim = SimConfig::new(0.0, 4000.0, 9).unwrap();
        let s = simulate(&params, &sim).unwrap();
        let marks: Vec<f64> = s.points().iter().map(|p| p.x).collect();
        let n = marks.len() as f64;
        let mean = marks.iter().sum::<f64>() / n;
        let var = marks.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let se = (var / n).sqrt();
        let expected = params.mu[0] / (params.rho[0] - 1.0);
        assert!((mean - expected).abs() < 3.0 * se, "mark mean {mean} vs {expected}");
    }

    #[test]
    fn identical_seeds_identical_sequences() {
        let params = diag_params(3, 0.3, 1.5, 0.4);
        let sim = SimConfig::new(0.0, 300.0, 77).unwrap();
        let a = simulate(&params, &sim).unwrap();
        let b = simulate(&params, &sim).unwrap();
        assert_eq!(a.points(), b.points());
        assert!(!a.is_empty());
    }

    #[test]
    fn unstable_model_is_refused() {
        let params = diag_params(1, 0.5, 1.0, 1.1);
        let sim = SimConfig::new(0.0, 10.0, 0).unwrap();
        assert!(matches!(
            simulate(&params, &sim),
            Err(JimError::Unstable { .. })
        ));
    }
}

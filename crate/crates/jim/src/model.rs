//! Domain types and the elementary closed-form functions of the joint
//! influence model: exponential decay, cumulative decay, the Pareto mark
//! density and the affine unit-mean impact function.
//!
//! Times are fractional hours; event channels are 0-based indices.

use crate::error::{JimError, Result};

/// Strict margin used when enforcing `rho > 2`.
pub const RHO_MARGIN: f64 = 1e-6;

/// One influenced query submission: time `t` (hours), triggering-event
/// channel `d`, and intent-match score `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedPoint {
    pub t: f64,
    pub d: usize,
    pub x: f64,
}

/// A time-ordered sequence of marked points over an observation window
/// `[t_start, t_end]` with `k` event channels.
#[derive(Debug, Clone)]
pub struct PointSequence {
    points: Vec<MarkedPoint>,
    pub t_start: f64,
    pub t_end: f64,
    pub k: usize,
}

impl PointSequence {
    pub fn new(points: Vec<MarkedPoint>, t_start: f64, t_end: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(JimError::InvalidSequence("k must be positive".into()));
        }
        if !(t_start < t_end) {
            return Err(JimError::InvalidSequence(format!(
                "window [{t_start}, {t_end}] is empty or inverted"
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            if !(p.t > prev) {
                return Err(JimError::InvalidSequence(format!(
                    "points not strictly increasing at index {i} (t={})",
                    p.t
                )));
            }
            if p.t < t_start || p.t > t_end {
                return Err(JimError::InvalidSequence(format!(
                    "point {i} at t={} outside window [{t_start}, {t_end}]",
                    p.t
                )));
            }
            if p.d >= k {
                return Err(JimError::InvalidSequence(format!(
                    "point {i} has channel {} but k={k}",
                    p.d
                )));
            }
            if !(p.x >= 0.0) {
                return Err(JimError::InvalidSequence(format!(
                    "point {i} has negative mark {}",
                    p.x
                )));
            }
            prev = p.t;
        }
        Ok(Self {
            points,
            t_start,
            t_end,
            k,
        })
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points on channel `j`.
    pub fn channel_count(&self, j: usize) -> usize {
        self.points.iter().filter(|p| p.d == j).count()
    }

    pub fn window(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Full parameter set of the model for `k` event channels.
///
/// `mic[j][i]` is the mutual-influence coefficient of triggering channel `i`
/// on influenced channel `j`; the diagonal is direct influence, off-diagonal
/// entries are indirect influence.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub eta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub mic: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ModelParams {
    pub fn k(&self) -> usize {
        self.eta.len()
    }

    /// Elementwise validity: sign constraints, `rho > 2`, non-degenerate
    /// impact. Does not check the spectral radius (see [`validate`]).
    ///
    /// [`validate`]: ModelParams::validate
    pub fn validate_elementwise(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(JimError::InvalidParameter("k must be positive".into()));
        }
        for (name, v) in [
            ("alpha", &self.alpha),
            ("rho", &self.rho),
            ("mu", &self.mu),
            ("phi", &self.phi),
            ("psi", &self.psi),
        ] {
            if v.len() != k {
                return Err(JimError::InvalidParameter(format!(
                    "{name} has length {} but k={k}",
                    v.len()
                )));
            }
        }
        if self.mic.len() != k || self.mic.iter().any(|row| row.len() != k) {
            return Err(JimError::InvalidParameter(format!("mic is not {k}x{k}")));
        }
        for j in 0..k {
            if !(self.eta[j] >= 0.0) {
                return Err(JimError::InvalidParameter(format!("eta[{j}] must be >= 0")));
            }
            if !(self.alpha[j] > 0.0) {
                return Err(JimError::InvalidParameter(format!("alpha[{j}] must be > 0")));
            }
            if !(self.rho[j] > 2.0 + RHO_MARGIN) {
                return Err(JimError::InvalidParameter(format!(
                    "rho[{j}] must exceed 2 by at least {RHO_MARGIN}"
                )));
            }
            if !(self.mu[j] > 0.0) {
                return Err(JimError::InvalidParameter(format!("mu[{j}] must be > 0")));
            }
            if !(self.phi[j] >= 0.0) || !(self.psi[j] >= 0.0) {
                return Err(JimError::InvalidParameter(format!(
                    "phi[{j}] and psi[{j}] must be >= 0"
                )));
            }
            if self.phi[j] + self.psi[j] == 0.0 {
                return Err(JimError::InvalidParameter(format!(
                    "phi[{j}] + psi[{j}] must be > 0 (degenerate impact)"
                )));
            }
            for i in 0..k {
                if !(self.mic[j][i] >= 0.0) {
                    return Err(JimError::InvalidParameter(format!(
                        "mic[{j}][{i}] must be >= 0"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Full validity including the stability condition `Spr(MIC) < 1`.
    pub fn validate(&self) -> Result<()> {
        self.validate_elementwise()?;
        let spr = crate::intensity::spectral_radius(&self.mic)?;
        if spr >= 1.0 {
            return Err(JimError::Unstable {
                spectral_radius: spr,
            });
        }
        Ok(())
    }

    /// Impact value `g_d(x)` for triggering channel `d`.
    pub fn impact_of(&self, d: usize, x: f64) -> Result<f64> {
        impact(self.rho[d], self.mu[d], self.phi[d], self.psi[d], x)
    }
}

/// Exponential decay kernel `w(dt) = alpha * exp(-alpha * dt)`.
pub fn decay(alpha: f64, dt: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(JimError::InvalidParameter("decay: alpha must be > 0".into()));
    }
    if !(dt >= 0.0) {
        return Err(JimError::InvalidParameter("decay: dt must be >= 0".into()));
    }
    Ok(alpha * (-alpha * dt).exp())
}

/// Cumulative decay `1 - exp(-alpha * dt)`, the integral of [`decay`] over `[0, dt]`.
pub fn cumulative_decay(alpha: f64, dt: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(JimError::InvalidParameter(
            "cumulative_decay: alpha must be > 0".into(),
        ));
    }
    if !(dt >= 0.0) {
        return Err(JimError::InvalidParameter(
            "cumulative_decay: dt must be >= 0".into(),
        ));
    }
    Ok(1.0 - (-alpha * dt).exp())
}

/// Pareto mark density `f(x) = rho * mu^rho / (x + mu)^(rho+1)` on `[0, inf)`.
pub fn pareto_pdf(rho: f64, mu: f64, x: f64) -> Result<f64> {
    if !(rho > 2.0) {
        return Err(JimError::InvalidParameter("pareto_pdf: rho must be > 2".into()));
    }
    if !(mu > 0.0) {
        return Err(JimError::InvalidParameter("pareto_pdf: mu must be > 0".into()));
    }
    if !(x >= 0.0) {
        return Err(JimError::InvalidParameter("pareto_pdf: x must be >= 0".into()));
    }
    Ok(rho * mu.powf(rho) / (x + mu).powf(rho + 1.0))
}

/// Inverse CDF of the Pareto mark distribution: `x = mu * (u^(-1/rho) - 1)`
/// for `u` uniform on (0, 1).
pub fn pareto_inverse_cdf(rho: f64, mu: f64, u: f64) -> f64 {
    mu * (u.powf(-1.0 / rho) - 1.0)
}

/// Affine impact function with unit mean under the matching Pareto density:
/// `g(x) = (rho-1)(rho-2) / (phi(rho-1)(rho-2) + psi*mu*(rho-2)) * (phi + psi*x)`.
pub fn impact(rho: f64, mu: f64, phi: f64, psi: f64, x: f64) -> Result<f64> {
    if !(rho > 2.0) {
        return Err(JimError::InvalidParameter("impact: rho must be > 2".into()));
    }
    if !(mu > 0.0) {
        return Err(JimError::InvalidParameter("impact: mu must be > 0".into()));
    }
    if !(phi >= 0.0) || !(psi >= 0.0) {
        return Err(JimError::InvalidParameter(
            "impact: phi and psi must be >= 0".into(),
        ));
    }
    if phi + psi == 0.0 {
        return Err(JimError::InvalidParameter(
            "impact: phi + psi must be > 0 (degenerate impact)".into(),
        ));
    }
    if !(x >= 0.0) {
        return Err(JimError::InvalidParameter("impact: x must be >= 0".into()));
    }
    let num = (rho - 1.0) * (rho - 2.0);
    let den = phi * (rho - 1.0) * (rho - 2.0) + psi * mu * (rho - 2.0);
    Ok(num / den * (phi + psi * x))
}

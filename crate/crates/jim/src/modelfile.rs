//! Reading and writing fitted models as JSON.
//!
//! Writing is hand-formatted with 12 significant digits per number so that
//! identical fits produce byte-identical files; reading goes through serde
//! and tolerates any valid JSON number formatting.

use std::path::Path;

use serde::Deserialize;

use crate::error::{JimError, Result};
use crate::model::ModelParams;
use crate::util::format_sig;

/// A fitted model plus the fit diagnostics worth persisting.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub params: ModelParams,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

const SIG_DIGITS: usize = 12;

fn vec_json(v: &[f64]) -> String {
    let inner: Vec<String> = v.iter().map(|x| format_sig(*x, SIG_DIGITS)).collect();
    format!("[{}]", inner.join(","))
}

/// Serialize to the canonical model-file JSON string.
pub fn to_json(m: &ModelFile) -> String {
    let p = &m.params;
    let mic_rows: Vec<String> = p.mic.iter().map(|row| vec_json(row)).collect();
    format!(
        concat!(
            "{{\"k\":{},\"eta\":{},\"alpha\":{},\"mic\":[{}],",
            "\"rho\":{},\"mu\":{},\"phi\":{},\"psi\":{},",
            "\"objective\":{},\"converged\":{},\"iterations\":{}}}\n"
        ),
        p.k(),
        vec_json(&p.eta),
        vec_json(&p.alpha),
        mic_rows.join(","),
        vec_json(&p.rho),
        vec_json(&p.mu),
        vec_json(&p.phi),
        vec_json(&p.psi),
        format_sig(m.objective, SIG_DIGITS),
        m.converged,
        m.iterations,
    )
}

#[derive(Deserialize)]
struct RawModel {
    k: usize,
    eta: Vec<f64>,
    alpha: Vec<f64>,
    mic: Vec<Vec<f64>>,
    rho: Vec<f64>,
    mu: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    objective: f64,
    converged: bool,
    iterations: usize,
}

/// Parse a model file, validating shapes and parameter constraints.
pub fn from_json(text: &str) -> Result<ModelFile> {
    let raw: RawModel = serde_json::from_str(text)
        .map_err(|e| JimError::Parse {
            path: "<model json>".into(),
            line: e.line(),
            msg: e.to_string(),
        })?;
    let params = ModelParams {
        eta: raw.eta,
        alpha: raw.alpha,
        mic: raw.mic,
        rho: raw.rho,
        mu: raw.mu,
        phi: raw.phi,
        psi: raw.psi,
    };
    if params.k() != raw.k {
        return Err(JimError::InvalidParameter(format!(
            "model file declares k={} but eta has length {}",
            raw.k,
            params.k()
        )));
    }
    params.validate_elementwise()?;
    Ok(ModelFile {
        params,
        objective: raw.objective,
        converged: raw.converged,
        iterations: raw.iterations,
    })
}

pub fn write_model(path: &Path, m: &ModelFile) -> Result<()> {
    std::fs::write(path, to_json(m)).map_err(|e| JimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| JimError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    from_json(&text).map_err(|e| match e {
        JimError::Parse { line, msg, .. } => JimError::Parse {
            path: path.display().to_string(),
            line,
            msg,
        },
        other => other,
    })
}

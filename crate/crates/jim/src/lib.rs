//! Joint influence modeling of external events and search queries.
//!
//! The model is a marked multivariate Hawkes process: each external event
//! is a channel whose influence function (intensity) jumps when a related
//! query arrives and decays exponentially afterwards, with a mutual-influence
//! matrix coupling the channels and a Pareto-distributed intent-match mark
//! scaling each jump. The crate covers the full pipeline:
//!
//! - [`ingest`] scores a raw query log against an event list and assembles
//!   the joint dataset;
//! - [`model`] and [`intensity`] define the process and its likelihood;
//! - [`estimate`] fits parameters by penalized maximum likelihood
//!   (Nelder–Mead over a log-space reparameterization);
//! - [`simulate`] generates synthetic sequences by Ogata thinning;
//! - [`forecast`] and [`metrics`] run the prediction tasks and baselines;
//! - [`cli`] wires everything into reproducible commands, exposed by the
//!   thin `jim` binary.
//!
//! Times are fractional hours throughout. See the `examples/` directory for
//! a runnable tour of each capability.

pub mod cli;
pub mod error;
pub mod estimate;
pub mod forecast;
pub mod ingest;
pub mod intensity;
pub mod metrics;
pub mod model;
pub mod modelfile;
pub mod simulate;
pub mod util;

pub use error::{JimError, Result};
pub use model::{MarkedPoint, ModelParams, PointSequence};

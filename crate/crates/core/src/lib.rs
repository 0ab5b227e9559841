//! Sojourn-time distribution of a single-server queue whose service rate
//! switches between two levels around a queue-length threshold, with the
//! switch applied either immediately or at random inspection epochs.
//!
//! [`SojournTransform`] is the entry point for the Laplace transform and the
//! mean; [`inversion`] turns the transform into densities and [`simulator`]
//! provides an independent check.

pub mod cli;
pub mod error;
pub mod inversion;
pub mod linalg;
pub mod matrix_gf;
pub mod model;
pub mod simulator;
pub mod sojourn_continuous;
pub mod sojourn_inspection;
pub mod stationary;

use num_complex::Complex64;

pub use error::{Error, Result};
pub use model::{Gamma, QueueParams, Regime};

use sojourn_inspection::InspectionModel;

/// Stationary sojourn-time transform for any regime, with the per-parameter
/// work done once.
#[derive(Debug, Clone)]
pub enum SojournTransform {
    Continuous(QueueParams),
    Inspection(Box<InspectionModel>),
}

impl SojournTransform {
    pub fn new(params: &QueueParams) -> Result<Self> {
        let p = params.validate()?;
        Ok(match p.regime {
            Regime::Continuous => SojournTransform::Continuous(p),
            _ => SojournTransform::Inspection(Box::new(InspectionModel::new(&p)?)),
        })
    }

    pub fn params(&self) -> &QueueParams {
        match self {
            SojournTransform::Continuous(p) => p,
            SojournTransform::Inspection(m) => m.params(),
        }
    }

    /// `E[exp(-s S*)]`.
    pub fn lt(&self, s: Complex64) -> Result<Complex64> {
        match self {
            SojournTransform::Continuous(p) => sojourn_continuous::sojourn_lt_continuous(p, s),
            SojournTransform::Inspection(m) => m.lt(s),
        }
    }

    /// `E[S*]` from the analytic recursion.
    pub fn mean(&self) -> Result<f64> {
        match self {
            SojournTransform::Continuous(p) => sojourn_continuous::mean_sojourn_continuous(p),
            SojournTransform::Inspection(m) => m.mean(),
        }
    }
}

pub fn sojourn_lt(params: &QueueParams, s: Complex64) -> Result<Complex64> {
    SojournTransform::new(params)?.lt(s)
}

pub fn mean_sojourn(params: &QueueParams) -> Result<f64> {
    SojournTransform::new(params)?.mean()
}

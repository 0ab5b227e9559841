//! Queue parameters shared by every pipeline.
//!
//! Customers arrive as a Poisson stream with rate `lambda` and need
//! exponential(1) work. The server works at `mu0` while the number in system
//! is at most the threshold `k`, and at `mu1` above it. How quickly the rate
//! follows the queue length is set by the inspection [`Regime`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the controller observes the queue length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// The rate switches the instant the threshold is crossed.
    Continuous,
    /// Inspections form a Poisson stream with rate `gamma`.
    Exponential,
    /// Inter-inspection times are Erlang(2, `gamma`).
    Erlang2,
}

impl Regime {
    /// Number of phases carried per queue level.
    pub fn phases(self) -> usize {
        match self {
            Regime::Continuous => 1,
            Regime::Exponential => 2,
            Regime::Erlang2 => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Continuous => "continuous",
            Regime::Exponential => "exponential",
            Regime::Erlang2 => "erlang2",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" => Ok(Regime::Continuous),
            "exponential" | "exp" => Ok(Regime::Exponential),
            "erlang2" | "erlang-2" => Ok(Regime::Erlang2),
            other => Err(Error::Regime(format!("unknown regime `{other}`"))),
        }
    }
}

/// Inspection rate. Continuous inspection is a tag, never an infinite float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Continuous,
    Rate(f64),
}

impl Gamma {
    pub fn rate(self) -> Option<f64> {
        match self {
            Gamma::Continuous => None,
            Gamma::Rate(g) => Some(g),
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Continuous => f.write_str("continuous"),
            Gamma::Rate(g) => write!(f, "{g}"),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("continuous") {
            return Ok(Gamma::Continuous);
        }
        s.parse::<f64>()
            .map(Gamma::Rate)
            .map_err(|_| Error::Domain(format!("gamma must be a number or `continuous`, got `{s}`")))
    }
}

/// Parameters of the threshold queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParams {
    pub lambda: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub gamma: Gamma,
    /// Threshold; signed so that a negative value can be reported rather than
    /// wrapped.
    pub k: i64,
    pub regime: Regime,
}

impl QueueParams {
    pub fn continuous(lambda: f64, mu0: f64, mu1: f64, k: i64) -> Self {
        QueueParams { lambda, mu0, mu1, gamma: Gamma::Continuous, k, regime: Regime::Continuous }
    }

    pub fn exponential(lambda: f64, mu0: f64, mu1: f64, gamma: f64, k: i64) -> Self {
        QueueParams { lambda, mu0, mu1, gamma: Gamma::Rate(gamma), k, regime: Regime::Exponential }
    }

    pub fn erlang2(lambda: f64, mu0: f64, mu1: f64, gamma: f64, k: i64) -> Self {
        QueueParams { lambda, mu0, mu1, gamma: Gamma::Rate(gamma), k, regime: Regime::Erlang2 }
    }

    /// Checks every invariant and returns the parameters unchanged.
    ///
    /// Only `lambda < mu1` is required for stability; `mu0` may be below
    /// `lambda` and need not be smaller than `mu1`.
    pub fn validate(&self) -> Result<Self> {
        for (name, v) in [("lambda", self.lambda), ("mu0", self.mu0), ("mu1", self.mu1)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be a positive finite rate, got {v}")));
            }
        }
        if self.k < 0 {
            return Err(Error::Domain(format!("threshold K must be non-negative, got {}", self.k)));
        }
        match (self.regime, self.gamma) {
            (Regime::Continuous, Gamma::Continuous) => {}
            (Regime::Continuous, Gamma::Rate(g)) => {
                return Err(Error::Regime(format!("continuous regime takes no finite gamma (got {g})")));
            }
            (r, Gamma::Continuous) => {
                return Err(Error::Regime(format!("{r} regime needs a finite gamma")));
            }
            (_, Gamma::Rate(g)) => {
                if !(g.is_finite() && g > 0.0) {
                    return Err(Error::Domain(format!("gamma must be a positive finite rate, got {g}")));
                }
            }
        }
        if self.lambda >= self.mu1 {
            return Err(Error::Stability { lambda: self.lambda, mu1: self.mu1 });
        }
        Ok(*self)
    }

    /// Threshold as an index. Only meaningful after [`validate`](Self::validate).
    pub fn threshold(&self) -> usize {
        usize::try_from(self.k).unwrap_or(0)
    }

    /// Inspection rate, or `0.0` under continuous inspection.
    pub fn gamma_rate(&self) -> f64 {
        self.gamma.rate().unwrap_or(0.0)
    }

    /// Service rate used when `count` customers are present and the rate
    /// follows the threshold rule.
    pub fn rate_for(&self, count: usize) -> f64 {
        if count > self.threshold() {
            self.mu1
        } else {
            self.mu0
        }
    }
}

/// A tagged customer at position `n` with `m` customers behind it.
/// `n == 0` means the customer has left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaggedPosition {
    pub n: usize,
    pub m: usize,
}

impl TaggedPosition {
    pub fn departed(&self) -> bool {
        self.n == 0
    }

    /// Customers in the system, tagged one included.
    pub fn in_system(&self) -> usize {
        self.n + self.m
    }
}

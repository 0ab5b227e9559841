//! Numerical Laplace inversion by Euler summation of the Bromwich integral,
//! and moments by differentiating the transform at the origin.
//!
//! For a transform `g` the trapezoidal rule on the contour `Re s = A / (2t)`
//! gives the alternating series
//!
//! ```text
//! f(t) ~ e^{A/2} / t * [ Re g(A/2t) / 2 + sum_{k>=1} (-1)^k Re g((A + 2 k pi i) / 2t) ]
//! ```
//!
//! with discretisation error about `e^{-A}`. The tail of the series is
//! accelerated by binomial averaging of its partial sums.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMethod {
    EulerSummation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub method: InversionMethod,
    /// Number of partial sums averaged, less one.
    pub terms: usize,
    /// Index of the last partial sum used.
    pub truncation: usize,
    /// Sets the contour abscissa and the accuracy flag threshold.
    pub target_abs_error: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig { method: InversionMethod::EulerSummation, terms: 32, truncation: 48, target_abs_error: 1e-8 }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<Self> {
        if self.terms < 10 {
            return Err(Error::Domain(format!("inversion needs at least 10 terms, got {}", self.terms)));
        }
        if self.truncation < self.terms {
            return Err(Error::Domain(format!(
                "truncation ({}) must not be below terms ({})",
                self.truncation, self.terms
            )));
        }
        if !(self.target_abs_error > 0.0 && self.target_abs_error < 1.0) {
            return Err(Error::Domain(format!("target error must lie in (0, 1), got {}", self.target_abs_error)));
        }
        Ok(*self)
    }

    fn abscissa(&self) -> f64 {
        (1.0 / self.target_abs_error).ln() + 2.0
    }
}

/// One inverted value and the gap between the last two Euler averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverted {
    pub value: f64,
    pub tail_estimate: f64,
}

/// Inverts `transform` at a single `t > 0`.
pub fn invert_at<F>(transform: &F, t: f64, config: &InversionConfig) -> Result<Inverted>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let cfg = config.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("inversion time must be positive, got {t}")));
    }
    let a = cfg.abscissa();
    let m = cfg.terms;
    let n = cfg.truncation - m;

    // partial sums s_0 .. s_{n+m+1}
    let last = n + m + 1;
    let mut partial = Vec::with_capacity(last + 1);
    let mut sum = 0.5 * transform(Complex64::new(a / (2.0 * t), 0.0))?.re;
    partial.push(sum);
    for k in 1..=last {
        let s = Complex64::new(a, 2.0 * k as f64 * PI) / (2.0 * t);
        let term = transform(s)?.re;
        sum += if k % 2 == 0 { term } else { -term };
        partial.push(sum);
    }

    let binom = binomial_weights(m);
    let euler = |start: usize| -> f64 { binom.iter().enumerate().map(|(j, w)| w * partial[start + j]).sum() };
    let scale = (a / 2.0).exp() / t;
    let value = scale * euler(n);
    let next = scale * euler(n + 1);
    Ok(Inverted { value, tail_estimate: (value - next).abs() })
}

/// `C(m, j) / 2^m` for `j = 0..=m`.
fn binomial_weights(m: usize) -> Vec<f64> {
    let mut w = vec![1.0; m + 1];
    for j in 1..=m {
        w[j] = w[j - 1] * (m + 1 - j) as f64 / j as f64;
    }
    let norm = 2f64.powi(m as i32);
    w.iter().map(|x| x / norm).collect()
}

/// Density and distribution function on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Largest tail estimate over both inversions.
    pub max_tail_estimate: f64,
    /// False when some tail estimate exceeds the configured target.
    pub accurate: bool,
}

impl DensityCurve {
    /// Linear interpolation of the CDF, clamped to the grid ends.
    pub fn cdf_at(&self, x: f64) -> f64 {
        match self.t.binary_search_by(|probe| probe.total_cmp(&x)) {
            Ok(i) => self.cdf[i],
            Err(0) => self.cdf[0],
            Err(i) if i == self.t.len() => self.cdf[i - 1],
            Err(i) => {
                let w = (x - self.t[i - 1]) / (self.t[i] - self.t[i - 1]);
                self.cdf[i - 1] + w * (self.cdf[i] - self.cdf[i - 1])
            }
        }
    }
}

/// Inverts `transform` and `transform(s) / s` on every grid point.
pub fn invert_density<F>(transform: &F, t_grid: &[f64], config: &InversionConfig) -> Result<DensityCurve>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    config.validate()?;
    if t_grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("time grid must be strictly ascending".into()));
    }
    let cdf_transform = |s: Complex64| transform(s).map(|v| v / s);
    let points: Vec<(Inverted, Inverted)> = t_grid
        .par_iter()
        .map(|&t| Ok((invert_at(transform, t, config)?, invert_at(&cdf_transform, t, config)?)))
        .collect::<Result<_>>()?;
    let max_tail_estimate = points.iter().fold(0.0f64, |acc, (f, g)| acc.max(f.tail_estimate).max(g.tail_estimate));
    Ok(DensityCurve {
        t: t_grid.to_vec(),
        f: points.iter().map(|p| p.0.value).collect(),
        cdf: points.iter().map(|p| p.1.value).collect(),
        max_tail_estimate,
        accurate: max_tail_estimate <= config.target_abs_error,
    })
}

/// CDF alone, from `transform(s) / s`.
pub fn invert_cdf<F>(transform: &F, t_grid: &[f64], config: &InversionConfig) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let cdf_transform = |s: Complex64| transform(s).map(|v| v / s);
    t_grid.par_iter().map(|&t| Ok(invert_at(&cdf_transform, t, config)?.value)).collect()
}

pub const DEFAULT_MOMENT_STEP: f64 = 1e-4;

/// `E[S^k] = (-1)^k g^(k)(0)` for `k` in 1..=3, by central differences
/// on the real axis with one Richardson step. Orders 2 and 3 widen the step
/// by 10 and 100 to keep rounding error in check.
pub fn moment<F>(transform: &F, order: u32, step: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("moment step must be positive, got {step}")));
    }
    let g = |x: f64| transform(Complex64::new(x, 0.0)).map(|v| v.re);
    let diff = |h: f64| -> Result<f64> {
        Ok(match order {
            1 => (g(h)? - g(-h)?) / (2.0 * h),
            2 => (g(h)? - 2.0 * g(0.0)? + g(-h)?) / (h * h),
            3 => (g(2.0 * h)? - 2.0 * g(h)? + 2.0 * g(-h)? - g(-2.0 * h)?) / (2.0 * h * h * h),
            _ => unreachable!(),
        })
    };
    let h = match order {
        1 => step,
        2 => step * 10.0,
        3 => step * 100.0,
        _ => return Err(Error::Domain(format!("moment order must be 1, 2 or 3, got {order}"))),
    };
    let coarse = diff(h)?;
    let fine = diff(h / 2.0)?;
    let d = (4.0 * fine - coarse) / 3.0;
    Ok(if order % 2 == 1 { -d } else { d })
}

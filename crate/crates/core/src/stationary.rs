//! Stationary queue-length distributions.
//!
//! Under continuous inspection the queue is a birth-death chain with a
//! closed-form distribution. Under exponential or Erlang-2 inspection the
//! service rate (and inspection phase) must be carried along, which gives a
//! quasi-birth-death process: levels above the threshold are matrix-geometric,
//! `pi_{K+h} = R^h pi_K`, and the levels `0..=K` solve a finite linear system.
//!
//! Vectors here are column vectors indexed by phase. For exponential
//! inspection the phase is the service rate (low, high); for Erlang-2 it is
//! `(rate, clock phase)` in the order `00, 01, 10, 11`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{real_spectral_radius, RealMatrix};
use crate::model::{QueueParams, Regime};

/// Closed-form distribution for continuous inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryScalar {
    pub pi0: f64,
    lambda: f64,
    mu0: f64,
    mu1: f64,
    k: usize,
}

impl StationaryScalar {
    /// `P(Q = n)`.
    pub fn probability(&self, n: usize) -> f64 {
        let rho0 = self.lambda / self.mu0;
        if n <= self.k {
            rho0.powi(n as i32) * self.pi0
        } else {
            let rho1 = self.lambda / self.mu1;
            rho0.powi(self.k as i32) * rho1.powi((n - self.k) as i32) * self.pi0
        }
    }

    /// `P(Q >= n)` from the geometric tail.
    pub fn tail(&self, n: usize) -> f64 {
        let rho1 = self.lambda / self.mu1;
        if n > self.k {
            self.probability(n) / (1.0 - rho1)
        } else {
            (n..=self.k).map(|j| self.probability(j)).sum::<f64>() + self.tail(self.k + 1)
        }
    }

    /// Total mass, summing levels `0..=K` and the geometric tail in closed form.
    pub fn total_mass(&self) -> f64 {
        self.tail(0)
    }
}

pub fn stationary_continuous(params: &QueueParams) -> Result<StationaryScalar> {
    let p = params.validate()?;
    if p.regime != Regime::Continuous {
        return Err(Error::Regime("closed-form distribution needs continuous inspection".into()));
    }
    let k = p.threshold();
    let rho0 = p.lambda / p.mu0;
    let head: f64 = (0..=k).map(|n| rho0.powi(n as i32)).sum();
    let tail = p.lambda / (p.mu1 - p.lambda) * rho0.powi(k as i32);
    Ok(StationaryScalar { pi0: 1.0 / (head + tail), lambda: p.lambda, mu0: p.mu0, mu1: p.mu1, k })
}

/// Level-transition matrices of the QBD in column (balance-equation) form:
///
/// ```text
///          - H1 pi_0 + M pi_1     = 0
/// L pi_{n-1} - H2 pi_n + M pi_{n+1} = 0,   1 <= n <= K
/// L pi_{n-1} - H3 pi_n + M pi_{n+1} = 0,   n > K
/// ```
///
/// `gamma2` and `gamma3` carry the inspection moves at levels `<= K` and
/// `> K`: diagonal entries are out-rates, off-diagonal entry `(x, y)` is minus
/// the rate of `y -> x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrixSet {
    pub lambda: RealMatrix,
    pub m: RealMatrix,
    pub gamma2: RealMatrix,
    pub gamma3: RealMatrix,
    pub h1: RealMatrix,
    pub h2: RealMatrix,
    pub h3: RealMatrix,
}

impl RateMatrixSet {
    pub fn new(params: &QueueParams) -> Result<Self> {
        let p = params.validate()?;
        let g = p.gamma_rate();
        let (lambda, m, gamma2, gamma3) = match p.regime {
            Regime::Continuous => {
                return Err(Error::Regime("continuous inspection has no phase structure".into()))
            }
            Regime::Exponential => (
                RealMatrix::from_diagonal_element(2, 2, p.lambda),
                RealMatrix::from_diagonal(&DVector::from_row_slice(&[p.mu0, p.mu1])),
                RealMatrix::from_row_slice(2, 2, &[0.0, -g, 0.0, g]),
                RealMatrix::from_row_slice(2, 2, &[g, 0.0, -g, 0.0]),
            ),
            Regime::Erlang2 => (
                RealMatrix::from_diagonal_element(4, 4, p.lambda),
                RealMatrix::from_diagonal(&DVector::from_row_slice(&[p.mu0, p.mu0, p.mu1, p.mu1])),
                RealMatrix::from_row_slice(4, 4, &[
                     g,  -g, 0.0,  -g,
                    -g,   g, 0.0, 0.0,
                    0.0, 0.0,  g, 0.0,
                    0.0, 0.0, -g,   g,
                ]),
                RealMatrix::from_row_slice(4, 4, &[
                     g,  0.0, 0.0, 0.0,
                    -g,   g,  0.0, 0.0,
                    0.0, -g,   g,  -g,
                    0.0, 0.0, -g,   g,
                ]),
            ),
        };
        let h1 = &lambda + &gamma2;
        let h2 = &m + &lambda + &gamma2;
        let h3 = &m + &lambda + &gamma3;
        Ok(RateMatrixSet { lambda, m, gamma2, gamma3, h1, h2, h3 })
    }

    pub fn dim(&self) -> usize {
        self.lambda.nrows()
    }
}

/// Minimal non-negative solution of `L - H3 R + M R^2 = 0`, closed form for
/// exponential inspection.
pub fn r_matrix_exponential(params: &QueueParams) -> Result<RealMatrix> {
    let p = params.validate()?;
    if p.regime != Regime::Exponential {
        return Err(Error::Regime("2x2 R matrix needs exponential inspection".into()));
    }
    let g = p.gamma_rate();
    let r00 = minimal_root(p.lambda, p.mu0, g);
    Ok(RealMatrix::from_row_slice(2, 2, &[r00, 0.0, g / p.mu1 * r00 / (1.0 - r00), p.lambda / p.mu1]))
}

/// Smaller root of `mu0 x^2 - (mu0 + gamma + lambda) x + lambda`, written as
/// `(lambda/mu0) / larger root` to avoid cancellation.
fn minimal_root(lambda: f64, mu0: f64, gamma: f64) -> f64 {
    let b = (mu0 + gamma + lambda) / (2.0 * mu0);
    let disc = (b * b - lambda / mu0).sqrt();
    (lambda / mu0) / (b + disc)
}

/// Closed-form R for Erlang-2 inspection, phase order `00, 01, 10, 11`.
///
/// The `(4, 1)` entry is the sum of two fractions over one denominator,
/// checked against [`r_matrix_iterative`] in the tests.
pub fn r_matrix_erlang2(params: &QueueParams) -> Result<RealMatrix> {
    let p = params.validate()?;
    if p.regime != Regime::Erlang2 {
        return Err(Error::Regime("4x4 R matrix needs Erlang-2 inspection".into()));
    }
    let (lam, mu0, mu1, g) = (p.lambda, p.mu0, p.mu1, p.gamma_rate());

    let r11 = minimal_root(lam, mu0, g);
    let r21 = g * r11 / (g + lam + mu0 - 2.0 * mu0 * r11);
    let r33 = (mu1 * (2.0 * g + 3.0 * lam + mu1)
        - (mu1 * mu1 * (4.0 * g * g + (lam - mu1).powi(2) + 4.0 * g * (lam + mu1))).sqrt())
        / (4.0 * mu1 * mu1);
    let r34 = lam / mu1 - r33;

    let low = g + lam - mu1 * (r11 + r33 - 1.0);
    let r32 = g * r11 * (-g - lam + mu1 * (r11 + r33 - 1.0)) / (-(low * low) + (g + mu1 * r34).powi(2));

    let d1 = 2.0 * g + lam - mu1 * (r11 + r33 - r34 - 1.0);
    let d2 = lam - mu1 * (r11 + r33 + r34 - 1.0);
    let lead = g * r21 * (g + mu1 * r34);
    let r41 = lead
        * (lam * lam - 2.0 * lam * mu1 * (r33 - 1.0)
            - mu1 * mu1 * (r11 * r11 - (r33 - 1.0).powi(2) + r34 * r34)
            + 2.0 * g * (lam - mu1 * (r33 + r34 - 1.0)))
        / (d1 * d1 * d2 * d2);
    let r42 = g * r11 * (g + mu1 * r34) / (d1 * d2);
    let r31 = (g * (r41 + r21) + mu1 * (r32 * r21 + r41 * r34)) / low;

    #[rustfmt::skip]
    let r = RealMatrix::from_row_slice(4, 4, &[
        r11, 0.0, 0.0, 0.0,
        r21, r11, 0.0, 0.0,
        r31, r32, r33, r34,
        r41, r42, r34, r33,
    ]);
    Ok(r)
}

/// Closed-form R for the regime of `params`.
pub fn r_matrix(params: &QueueParams) -> Result<RealMatrix> {
    match params.regime {
        Regime::Exponential => r_matrix_exponential(params),
        Regime::Erlang2 => r_matrix_erlang2(params),
        Regime::Continuous => Err(Error::Regime("continuous inspection has no R matrix".into())),
    }
}

pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Minimal non-negative solution of `L - H3 R + M R^2 = 0` by the natural
/// fixed-point map `R <- H3^{-1} (L + M R^2)` started from zero.
pub fn r_matrix_iterative(rates: &RateMatrixSet, tol: f64) -> Result<RealMatrix> {
    r_matrix_iterative_with(rates, tol, DEFAULT_MAX_ITERATIONS)
}

pub fn r_matrix_iterative_with(rates: &RateMatrixSet, tol: f64, max_iterations: usize) -> Result<RealMatrix> {
    let d = rates.dim();
    let h3_inv = rates
        .h3
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { context: "H3" })?;
    let mut r = RealMatrix::zeros(d, d);
    for _ in 0..max_iterations {
        let next = &h3_inv * (&rates.lambda + &rates.m * &r * &r);
        let change = (&next - &r).amax();
        r = next;
        if change < tol {
            return Ok(r);
        }
    }
    Err(Error::Convergence { iterations: max_iterations })
}

/// `max |L - H3 R + M R^2|`.
pub fn r_residual(rates: &RateMatrixSet, r: &RealMatrix) -> f64 {
    (&rates.lambda - &rates.h3 * r + &rates.m * r * r).amax()
}

/// Boundary probability vectors `pi_0..=pi_K` and the rate matrix of the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryVector {
    pub boundary: Vec<DVector<f64>>,
    pub r: RealMatrix,
}

impl StationaryVector {
    pub fn threshold(&self) -> usize {
        self.boundary.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    /// `pi_n` for any level, using `R^h pi_K` above the threshold.
    pub fn level(&self, n: usize) -> DVector<f64> {
        let k = self.threshold();
        if n <= k {
            return self.boundary[n].clone();
        }
        let mut v = self.boundary[k].clone();
        for _ in 0..n - k {
            v = &self.r * v;
        }
        v
    }

    /// `P(Q = n)`, summed over phases.
    pub fn level_mass(&self, n: usize) -> f64 {
        self.level(n).sum()
    }

    /// `sum_{k<K} e pi_k + e (I - R)^{-1} pi_K`.
    pub fn total_mass(&self) -> f64 {
        let k = self.threshold();
        let head: f64 = self.boundary[..k].iter().map(|v| v.sum()).sum();
        head + self.tail_from_threshold()
    }

    /// `e (I - R)^{-1} pi_K`, the mass at levels `>= K`.
    pub fn tail_from_threshold(&self) -> f64 {
        let d = self.dim();
        let a = RealMatrix::identity(d, d) - &self.r;
        let x = a.lu().solve(&self.boundary[self.threshold()]).expect("sp(R) < 1");
        x.sum()
    }
}

/// Solves the balance equations of levels `0..=K` with `pi_{K+1} = R pi_K`
/// substituted, the first balance row replaced by the normalization row.
pub fn boundary_probabilities(params: &QueueParams, r: &RealMatrix) -> Result<StationaryVector> {
    let rates = RateMatrixSet::new(params)?;
    let k = params.threshold();
    let d = rates.dim();
    let n = d * (k + 1);
    let mut a = DMatrix::<f64>::zeros(n, n);

    let mut put = |row_level: usize, col_level: usize, block: &RealMatrix| {
        let mut view = a.view_mut((row_level * d, col_level * d), (d, d));
        view += block;
    };
    for level in 0..=k {
        let diag = if level == 0 { &rates.h1 } else { &rates.h2 };
        put(level, level, &(-diag));
        if level > 0 {
            put(level, level - 1, &rates.lambda);
        }
        if level < k {
            put(level, level + 1, &rates.m);
        } else {
            put(level, level, &(&rates.m * r));
        }
    }

    let tail_weights = {
        let inv = (RealMatrix::identity(d, d) - r)
            .try_inverse()
            .ok_or(Error::SingularSystem { context: "I - R" })?;
        DVector::from_element(d, 1.0).transpose() * inv
    };
    for level in 0..k {
        for j in 0..d {
            a[(0, level * d + j)] = 1.0;
        }
    }
    for j in 0..d {
        a[(0, k * d + j)] = tail_weights[j];
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[0] = 1.0;

    let scale = a.amax();
    let lu = a.lu();
    if lu.u().diagonal().iter().any(|p| p.abs() <= 1e-13 * scale) {
        return Err(Error::SingularSystem { context: "boundary balance equations" });
    }
    let x = lu.solve(&rhs).ok_or(Error::SingularSystem { context: "boundary balance equations" })?;
    let boundary = (0..=k).map(|level| x.rows(level * d, d).into_owned()).collect();
    Ok(StationaryVector { boundary, r: r.clone() })
}

/// Stationary distribution using the closed-form R of the regime.
pub fn stationary_vector(params: &QueueParams) -> Result<StationaryVector> {
    let r = r_matrix(params)?;
    debug_assert!(real_spectral_radius(&r) < 1.0);
    boundary_probabilities(params, &r)
}

/// Largest absolute residual over the balance equations of levels
/// `0..=K+1`, with levels above `K` taken from `R^h pi_K`.
pub fn balance_residual(params: &QueueParams, dist: &StationaryVector) -> Result<f64> {
    let rates = RateMatrixSet::new(params)?;
    let k = dist.threshold();
    let mut worst = 0.0f64;
    for level in 0..=k + 2 {
        let diag = if level == 0 {
            &rates.h1
        } else if level <= k {
            &rates.h2
        } else {
            &rates.h3
        };
        let mut res = -(diag * dist.level(level)) + &rates.m * dist.level(level + 1);
        if level > 0 {
            res += &rates.lambda * dist.level(level - 1);
        }
        worst = worst.max(res.amax());
    }
    Ok(worst)
}

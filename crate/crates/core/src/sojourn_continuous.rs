//! Sojourn time under continuous inspection.
//!
//! A tagged customer at position `n` with `m` customers behind it leaves
//! after `S(n, m)`; its transform `psi(n, m, s)` obeys
//!
//! ```text
//! psi(n, m, s) = a_s(n+m) psi(n-1, m, s) + b_s(n+m) psi(n, m+1, s),   psi(0, m, s) = 1
//! ```
//!
//! and is Erlang(n, mu1) once `m >= K`. Unrolling the `m` direction gives a
//! finite recursion in `n`; the infinite sum over arrival states is closed
//! with the marginal z-transform `phi(z, m, s)` evaluated at `z = lambda/mu1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::c;
use crate::model::{QueueParams, Regime};
use crate::stationary::stationary_continuous;

/// Step coefficients `a_s(k)`, `b_s(k)` and their products `B_s(k, h)` at a
/// fixed `s`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarCoefficients {
    lambda: f64,
    mu0: f64,
    mu1: f64,
    k: usize,
    s: Complex64,
}

impl ScalarCoefficients {
    pub fn new(params: &QueueParams, s: Complex64) -> Self {
        ScalarCoefficients { lambda: params.lambda, mu0: params.mu0, mu1: params.mu1, k: params.threshold(), s }
    }

    fn rate(&self, count: usize) -> f64 {
        if count <= self.k {
            self.mu0
        } else {
            self.mu1
        }
    }

    /// Probability-weighted transform of a service step with `count` present.
    pub fn a(&self, count: usize) -> Complex64 {
        let mu = self.rate(count);
        c(mu) / (self.s + self.lambda + mu)
    }

    /// Same for an arrival step.
    pub fn b(&self, count: usize) -> Complex64 {
        c(self.lambda) / (self.s + self.lambda + self.rate(count))
    }

    /// `B_s(k, h) = prod_{j<h} b_s(k + j)`, closed form.
    pub fn big_b(&self, k: usize, h: usize) -> Complex64 {
        let fast = self.s + self.lambda + self.mu1;
        let slow = self.s + self.lambda + self.mu0;
        let low_steps = h.min((self.k + 1).saturating_sub(k));
        (c(self.lambda) / fast).powu(h as u32) * (fast / slow).powu(low_steps as u32)
    }

    /// `B_s(k, h)` by the product recursion.
    pub fn big_b_product(&self, k: usize, h: usize) -> Complex64 {
        (0..h).fold(c(1.0), |acc, j| acc * self.b(k + j))
    }
}

/// `a_s'(k)` at `s = 0`.
fn a_prime0(p: &QueueParams, count: usize) -> f64 {
    let mu = p.rate_for(count);
    -mu / (p.lambda + mu).powi(2)
}

/// `b_s'(k)` at `s = 0`.
fn b_prime0(p: &QueueParams, count: usize) -> f64 {
    let mu = p.rate_for(count);
    -p.lambda / (p.lambda + mu).powi(2)
}

/// `(mu1 / (mu1 + s))^n`, the transform of Erlang(n, mu1).
pub fn psi_boundary(n: usize, s: Complex64, params: &QueueParams) -> Complex64 {
    (c(params.mu1) / (params.mu1 + s)).powu(n as u32)
}

/// `psi(n, m, s)` for `1 <= n <= K`, `0 <= m <= K` at one `s`.
#[derive(Debug, Clone)]
pub struct PsiGrid {
    k: usize,
    mu1: f64,
    s: Complex64,
    // row-major over n = 1..=K, m = 0..=K
    values: Vec<Complex64>,
}

impl PsiGrid {
    pub fn threshold(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    /// `psi(n, m, s)` for `n <= K`; `n = 0` and `m >= K` use the boundary
    /// values.
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        assert!(n <= self.k, "grid holds n <= K only");
        if n == 0 {
            c(1.0)
        } else if m >= self.k {
            (c(self.mu1) / (self.mu1 + self.s)).powu(n as u32)
        } else {
            self.values[(n - 1) * (self.k + 1) + m]
        }
    }
}

pub fn psi_grid(params: &QueueParams, s: Complex64) -> Result<PsiGrid> {
    let p = require_continuous(params)?;
    let k = p.threshold();
    let coef = ScalarCoefficients::new(&p, s);
    let mut grid = PsiGrid { k, mu1: p.mu1, s, values: vec![c(1.0); k * (k + 1)] };
    for n in 1..=k {
        let erlang = psi_boundary(n, s, &p);
        for m in (0..k).rev() {
            let mut v = coef.big_b(n + m, k - m) * erlang;
            for j in m..k {
                v += coef.a(n + j) * coef.big_b(n + m, j - m) * grid.get(n - 1, j);
            }
            grid.values[(n - 1) * (k + 1) + m] = v;
        }
        grid.values[(n - 1) * (k + 1) + k] = erlang;
    }
    Ok(grid)
}

/// `phi(z, m, s) = sum_h psi(K+h+1, m, s) z^h` for `|z| < 1`.
pub fn phi_marginal(z: Complex64, m: usize, grid: &PsiGrid, params: &QueueParams) -> Result<Complex64> {
    if z.norm() >= 1.0 {
        return Err(Error::Domain(format!("marginal transform needs |z| < 1, got {z}")));
    }
    let k = grid.threshold();
    if m > k {
        return Err(Error::Domain(format!("m must be at most K = {k}, got {m}")));
    }
    let s = grid.s();
    let mu1 = params.mu1;
    let denom = params.lambda + mu1 * (1.0 - z) + s;
    let boundary = psi_boundary(k + 1, s, params) * (mu1 + s) / (mu1 * (1.0 - z) + s);
    let mut sum = c(0.0);
    for h in 0..k - m {
        sum += c(mu1) * c(params.lambda).powu(h as u32) / denom.powu(h as u32 + 1) * grid.get(k, m + h);
    }
    Ok(sum + (c(params.lambda) / denom).powu((k - m) as u32) * boundary)
}

/// The three addends of the sojourn transform: arrivals finding fewer than
/// `K`, arrivals finding `K + h` with `h < K`, and arrivals finding at least
/// `2K`.
pub fn sojourn_lt_continuous_parts(params: &QueueParams, s: Complex64) -> Result<[Complex64; 3]> {
    let p = require_continuous(params)?;
    let grid = psi_grid(&p, s)?;
    let st = stationary_continuous(&p)?;
    let k = p.threshold();
    let rho0 = p.lambda / p.mu0;
    let rho1 = p.lambda / p.mu1;
    let erl = c(p.mu1) / (p.mu1 + s);

    let mut below = c(0.0);
    let mut partial = c(0.0);
    for h in 0..k {
        below += rho0.powi(h as i32) * grid.get(h + 1, 0);
        partial += rho0.powi(k as i32) * rho1.powi(h as i32) * erl.powu(h as u32 + 1) * grid.get(k, h);
    }
    let deep = rho0.powi(k as i32) * rho1.powi(k as i32) * p.mu1 / (p.mu1 - p.lambda)
        * erl.powu(2 * k as u32)
        * (p.mu1 - p.lambda)
        / (p.mu1 - p.lambda + s);
    Ok([below * st.pi0, partial * st.pi0, deep * st.pi0])
}

/// `E[exp(-s S*)]` for the stationary sojourn time.
pub fn sojourn_lt_continuous(params: &QueueParams, s: Complex64) -> Result<Complex64> {
    Ok(sojourn_lt_continuous_parts(params, s)?.iter().sum())
}

/// `E[S*]` from the derivative recursion for `nu_{n,m} = E[S(n, m)]`.
pub fn mean_sojourn_continuous(params: &QueueParams) -> Result<f64> {
    let p = require_continuous(params)?;
    let k = p.threshold();
    let st = stationary_continuous(&p)?;
    let coef = ScalarCoefficients::new(&p, c(0.0));
    let a0 = |count: usize| coef.a(count).re;
    let b0 = |count: usize| coef.b(count).re;

    // B_0(j, h) and B_0'(j, h) for every start j = n + m <= 2K and h <= K.
    let starts = 2 * k + 1;
    let mut big_b = vec![0.0; starts * (k + 1)];
    let mut big_b_prime = vec![0.0; starts * (k + 1)];
    for j in 0..starts {
        let row = j * (k + 1);
        big_b[row] = 1.0;
        for h in 0..k {
            big_b[row + h + 1] = big_b[row + h] * b0(j + h);
            big_b_prime[row + h + 1] = big_b_prime[row + h] * b0(j + h) + big_b[row + h] * b_prime0(&p, j + h);
        }
    }
    let bb = |j: usize, h: usize| big_b[j * (k + 1) + h];
    let bbp = |j: usize, h: usize| big_b_prime[j * (k + 1) + h];

    // nu[n][m] for n = 0..=K, m = 0..K; nu[0][.] = 0
    let mut nu = vec![vec![0.0; k]; k + 1];
    for n in 1..=k {
        for m in (0..k).rev() {
            let j = n + m;
            let mut v = n as f64 / p.mu1 * bb(j, k - m) - bbp(j, k - m);
            for i in m..k {
                v += nu[n - 1][i] * a0(n + i) * bb(j, i - m)
                    - a_prime0(&p, n + i) * bb(j, i - m)
                    - a0(n + i) * bbp(j, i - m);
            }
            nu[n][m] = v;
        }
    }

    let rho0 = p.lambda / p.mu0;
    let rho1 = p.lambda / p.mu1;
    let mut head = 0.0;
    for h in 0..k {
        head += rho0.powi(h as i32) * nu[h + 1][0]
            + rho0.powi(k as i32) * rho1.powi(h as i32) * (nu[k][h] + (h + 1) as f64 / p.mu1);
    }
    let tail = rho0.powi(k as i32)
        * rho1.powi(k as i32)
        * (2.0 * k as f64 / (p.mu1 - p.lambda) + p.mu1 / (p.lambda - p.mu1).powi(2));
    Ok(st.pi0 * (head + tail))
}

fn require_continuous(params: &QueueParams) -> Result<QueueParams> {
    let p = params.validate()?;
    if p.regime != Regime::Continuous {
        return Err(Error::Regime(format!("scalar sojourn pipeline needs continuous inspection, got {}", p.regime)));
    }
    Ok(p)
}

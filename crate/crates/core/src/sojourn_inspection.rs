//! Sojourn time under Poisson or Erlang-2 inspection.
//!
//! The conditional transforms are row vectors over the phase (rate, and the
//! inspection clock for Erlang-2):
//!
//! ```text
//! psi(n, m, s) (H(s) - Gamma_{1{n+m>K}}) = psi(n-1, m, s) M + psi(n, m+1, s) Lambda
//! ```
//!
//! with `psi(0, m, s) = e` and `psi(n, m, s) = e T(s)^n` for `m >= K`. The
//! tail over arrival levels `K + h` is the matrix generating function
//! `phi(R, 0, s) = sum_h psi(K+h+1, 0, s) R^h`, assembled in closed form from
//! the `S(Z, A, B)` solver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, identity, matrix_power, ones_row, solve_row, to_complex, ComplexMatrix, RowVector};
use crate::matrix_gf::{powers, solve_s, solve_s_derivative, transform_context, TransformContext};
use crate::model::{QueueParams, Regime};
use crate::stationary::{r_matrix, stationary_vector, StationaryVector};

/// `e T(s)^n`.
pub fn psi_vec_boundary(n: usize, ctx: &TransformContext) -> RowVector {
    ones_row(ctx.dim()) * matrix_power(&ctx.t, n)
}

/// `psi(n, m, s)` for `0 <= n <= n_max` and every `m`, at one `s`.
#[derive(Debug, Clone)]
pub struct PsiVecGrid {
    k: usize,
    // levels[n][m] for m = 0..=K; entry K is e T^n
    levels: Vec<Vec<RowVector>>,
}

impl PsiVecGrid {
    pub fn threshold(&self) -> usize {
        self.k
    }

    /// Highest position held.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn get(&self, n: usize, m: usize) -> &RowVector {
        &self.levels[n][m.min(self.k)]
    }

    /// `psi(K, K+1, s) = e T(s)^K`.
    pub fn beyond_threshold(&self) -> &RowVector {
        self.get(self.k, self.k + 1)
    }
}

/// The grid up to `n = K`.
pub fn psi_vec_grid(params: &QueueParams, s: Complex64) -> Result<PsiVecGrid> {
    let ctx = context(params, s)?;
    psi_vec_grid_with(&ctx, params.threshold(), params.threshold())
}

/// The grid up to `n = n_max`, reusing a context.
pub fn psi_vec_grid_with(ctx: &TransformContext, k: usize, n_max: usize) -> Result<PsiVecGrid> {
    let d = ctx.dim();
    let below = ctx.level_matrix(false);
    let above = ctx.level_matrix(true);
    let mut levels = vec![vec![ones_row(d); k + 1]];
    let mut boundary = ones_row(d);
    for n in 1..=n_max {
        boundary = &boundary * &ctx.t;
        let mut level = vec![boundary.clone(); k + 1];
        for m in (0..k).rev() {
            let rhs = &levels[n - 1][m] * &ctx.m + &level[m + 1] * &ctx.lambda;
            let lhs = if n + m > k { &above } else { &below };
            level[m] = solve_row(lhs, &rhs, "H(s) - Gamma")?;
        }
        levels.push(level);
    }
    Ok(PsiVecGrid { k, levels })
}

/// `Y = T_Lambda S(Z, I, T_M)` and the families `U_M(Z, k, s)`, `U(Z, k, s)`
/// for `k = 0..=K`.
#[derive(Debug, Clone)]
pub struct UMatrices {
    pub z: ComplexMatrix,
    pub s_tm: ComplexMatrix,
    pub y: ComplexMatrix,
    pub u_m: Vec<ComplexMatrix>,
    pub u: Vec<ComplexMatrix>,
}

pub fn u_matrices(z: &ComplexMatrix, ctx: &TransformContext, k: usize) -> Result<UMatrices> {
    let d = ctx.dim();
    let s_tm = solve_s(z, &identity(d), &ctx.t_m)?;
    let y = &ctx.t_lambda * &s_tm;
    let mut u_m = Vec::with_capacity(k + 1);
    let mut u = Vec::with_capacity(k + 1);
    for yk in powers(&y, k) {
        u_m.push(solve_s(z, &yk, &ctx.t_m)?);
        u.push(solve_s(z, &yk, &ctx.t)?);
    }
    Ok(UMatrices { z: z.clone(), s_tm, y, u_m, u })
}

/// `phi(Z, m, s)` from the closed assembly over `psi(K, k, s)`.
pub fn phi_matrix(m: usize, grid: &PsiVecGrid, u: &UMatrices, ctx: &TransformContext) -> Result<RowVector> {
    let k = grid.threshold();
    if m > k {
        return Err(Error::Domain(format!("m must be at most K = {k}, got {m}")));
    }
    let mut phi = grid.beyond_threshold() * &ctx.t * &u.u[k - m];
    for j in m..k {
        phi += grid.get(k, j) * &ctx.t_m * &u.u_m[j - m];
    }
    Ok(phi)
}

/// Precomputed stationary data for repeated transform evaluation.
#[derive(Debug, Clone)]
pub struct InspectionModel {
    params: QueueParams,
    r: ComplexMatrix,
    stationary: StationaryVector,
}

impl InspectionModel {
    pub fn new(params: &QueueParams) -> Result<Self> {
        let p = params.validate()?;
        if p.regime == Regime::Continuous {
            return Err(Error::Regime("matrix sojourn pipeline needs a finite inspection rate".into()));
        }
        let r = r_matrix(&p)?;
        let stationary = stationary_vector(&p)?;
        Ok(InspectionModel { params: p, r: to_complex(&r), stationary })
    }

    pub fn params(&self) -> &QueueParams {
        &self.params
    }

    pub fn stationary(&self) -> &StationaryVector {
        &self.stationary
    }

    fn pi(&self, n: usize) -> RowVector {
        let col = self.stationary.level(n);
        RowVector::from_iterator(col.len(), col.iter().map(|&v| c(v)))
    }

    fn contract(row: &RowVector, pi: &RowVector) -> Complex64 {
        row.iter().zip(pi.iter()).map(|(a, b)| a * b).sum()
    }

    /// `E[exp(-s S*)]`.
    pub fn lt(&self, s: Complex64) -> Result<Complex64> {
        let k = self.params.threshold();
        let ctx = transform_context(&self.params, s)?;
        let grid = psi_vec_grid_with(&ctx, k, k)?;
        let u = u_matrices(&self.r, &ctx, k)?;
        let phi = phi_matrix(0, &grid, &u, &ctx)?;
        let mut total = Self::contract(&phi, &self.pi(k));
        for n in 0..k {
            total += Self::contract(grid.get(n + 1, 0), &self.pi(n));
        }
        Ok(total)
    }

    /// `E[S*]` from the `s = 0` derivative recursion.
    pub fn mean(&self) -> Result<f64> {
        let k = self.params.threshold();
        let ctx = transform_context(&self.params, c(0.0))?;
        let d = ctx.dim();
        let e = ones_row(d);

        // nu_{n,m} for m >= K: e sum_{j=1}^n T^j M^-1 T^{n-j+1}
        let t_pows = powers(&ctx.t, k + 1);
        let nu_boundary = |n: usize| -> RowVector {
            let mut acc = ComplexMatrix::zeros(d, d);
            for j in 1..=n {
                acc += &t_pows[j] * ctx.m_inv() * &t_pows[n - j + 1];
            }
            &e * acc
        };

        let below = ctx.level_matrix(false);
        let above = ctx.level_matrix(true);
        let mut nu = vec![vec![RowVector::zeros(d); k + 1]];
        for n in 1..=k {
            let mut level = vec![nu_boundary(n); k + 1];
            for m in (0..k).rev() {
                let rhs = &nu[n - 1][m] * &ctx.m + &level[m + 1] * &ctx.lambda + &e;
                let lhs = if n + m > k { &above } else { &below };
                level[m] = solve_row(lhs, &rhs, "H(0) - Gamma")?;
            }
            nu.push(level);
        }

        let u = u_matrices(&self.r, &ctx, k)?;
        let t_prime = ctx.t_prime();
        let t_m_prime = ctx.t_m_prime();
        let s_tm_prime = solve_s_derivative(&self.r, &ComplexMatrix::zeros(d, d), &ctx.t_m, &t_m_prime, &u.s_tm)?;
        let y_prime = ctx.t_lambda_prime() * &u.s_tm + &ctx.t_lambda * s_tm_prime;
        let y_pows = powers(&u.y, k);
        // d/ds Y^j
        let a_prime = |j: usize| -> ComplexMatrix {
            let mut acc = ComplexMatrix::zeros(d, d);
            for i in 0..j {
                acc += &y_pows[i] * &y_prime * &y_pows[j - 1 - i];
            }
            acc
        };

        // -phi'(R, 0, 0) by the product rule
        let mut minus_phi_prime = &nu[k][k] * &ctx.t * &u.u[k];
        {
            let u_prime = solve_s_derivative(&self.r, &a_prime(k), &ctx.t, &t_prime, &u.u[k])?;
            minus_phi_prime -= &e * (&t_prime * &u.u[k] + &ctx.t * u_prime);
        }
        for j in 0..k {
            let u_m_prime = solve_s_derivative(&self.r, &a_prime(j), &ctx.t_m, &t_m_prime, &u.u_m[j])?;
            minus_phi_prime += &nu[k][j] * &ctx.t_m * &u.u_m[j];
            minus_phi_prime -= &e * (&t_m_prime * &u.u_m[j] + &ctx.t_m * u_m_prime);
        }

        let mut total = Self::contract(&minus_phi_prime, &self.pi(k));
        for n in 0..k {
            total += Self::contract(&nu[n + 1][0], &self.pi(n));
        }
        Ok(total.re)
    }
}

fn context(params: &QueueParams, s: Complex64) -> Result<TransformContext> {
    let p = params.validate()?;
    if p.regime == Regime::Continuous {
        return Err(Error::Regime("matrix sojourn pipeline needs a finite inspection rate".into()));
    }
    transform_context(&p, s)
}

/// `E[exp(-s S*)]` for exponential or Erlang-2 inspection.
pub fn sojourn_lt_inspection(params: &QueueParams, s: Complex64) -> Result<Complex64> {
    InspectionModel::new(params)?.lt(s)
}

/// `E[S*]` for exponential or Erlang-2 inspection.
pub fn mean_sojourn_inspection(params: &QueueParams) -> Result<f64> {
    InspectionModel::new(params)?.mean()
}

/// The four-phase pipeline; rejects any other regime.
pub fn erlang2_pipeline(params: &QueueParams, s: Complex64) -> Result<Complex64> {
    if params.regime != Regime::Erlang2 {
        return Err(Error::Regime(format!("expected the erlang2 regime, got {}", params.regime)));
    }
    sojourn_lt_inspection(params, s)
}

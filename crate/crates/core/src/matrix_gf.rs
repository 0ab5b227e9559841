//! Matrix generating-function machinery.
//!
//! The central object is
//!
//! ```text
//! S(Z, A, B) = sum_{h>=0} B^h A Z^h
//! ```
//!
//! which is the unique solution of `S - B S Z = A` whenever the series
//! converges. With `d <= 4` the equation is solved directly as the
//! `d^2 x d^2` system `(I - Z^T (x) B) vec(S) = vec(A)`.
//!
//! [`TransformContext`] collects the `s`-dependent matrices of the sojourn
//! recursion for one evaluation point.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, identity, inverse, spectral_radius, to_complex, ComplexMatrix, RealMatrix};
use crate::model::{QueueParams, Regime};
use crate::stationary::RateMatrixSet;

/// Margin below 1 required of `sp(Z) * sp(B)`.
pub const SPECTRAL_TOLERANCE: f64 = 1e-9;

fn check_admissible(z: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    let (sz, sb) = (spectral_radius(z), spectral_radius(b));
    // Every eigenvalue product must stay inside the unit disk; this admits
    // sp(B) = 1 at s = 0 as long as sp(Z) < 1.
    if sz * sb < 1.0 - SPECTRAL_TOLERANCE {
        Ok(())
    } else {
        Err(Error::SpectralRadius { z: sz, b: sb })
    }
}

/// `(I - Z^T (x) B)`, the flattened operator `S -> S - B S Z`.
fn stein_operator(z: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let d = b.nrows();
    identity(d * d) - z.transpose().kronecker(b)
}

fn flat_solve(z: &ComplexMatrix, b: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = rhs.nrows();
    let op = stein_operator(z, b);
    let v = ComplexMatrix::from_column_slice(d * d, 1, rhs.as_slice());
    let x = linalg::solve(&op, &v, "S - B S Z").map_err(|_| Error::SingularSystem { context: "S - B S Z = A" })?;
    Ok(ComplexMatrix::from_column_slice(d, d, x.as_slice()))
}

/// Unique solution `S` of `S - B S Z = A`.
pub fn solve_s(z: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_admissible(z, b)?;
    flat_solve(z, b, a)
}

/// `S'` from `S' - B S' Z - B' S Z = A'`, given `S = solve_s(z, a, b)`.
pub fn solve_s_derivative(
    z: &ComplexMatrix,
    a_prime: &ComplexMatrix,
    b: &ComplexMatrix,
    b_prime: &ComplexMatrix,
    s: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    check_admissible(z, b)?;
    let rhs = a_prime + b_prime * s * z;
    flat_solve(z, b, &rhs)
}

/// `max |S - B S Z - A|`.
pub fn s_residual(z: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix, s: &ComplexMatrix) -> f64 {
    linalg::max_abs(&(s - b * s * z - a))
}

/// Truncated series `sum_{h=0}^{n} B^h A Z^h`.
pub fn series_oracle(z: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut term = a.clone();
    let mut sum = a.clone();
    for _ in 0..n {
        term = b * term * z;
        sum += &term;
    }
    sum
}

/// Both sides of the series identity
///
/// ```text
/// sum_h S(T2 T1^h Z T1^-h T2^-1, A, B) T2 T1^h Z^h  =  S(Z, A T2 S(Z, I, T1), B)
/// ```
///
/// with the left sum truncated at `h = terms`. Summation stops early once
/// `T1^h Z^h` drops below `1e-18`: past that point the remaining terms are
/// negligible while the conjugated argument can grow without bound.
pub fn lemma3_identity_check(
    z: &ComplexMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    t1: &ComplexMatrix,
    t2: &ComplexMatrix,
    terms: usize,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let d = z.nrows();
    let t1_inv = inverse(t1, "T1")?;
    let t2_inv = inverse(t2, "T2")?;

    let mut lhs = ComplexMatrix::zeros(d, d);
    // conj = T1^h Z T1^-h, t1_pow = T1^h, z_pow = Z^h
    let mut conj = z.clone();
    let mut t1_pow = identity(d);
    let mut z_pow = identity(d);
    for h in 0..=terms {
        if h > 0 {
            conj = t1 * conj * &t1_inv;
            t1_pow = &t1_pow * t1;
            z_pow = &z_pow * z;
        }
        let trailing = &t1_pow * &z_pow;
        if linalg::max_abs(&trailing) < 1e-18 {
            break;
        }
        let inner = t2 * &conj * &t2_inv;
        lhs += solve_s(&inner, a, b)? * t2 * trailing;
    }

    let rhs = solve_s(z, &(a * t2 * solve_s(z, &identity(d), t1)?), b)?;
    Ok((lhs, rhs))
}

/// Inspection moves seen by a tagged customer, in row-vector form:
/// `gamma0` applies while `n + m <= K`, `gamma1` once `n + m > K`.
/// Column `i` holds `gamma` in the row of the state an inspection (or clock
/// phase advance) sends phase `i` to.
pub fn switch_matrices(params: &QueueParams) -> Result<(RealMatrix, RealMatrix)> {
    let g = params.gamma_rate();
    match params.regime {
        Regime::Continuous => Err(Error::Regime("continuous inspection has no switch matrices".into())),
        Regime::Exponential => Ok((
            RealMatrix::from_row_slice(2, 2, &[g, g, 0.0, 0.0]),
            RealMatrix::from_row_slice(2, 2, &[0.0, 0.0, g, g]),
        )),
        Regime::Erlang2 => {
            #[rustfmt::skip]
            let g0 = RealMatrix::from_row_slice(4, 4, &[
                0.0,  g,  0.0,  g,
                 g,  0.0, 0.0, 0.0,
                0.0, 0.0, 0.0, 0.0,
                0.0, 0.0,  g,  0.0,
            ]);
            #[rustfmt::skip]
            let g1 = RealMatrix::from_row_slice(4, 4, &[
                0.0, 0.0, 0.0, 0.0,
                 g,  0.0, 0.0, 0.0,
                0.0,  g,  0.0,  g,
                0.0, 0.0,  g,  0.0,
            ]);
            Ok((g0, g1))
        }
    }
}

/// The `s`-dependent matrices of the sojourn recursion at one point:
///
/// ```text
/// H(s)  = (gamma + s) I + Lambda + M
/// T(s)  = M (H(s) - Gamma1 - Lambda)^-1
/// T_A(s) = A (H(s) - Gamma1)^-1,   A in {Lambda, M}
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct TransformContext {
    pub s: Complex64,
    pub lambda: ComplexMatrix,
    pub m: ComplexMatrix,
    pub gamma0: ComplexMatrix,
    pub gamma1: ComplexMatrix,
    pub h: ComplexMatrix,
    pub t: ComplexMatrix,
    pub t_m: ComplexMatrix,
    pub t_lambda: ComplexMatrix,
    m_inv: ComplexMatrix,
}

impl TransformContext {
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `H(s) - Gamma_{1{n+m>K}}`, the matrix multiplying `psi(n, m, s)`.
    pub fn level_matrix(&self, above_threshold: bool) -> ComplexMatrix {
        if above_threshold {
            &self.h - &self.gamma1
        } else {
            &self.h - &self.gamma0
        }
    }

    /// `T'(s) = -T M^-1 T`.
    pub fn t_prime(&self) -> ComplexMatrix {
        -(&self.t * &self.m_inv * &self.t)
    }

    /// `T_M'(s) = -T_M M^-1 T_M`.
    pub fn t_m_prime(&self) -> ComplexMatrix {
        -(&self.t_m * &self.m_inv * &self.t_m)
    }

    /// `T_Lambda'(s) = -T_Lambda Lambda^-1 T_Lambda`.
    pub fn t_lambda_prime(&self) -> ComplexMatrix {
        let lambda = self.lambda[(0, 0)];
        -(&self.t_lambda * &self.t_lambda) / lambda
    }

    pub fn m_inv(&self) -> &ComplexMatrix {
        &self.m_inv
    }
}

pub fn transform_context(params: &QueueParams, s: Complex64) -> Result<TransformContext> {
    let rates = RateMatrixSet::new(params)?;
    let (g0, g1) = switch_matrices(params)?;
    let d = rates.dim();
    let lambda = to_complex(&rates.lambda);
    let m = to_complex(&rates.m);
    let gamma0 = to_complex(&g0);
    let gamma1 = to_complex(&g1);
    let h = identity(d) * (c(params.gamma_rate()) + s) + &lambda + &m;

    let base = &h - &gamma1;
    let base_inv = inverse(&base, "H(s) - Gamma1")?;
    let t = &m * inverse(&(&base - &lambda), "H(s) - Gamma1 - Lambda")?;
    let t_m = &m * &base_inv;
    let t_lambda = &lambda * &base_inv;
    let m_inv = inverse(&m, "M")?;
    Ok(TransformContext { s, lambda, m, gamma0, gamma1, h, t, t_m, t_lambda, m_inv })
}

/// `Y^k` for `k = 0..=max`.
pub(crate) fn powers(y: &ComplexMatrix, max: usize) -> Vec<ComplexMatrix> {
    let mut out = vec![identity(y.nrows())];
    for k in 1..=max {
        let next = &out[k - 1] * y;
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rm(rows: usize, v: &[f64]) -> ComplexMatrix {
        to_complex(&RealMatrix::from_row_slice(rows, rows, v))
    }

    fn example() -> QueueParams {
        QueueParams::exponential(9.0 / 8.0, 1.0, 1.5, 1.0 / 8.0, 2)
    }

    fn r_example() -> ComplexMatrix {
        rm(2, &[0.75, 0.0, 0.25, 0.75])
    }

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        let gap = linalg::max_abs(&(a - b));
        assert!(gap < tol, "gap {gap}\n{a}\n{b}");
    }

    #[test]
    fn t_at_zero_example() {
        let ctx = transform_context(&example(), c(0.0)).unwrap();
        assert_close(&ctx.t, &rm(2, &[8.0 / 9.0, 0.0, 1.0 / 9.0, 1.0]), 1e-14);
    }

    #[test]
    fn t_lambda_at_one_example() {
        let ctx = transform_context(&example(), c(1.0)).unwrap();
        assert_close(&ctx.t_lambda, &rm(2, &[9.0 / 26.0, 0.0, 9.0 / 754.0, 9.0 / 29.0]), 1e-14);
    }

    #[test]
    fn t_defining_relation() {
        for p in [example(), QueueParams::erlang2(1.0, 1.0, 1.5, 0.7, 1)] {
            for s in [c(0.0), c(0.3), Complex64::new(1.0, 2.5)] {
                let ctx = transform_context(&p, s).unwrap();
                let right = &ctx.t * (&ctx.h - &ctx.gamma1 - &ctx.lambda);
                assert_close(&right, &ctx.m, 1e-13);
            }
        }
    }

    #[test]
    fn solve_s_with_zero_z_is_a() {
        let a = rm(2, &[1.0, 2.0, 3.0, 4.0]);
        let b = rm(2, &[0.5, 0.1, 0.0, 0.3]);
        let s = solve_s(&ComplexMatrix::zeros(2, 2), &a, &b).unwrap();
        assert_close(&s, &a, 1e-15);
    }

    #[test]
    fn s_of_r_example() {
        let ctx = transform_context(&example(), c(1.0)).unwrap();
        let s = solve_s(&r_example(), &identity(2), &ctx.t_m).unwrap();
        assert_close(&s, &rm(2, &[13.0 / 10.0, 0.0, 6.0 / 25.0, 29.0 / 20.0]), 1e-13);
    }

    #[test]
    fn inadmissible_pair_rejected() {
        let z = rm(2, &[1.0, 0.0, 0.0, 0.5]);
        let b = rm(2, &[1.0, 0.0, 0.0, 0.2]);
        assert!(matches!(solve_s(&z, &identity(2), &b), Err(Error::SpectralRadius { .. })));
    }

    #[test]
    fn unit_eigenvalue_at_s_zero_admissible() {
        let ctx = transform_context(&example(), c(0.0)).unwrap();
        assert!((spectral_radius(&ctx.t) - 1.0).abs() < 1e-12);
        let s = solve_s(&r_example(), &identity(2), &ctx.t).unwrap();
        assert!(s_residual(&r_example(), &identity(2), &ctx.t, &s) < 1e-12);
    }

    #[test]
    fn series_oracle_small_n() {
        let z = rm(2, &[0.2, 0.1, 0.0, 0.4]);
        let a = rm(2, &[1.0, -1.0, 2.0, 0.5]);
        let b = rm(2, &[0.3, 0.0, 0.2, 0.1]);
        assert_close(&series_oracle(&z, &a, &b, 0), &a, 1e-15);
        assert_close(&series_oracle(&z, &a, &b, 1), &(&a + &b * &a * &z), 1e-15);
    }

    #[test]
    fn identity_check_with_zero_z() {
        let a = rm(2, &[1.0, 0.5, 0.0, 2.0]);
        let b = rm(2, &[0.3, 0.0, 0.2, 0.1]);
        let t1 = rm(2, &[0.4, 0.1, 0.0, 0.3]);
        let t2 = rm(2, &[1.0, 0.2, 0.3, 0.9]);
        let (lhs, rhs) = lemma3_identity_check(&ComplexMatrix::zeros(2, 2), &a, &b, &t1, &t2, 50).unwrap();
        assert_close(&lhs, &(&a * &t2), 1e-14);
        assert_close(&rhs, &(&a * &t2), 1e-14);
    }

    #[test]
    fn derivative_trivial_cases() {
        let z = rm(2, &[0.2, 0.1, 0.0, 0.4]);
        let a = rm(2, &[1.0, -1.0, 2.0, 0.5]);
        let b = rm(2, &[0.3, 0.0, 0.2, 0.1]);
        let s = solve_s(&z, &a, &b).unwrap();
        let zero = ComplexMatrix::zeros(2, 2);
        let d = solve_s_derivative(&z, &zero, &b, &zero, &s).unwrap();
        assert!(linalg::max_abs(&d) < 1e-300);
        let a_prime = rm(2, &[0.1, 0.2, 0.3, 0.4]);
        let d = solve_s_derivative(&zero, &a_prime, &b, &b, &s).unwrap();
        assert_close(&d, &a_prime, 1e-15);
    }

    #[test]
    fn derivative_matrices_match_finite_differences() {
        let p = QueueParams::erlang2(1.0, 1.0, 1.5, 0.7, 1);
        let s0 = 0.4;
        let h = 1e-6;
        let ctx = transform_context(&p, c(s0)).unwrap();
        let up = transform_context(&p, c(s0 + h)).unwrap();
        let dn = transform_context(&p, c(s0 - h)).unwrap();
        let fd = |a: &ComplexMatrix, b: &ComplexMatrix| (a - b) / c(2.0 * h);
        assert_close(&ctx.t_prime(), &fd(&up.t, &dn.t), 1e-8);
        assert_close(&ctx.t_m_prime(), &fd(&up.t_m, &dn.t_m), 1e-8);
        assert_close(&ctx.t_lambda_prime(), &fd(&up.t_lambda, &dn.t_lambda), 1e-8);
    }

    #[test]
    fn erlang2_switch_matrices_follow_phase_map() {
        // h(i, j) = ((1 - j) i + j 1{n+m>K}, 1 - j), states ordered 00, 01, 10, 11
        let p = QueueParams::erlang2(1.0, 1.0, 1.5, 1.0, 1);
        let (g0, g1) = switch_matrices(&p).unwrap();
        for (above, g) in [(0usize, &g0), (1, &g1)] {
            for i in 0..2usize {
                for j in 0..2usize {
                    let from = 2 * i + j;
                    let to = 2 * ((1 - j) * i + j * above) + (1 - j);
                    for row in 0..4 {
                        let want = if row == to { 1.0 } else { 0.0 };
                        assert_eq!(g[(row, from)], want);
                    }
                }
            }
        }
    }
}

//! Reference computations built straight from the transition rates of the
//! queue, sharing nothing with the library's matrix pipeline except the
//! parameter type.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sojourn::{Gamma, QueueParams, Regime};

/// A phase of the server: current rate level and, for Erlang-2 inspection,
/// the inspection clock stage.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Phase {
    fast: bool,
    clock: u8,
}

fn phases(regime: Regime) -> Vec<Phase> {
    match regime {
        Regime::Continuous => vec![Phase { fast: false, clock: 0 }],
        Regime::Exponential => vec![Phase { fast: false, clock: 0 }, Phase { fast: true, clock: 0 }],
        Regime::Erlang2 => {
            let mut v = Vec::new();
            for fast in [false, true] {
                for clock in [0, 1] {
                    v.push(Phase { fast, clock });
                }
            }
            v
        }
    }
}

/// Service rate in `phase` with `count` customers present.
fn service_rate(p: &QueueParams, phase: Phase, count: usize) -> f64 {
    let fast = match p.regime {
        Regime::Continuous => count > p.k as usize,
        _ => phase.fast,
    };
    if fast {
        p.mu1
    } else {
        p.mu0
    }
}

/// Phase reached from `phase` by a clock event with `count` present.
fn clock_target(p: &QueueParams, phase: Phase, count: usize) -> Phase {
    let over = count > p.k as usize;
    match p.regime {
        Regime::Continuous => phase,
        Regime::Exponential => Phase { fast: over, clock: 0 },
        Regime::Erlang2 => {
            if phase.clock == 0 {
                Phase { fast: phase.fast, clock: 1 }
            } else {
                Phase { fast: over, clock: 0 }
            }
        }
    }
}

fn gamma(p: &QueueParams) -> f64 {
    match p.gamma {
        Gamma::Continuous => 0.0,
        Gamma::Rate(g) => g,
    }
}

fn index_of(list: &[Phase], ph: Phase) -> usize {
    list.iter().position(|&q| q == ph).unwrap()
}

/// Stationary probabilities `pi[level][phase]` of the queue-length chain,
/// truncated at `levels` and solved by eliminating levels from the top.
pub fn stationary_oracle(p: &QueueParams, levels: usize) -> Vec<Vec<f64>> {
    let ph = phases(p.regime);
    let d = ph.len();
    let g = gamma(p);
    // local block at each level: off-diagonal clock moves, diagonal outflow
    let local = |level: usize| -> DMatrix<f64> {
        let mut a = DMatrix::zeros(d, d);
        for (i, &phase) in ph.iter().enumerate() {
            let mut out = if level < levels { p.lambda } else { 0.0 };
            if level > 0 {
                out += service_rate(p, phase, level);
            }
            if g > 0.0 {
                let j = index_of(&ph, clock_target(p, phase, level));
                if j != i {
                    a[(i, j)] += g;
                    out += g;
                }
            }
            a[(i, i)] -= out;
        }
        a
    };
    let down = |level: usize| -> DMatrix<f64> {
        DMatrix::from_fn(d, d, |i, j| if i == j { service_rate(p, ph[i], level) } else { 0.0 })
    };
    let up = DMatrix::<f64>::identity(d, d) * p.lambda;

    // pi_l = pi_{l-1} r[l]
    let mut r: Vec<DMatrix<f64>> = vec![DMatrix::zeros(d, d); levels + 1];
    r[levels] = -&up * local(levels).try_inverse().unwrap();
    for l in (1..levels).rev() {
        let block = local(l) + &r[l + 1] * down(l + 1);
        r[l] = -&up * block.try_inverse().unwrap();
    }
    let base = local(0) + &r[1] * down(1);
    // null row vector of `base`: solve x base = 0 with x_0 = 1
    let pi0 = if d == 1 {
        DVector::from_element(1, 1.0)
    } else {
        let bt = base.transpose();
        let sub = bt.view((1, 1), (d - 1, d - 1)).clone_owned();
        let rhs = -bt.view((1, 0), (d - 1, 1)).clone_owned();
        let x = sub.lu().solve(&rhs).unwrap();
        let mut v = DVector::from_element(d, 1.0);
        for i in 1..d {
            v[i] = x[i - 1];
        }
        v
    };
    let mut pi = vec![pi0.transpose()];
    for l in 1..=levels {
        let next = &pi[l - 1] * &r[l];
        pi.push(next);
    }
    let total: f64 = pi.iter().map(|row| row.sum()).sum();
    pi.iter().map(|row| row.iter().map(|v| v / total).collect()).collect()
}

/// `psi[n][phase]` for `n = 0..=n_max` at `m = 0`: the sojourn transform of a
/// customer at position `n` with nobody behind, by solving the absorbing
/// chain on `(n, m, phase)` with `m` truncated at `m_max`. Beyond `m > K`
/// the queue never drops to `K` before the tagged departure, so closing the
/// lattice with `psi(n, m_max + 1) = psi(n, m_max)` is exact once
/// `m_max >= K`.
pub fn absorbing_oracle(p: &QueueParams, s: Complex64, n_max: usize, m_max: usize) -> Vec<Vec<Complex64>> {
    let ph = phases(p.regime);
    let d = ph.len();
    let g = gamma(p);
    let one = Complex64::new(1.0, 0.0);
    // prev[m][phase] = psi(n-1, m, phase)
    let mut prev = vec![vec![one; d]; m_max + 1];
    let mut out = vec![vec![one; d]];
    for n in 1..=n_max {
        let mut cur = vec![vec![Complex64::new(0.0, 0.0); d]; m_max + 1];
        for m in (0..=m_max).rev() {
            let count = n + m;
            // (q + s) x_i - lambda x_i[m+1] - gamma x_target = mu x_prev
            let mut a = DMatrix::<Complex64>::zeros(d, d);
            let mut b = DVector::<Complex64>::zeros(d);
            for (i, &phase) in ph.iter().enumerate() {
                let mu = service_rate(p, phase, count);
                a[(i, i)] += s + p.lambda + mu + g;
                b[i] += mu * prev[m][i];
                if m == m_max {
                    a[(i, i)] -= p.lambda;
                } else {
                    b[i] += p.lambda * cur[m + 1][i];
                }
                if g > 0.0 {
                    let j = index_of(&ph, clock_target(p, phase, count));
                    a[(i, j)] -= g;
                }
            }
            let x = a.lu().solve(&b).unwrap();
            cur[m] = x.iter().copied().collect();
        }
        out.push(cur[0].clone());
        prev = cur;
    }
    out
}

/// `E[exp(-s S*)]` from the two oracles: an arrival finding `l` customers in
/// phase `i` becomes the tagged customer at position `l + 1`.
pub fn transform_oracle(p: &QueueParams, s: Complex64, levels: usize) -> Complex64 {
    let pi = stationary_oracle(p, levels);
    let psi = absorbing_oracle(p, s, levels + 1, p.k as usize + 2);
    let mut total = Complex64::new(0.0, 0.0);
    for (l, row) in pi.iter().enumerate() {
        for (i, w) in row.iter().enumerate() {
            total += *w * psi[l + 1][i];
        }
    }
    total
}

/// Random parameters with `lambda < mu1` and a tail decaying fast enough for
/// a few hundred truncation levels.
pub fn random_params(rng: &mut ChaCha8Rng, regime: Regime) -> QueueParams {
    let mu1 = rng.gen_range(0.8..2.0);
    let lambda = mu1 * rng.gen_range(0.2..0.8);
    let mu0 = rng.gen_range(0.3..2.0);
    let k = rng.gen_range(0..=4);
    let g = rng.gen_range(0.2..3.0);
    match regime {
        Regime::Continuous => QueueParams::continuous(lambda, mu0, mu1, k),
        Regime::Exponential => QueueParams::exponential(lambda, mu0, mu1, g, k),
        Regime::Erlang2 => QueueParams::erlang2(lambda, mu0, mu1, g, k),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn example(k: i64) -> QueueParams {
    QueueParams::exponential(9.0 / 8.0, 1.0, 1.5, 1.0 / 8.0, k)
}

/// Partial-fraction terms `c / (a + b s)^k` of the worked example's transform.
pub const PSI_TERMS: [(f64, f64, f64, i32); 16] = [
    (-308367.0 / 379025.0, 3.0, 2.0, 4),
    (-13923657.0 / 9475625.0, 3.0, 2.0, 3),
    (-44764461.0 / 47378125.0, 3.0, 2.0, 2),
    (-130808703.0 / 236890625.0, 3.0, 2.0, 1),
    (-14013.0 / 15161.0, 9.0, 4.0, 1),
    (1587762.0 / 9475625.0, 11.0, 4.0, 3),
    (-4755267.0 / 24636625.0, 11.0, 4.0, 2),
    (-28797784929.0 / 40034515625.0, 11.0, 4.0, 1),
    (81216.0 / 15161.0, 3.0, 8.0, 2),
    (18144.0 / 15161.0, 3.0, 8.0, 1),
    (102060.0 / 15161.0, 9.0, 8.0, 2),
    (55081053.0 / 20497672.0, 9.0, 8.0, 1),
    (-24064452.0 / 9475625.0, 17.0, 8.0, 3),
    (-199526994.0 / 47378125.0, 17.0, 8.0, 2),
    (2950774277.0 / 1895125000.0, 17.0, 8.0, 1),
    (90111.0 / 60644.0, 21.0, 8.0, 1),
];

pub fn psi_partial_fractions(s: f64) -> f64 {
    PSI_TERMS.iter().map(|&(c, a, b, k)| c / (a + b * s).powi(k)).sum()
}

/// The worked example's density as printed, sign of the `e^{-21t/8}` group
/// included.
pub fn density_as_printed(t: f64) -> f64 {
    -90111.0 * (-21.0 * t / 8.0).exp() / 485152.0 - 14013.0 * (-9.0 * t / 4.0).exp() / 60644.0
        + 27.0 * (-3.0 * t / 8.0).exp() * (84.0 + 47.0 * t) / 15161.0
        + 729.0 * (-9.0 * t / 8.0).exp() * (75557.0 + 23660.0 * t) / 163981376.0
        + 243.0 * (-11.0 * t / 4.0).exp() * (-1896150448.0 - 127198500.0 * t + 13803075.0 * t * t) / 2562209000000.0
        - (-17.0 * t / 8.0).exp() * (-11803097108.0 + 3990539880.0 * t + 150402825.0 * t * t) / 60644000000.0
        - 3.0
            * (-3.0 * t / 2.0).exp()
            * (697646416.0 + 596859480.0 * t + 232060950.0 * t * t + 21414375.0 * t.powi(3))
            / 7580500000.0
}

/// Exact inverse of [`psi_partial_fractions`], term by term:
/// `c / (a + b s)^k` inverts to `c / b^k * t^{k-1} / (k-1)! * e^{-a t / b}`.
pub fn density_exact(t: f64) -> f64 {
    PSI_TERMS
        .iter()
        .map(|&(c, a, b, k)| {
            let fact: f64 = (1..k).map(f64::from).product();
            c / b.powi(k) * t.powi(k - 1) / fact * (-a * t / b).exp()
        })
        .sum()
}

pub fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

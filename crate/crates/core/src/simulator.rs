//! Event-driven simulation of the threshold queue.
//!
//! Each replication draws from its own ChaCha8 stream: the generator is seeded
//! with `seed` and switched to stream number `replication`, so results depend
//! only on `(seed, replication)` and not on thread scheduling. Event times are
//! drawn by inversion, `-ln(1 - u) / rate`.
//!
//! The inspection clock runs whether or not the rate would change. Under
//! continuous inspection the rate is read off the current queue length at
//! every event.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inversion::DensityCurve;
use crate::model::{QueueParams, Regime};

pub const DEFAULT_WARMUP: u64 = 10_000;
/// Batches per replication for the batch-means standard error.
pub const BATCHES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: QueueParams,
    /// Customers recorded per replication after the warm-up.
    pub customers: u64,
    /// Departures discarded before recording starts.
    pub warmup: u64,
    pub seed: u64,
    pub replications: u32,
}

impl SimConfig {
    pub fn new(params: QueueParams, customers: u64, seed: u64) -> Self {
        SimConfig { params, customers, warmup: DEFAULT_WARMUP, seed, replications: 1 }
    }

    pub fn validate(&self) -> Result<Self> {
        self.params.validate()?;
        if self.customers == 0 {
            return Err(Error::Domain("at least one customer must be recorded".into()));
        }
        if self.replications == 0 {
            return Err(Error::Domain("at least one replication is needed".into()));
        }
        Ok(*self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Sojourn times, replication by replication in departure order.
    pub samples: Vec<f64>,
    pub mean: f64,
    /// Batch-means standard error of `mean`; zero with fewer than two batches.
    pub std_error: f64,
    /// Time fraction spent at each queue length during recording.
    pub occupancy: Vec<f64>,
    /// Batch-means standard error of each occupancy fraction.
    pub occupancy_std_error: Vec<f64>,
    /// Queue lengths found by recorded-period arrivals.
    pub arrival_seen: Vec<u64>,
    sorted: Vec<f64>,
}

impl SimResult {
    /// Fraction of samples not above `x`.
    pub fn empirical_cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// One sojourn time per line.
    pub fn write_samples<W: Write>(&self, mut out: W) -> io::Result<()> {
        for v in &self.samples {
            writeln!(out, "{v}")?;
        }
        out.flush()
    }
}

struct Replication {
    samples: Vec<f64>,
    batch_means: Vec<f64>,
    occupancy: Vec<f64>,
    batch_occupancy: Vec<Vec<f64>>,
    arrival_seen: Vec<u64>,
}

fn add_at<T: Copy + std::ops::AddAssign + Default>(v: &mut Vec<T>, i: usize, x: T) {
    if v.len() <= i {
        v.resize(i + 1, T::default());
    }
    v[i] += x;
}

fn run_replication(cfg: &SimConfig, replication: u32) -> Replication {
    let p = cfg.params;
    let k = p.threshold();
    let gamma = p.gamma_rate();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::from(replication));

    let batch_size = (cfg.customers / BATCHES).max(1);
    let mut out = Replication {
        samples: Vec::with_capacity(cfg.customers as usize),
        batch_means: Vec::new(),
        occupancy: Vec::new(),
        batch_occupancy: Vec::new(),
        arrival_seen: Vec::new(),
    };

    let mut queue: VecDeque<f64> = VecDeque::new();
    let mut now = 0.0;
    let mut fast = false;
    let mut clock_phase = 0u8;
    let mut departed = 0u64;
    let mut observing = cfg.warmup == 0;
    let mut batch_sum = 0.0;
    let mut batch_occ: Vec<f64> = Vec::new();

    while (out.samples.len() as u64) < cfg.customers {
        let n = queue.len();
        let mu = if n == 0 {
            0.0
        } else {
            match p.regime {
                Regime::Continuous => p.rate_for(n),
                _ if fast => p.mu1,
                _ => p.mu0,
            }
        };
        let total = p.lambda + mu + gamma;
        let dt = -(1.0 - rng.gen::<f64>()).ln() / total;
        if observing {
            add_at(&mut out.occupancy, n, dt);
            add_at(&mut batch_occ, n, dt);
        }
        now += dt;

        let u = rng.gen::<f64>() * total;
        if u < p.lambda {
            if observing {
                add_at(&mut out.arrival_seen, n, 1);
            }
            queue.push_back(now);
        } else if u < p.lambda + mu {
            let arrived = queue.pop_front().expect("departure from an empty queue");
            departed += 1;
            if observing {
                let sojourn = now - arrived;
                out.samples.push(sojourn);
                batch_sum += sojourn;
                if out.samples.len() as u64 % batch_size == 0 {
                    out.batch_means.push(batch_sum / batch_size as f64);
                    out.batch_occupancy.push(std::mem::take(&mut batch_occ));
                    batch_sum = 0.0;
                }
            } else if departed == cfg.warmup {
                observing = true;
            }
        } else {
            match p.regime {
                Regime::Erlang2 if clock_phase == 0 => clock_phase = 1,
                _ => {
                    clock_phase = 0;
                    fast = n > k;
                }
            }
        }
    }
    out
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    let cfg = config.validate()?;
    let reps: Vec<Replication> = (0..cfg.replications).into_par_iter().map(|r| run_replication(&cfg, r)).collect();

    let samples: Vec<f64> = reps.iter().flat_map(|r| r.samples.iter().copied()).collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let batch_means: Vec<f64> = reps.iter().flat_map(|r| r.batch_means.iter().copied()).collect();
    let std_error = mean_and_se(&batch_means).1;

    let mut occupancy_time: Vec<f64> = Vec::new();
    let mut arrival_seen: Vec<u64> = Vec::new();
    for r in &reps {
        for (i, &v) in r.occupancy.iter().enumerate() {
            add_at(&mut occupancy_time, i, v);
        }
        for (i, &v) in r.arrival_seen.iter().enumerate() {
            add_at(&mut arrival_seen, i, v);
        }
    }
    let total_time: f64 = occupancy_time.iter().sum();
    let occupancy: Vec<f64> = occupancy_time.iter().map(|v| v / total_time).collect();

    let batches: Vec<&Vec<f64>> = reps.iter().flat_map(|r| r.batch_occupancy.iter()).collect();
    let occupancy_std_error = (0..occupancy.len())
        .map(|level| {
            let fractions: Vec<f64> = batches
                .iter()
                .map(|b| b.get(level).copied().unwrap_or(0.0) / b.iter().sum::<f64>())
                .collect();
            if fractions.is_empty() {
                0.0
            } else {
                mean_and_se(&fractions).1
            }
        })
        .collect();

    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(SimResult { samples, mean, std_error, occupancy, occupancy_std_error, arrival_seen, sorted })
}

/// Largest gap between the empirical CDF and `curve`'s CDF over its grid.
pub fn empirical_vs_transform(sim: &SimResult, curve: &DensityCurve) -> f64 {
    curve.t.iter().zip(&curve.cdf).map(|(&t, &f)| (sim.empirical_cdf(t) - f).abs()).fold(0.0, f64::max)
}

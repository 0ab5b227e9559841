use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::RunConfig;
use super::CliError;
use crate::inversion::{invert_density, moment, DensityCurve, DEFAULT_MOMENT_STEP};
use crate::model::{Gamma, QueueParams, Regime};
use crate::simulator::{empirical_vs_transform, simulate};
use crate::SojournTransform;

pub const SWEEP_GAMMAS: [f64; 6] = [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];

/// Twelve significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_num(*v))).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn density(model: &SojournTransform, cfg: &RunConfig) -> Result<DensityCurve, CliError> {
    Ok(invert_density(&|s| model.lt(s), &cfg.t_grid, &cfg.inversion)?)
}

/// Writes `transform.csv` and `density.csv` under `out_dir`.
pub fn cmd_analyze(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let model = SojournTransform::new(&cfg.params)?;
    let transform: Vec<Complex64> =
        cfg.s_grid.par_iter().map(|&s| model.lt(Complex64::new(s, 0.0))).collect::<crate::Result<_>>()?;
    let curve = density(&model, cfg)?;
    if !curve.accurate {
        eprintln!("warning: inversion tail estimate {:.3e} exceeds target {:.3e}", curve.max_tail_estimate, cfg.inversion.target_abs_error);
    }

    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let transform_path = cfg.out_dir.join("transform.csv");
    let density_path = cfg.out_dir.join("density.csv");
    write_csv(
        &transform_path,
        &["s", "re_psi", "im_psi"],
        cfg.s_grid.iter().zip(&transform).map(|(&s, v)| vec![s, v.re, v.im]),
    )?;
    write_csv(
        &density_path,
        &["t", "f", "F"],
        (0..curve.t.len()).map(|i| vec![curve.t[i], curve.f[i], curve.cdf[i]]),
    )?;
    writeln!(out, "wrote {} ({} rows)", transform_path.display(), transform.len()).map_err(CliError::stdout)?;
    writeln!(out, "wrote {} ({} rows)", density_path.display(), curve.t.len()).map_err(CliError::stdout)?;
    Ok(())
}

fn describe(params: &QueueParams) -> String {
    format!(
        "regime {}  lambda {}  mu0 {}  mu1 {}  gamma {}  K {}",
        params.regime, params.lambda, params.mu0, params.mu1, params.gamma, params.k
    )
}

/// Mean from the analytic recursion next to the transform derivative.
pub fn cmd_moments(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let model = SojournTransform::new(&cfg.params)?;
    let analytic = model.mean()?;
    let numeric = moment(&|s| model.lt(s), 1, DEFAULT_MOMENT_STEP)?;
    let second = moment(&|s| model.lt(s), 2, DEFAULT_MOMENT_STEP)?;
    let text = format!(
        "{}\nmean_analytic   {}\nmean_transform  {}\nabs_gap         {}\nsecond_moment   {}\n",
        describe(&cfg.params),
        fmt_num(analytic),
        fmt_num(numeric),
        fmt_num((analytic - numeric).abs()),
        fmt_num(second),
    );
    out.write_all(text.as_bytes()).map_err(CliError::stdout)
}

/// Simulation summary, plus an optional one-value-per-line sample dump.
pub fn cmd_simulate(cfg: &RunConfig, samples: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let sim = simulate(&cfg.sim_config())?;
    let half = 1.96 * sim.std_error;
    let text = format!(
        "{}\nseed {}  replications {}  customers {}  warmup {}\nmean       {}\nstd_error  {}\nci95       {} {}\n",
        describe(&cfg.params),
        cfg.seed,
        cfg.replications,
        cfg.customers,
        cfg.warmup,
        fmt_num(sim.mean),
        fmt_num(sim.std_error),
        fmt_num(sim.mean - half),
        fmt_num(sim.mean + half),
    );
    out.write_all(text.as_bytes()).map_err(CliError::stdout)?;
    if let Some(path) = samples {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        sim.write_samples(BufWriter::new(file)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

/// Largest density gap between inspection at each sweep rate and continuous
/// inspection, on the run's time grid.
pub fn gamma_sweep(cfg: &RunConfig) -> Result<Vec<(f64, f64)>, CliError> {
    let base = cfg.params;
    let continuous = SojournTransform::new(&QueueParams::continuous(base.lambda, base.mu0, base.mu1, base.k))?;
    let reference = density(&continuous, cfg)?;
    let regime = if base.regime == Regime::Continuous { Regime::Exponential } else { base.regime };
    SWEEP_GAMMAS
        .iter()
        .map(|&g| {
            let params = QueueParams { gamma: Gamma::Rate(g), regime, ..base };
            let curve = density(&SojournTransform::new(&params)?, cfg)?;
            let gap = curve.f.iter().zip(&reference.f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok((g, gap))
        })
        .collect()
}

/// Analytic against simulated CDF, then the inspection-rate sweep.
pub fn cmd_compare(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let model = SojournTransform::new(&cfg.params)?;
    let curve = density(&model, cfg)?;
    let sim = simulate(&cfg.sim_config())?;
    let gap = empirical_vs_transform(&sim, &curve);
    let analytic = model.mean()?;
    let mut text = format!(
        "{}\nmean_analytic   {}\nmean_simulated  {}\nstd_error       {}\ncdf_sup_gap     {}\n\ngamma  sup_density_gap_vs_continuous\n",
        describe(&cfg.params),
        fmt_num(analytic),
        fmt_num(sim.mean),
        fmt_num(sim.std_error),
        fmt_num(gap),
    );
    let sweep = gamma_sweep(cfg)?;
    for (g, d) in &sweep {
        text.push_str(&format!("{}  {}\n", fmt_num(*g), fmt_num(*d)));
    }
    let monotone = sweep.windows(2).all(|w| w[1].1 < w[0].1);
    text.push_str(&format!("monotone_decreasing {monotone}\n"));
    out.write_all(text.as_bytes()).map_err(CliError::stdout)
}

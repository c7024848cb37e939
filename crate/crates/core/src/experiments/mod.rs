//! Convergence, certification and approximation studies, and the driver
//! behind the `kac` binary.
//!
//! All runs are deterministic in `(config, seed)`: grid points run in order,
//! every horizon reuses the master seed (so the grid is evaluated on the same
//! sample points, with longer digit streams extending shorter ones), and
//! bootstrap resamples for horizon `n` are seeded from
//! `split_seed(master_seed, n)`.

pub mod config;
pub mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::bitstream::split_seed;
use crate::error::{Error, Result};
use crate::exact_stats::ExactStats;
use crate::functions::{FourierFunction, FunctionSpec, StepFunction};
use crate::montecarlo::{paired_samples, sample_w, sigma_n, SampleSet};
use crate::wasserstein::{l2_paired, w1_paired, w1_to_normal, w1_to_normal_se};

pub use config::{ConfigFile, ExperimentConfig, FunctionSource, Mode};
pub use report::{fmt_f64, fmt_opt, CsvTable};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "KAC_THREADS";

/// Multiples of the bootstrap standard error allowed before an empirical
/// inequality counts as violated.
pub const SLACK_SE: f64 = 3.0;

/// `a ≤ b` up to a few ulps of `b`, for inequalities that hold exactly in
/// real arithmetic.
pub fn le_up_to_rounding(a: f64, b: f64) -> bool {
    a <= b + 8.0 * f64::EPSILON * b.abs()
}

/// Thread count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Config(e.to_string())),
    }
}

/// Ordinary least squares of log₂ w against log₂ n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual on the log₂ scale.
    pub residual: f64,
}

pub fn log_log_slope(ns: &[u64], ws: &[f64]) -> Option<SlopeFit> {
    if ns.len() != ws.len() || ns.len() < 2 || ws.iter().any(|w| w.is_nan() || *w <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = ws.iter().map(|w| w.log2()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Some(SlopeFit {
        slope,
        intercept,
        residual: (sse / k).sqrt(),
    })
}

fn step_of<'a>(spec: &'a FunctionSpec, what: &'static str) -> Result<&'a StepFunction> {
    match spec {
        FunctionSpec::Step(phi) => Ok(phi),
        FunctionSpec::Fourier(_) => Err(Error::RequiresStep(what)),
    }
}

fn fourier_of<'a>(spec: &'a FunctionSpec, what: &'static str) -> Result<&'a FourierFunction> {
    match spec {
        FunctionSpec::Fourier(f) => Ok(f),
        FunctionSpec::Step(_) => Err(Error::RequiresFourier(what)),
    }
}

fn centered_stats(phi: &StepFunction) -> Result<ExactStats> {
    if phi.is_degenerate() {
        return Err(Error::Degenerate);
    }
    ExactStats::compute(&phi.center())
}

/// Fails early if the function has zero variance at any grid horizon.
fn ensure_non_degenerate(cfg: &ExperimentConfig) -> Result<()> {
    for &n in &cfg.n_grid {
        sigma_n(&cfg.function, n)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateRow {
    pub n: u64,
    pub replicates: usize,
    pub seed: u64,
    pub sigma_n: f64,
    pub sample_mean: f64,
    pub sample_var: f64,
    pub w1_to_normal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateReport {
    pub rows: Vec<SimulateRow>,
    /// Raw samples, kept only when a single horizon was requested.
    pub samples: Option<SampleSet>,
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateReport> {
    if cfg.dump_samples.is_some() && cfg.n_grid.len() != 1 {
        return Err(Error::Config("dumping samples needs exactly one horizon".into()));
    }
    ensure_non_degenerate(cfg)?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    let mut last = None;
    for &n in &cfg.n_grid {
        let set = sample_w(&cfg.function, n, cfg.replicates, cfg.master_seed, &cfg.budget)?;
        rows.push(SimulateRow {
            n,
            replicates: set.replicates,
            seed: cfg.master_seed,
            sigma_n: set.sigma_n,
            sample_mean: set.mean(),
            sample_var: set.variance(),
            w1_to_normal: w1_to_normal(&set.values)?.distance,
        });
        last = Some(set);
    }
    Ok(SimulateReport {
        rows,
        samples: if cfg.n_grid.len() == 1 { last } else { None },
    })
}

impl SimulateReport {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(["n", "N", "seed", "sigma_n", "sample_mean", "sample_var", "w1_to_normal"]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                r.replicates.to_string(),
                r.seed.to_string(),
                fmt_f64(r.sigma_n),
                fmt_f64(r.sample_mean),
                fmt_f64(r.sample_var),
                fmt_f64(r.w1_to_normal),
            ]);
        }
        t
    }
}

/// Writes raw samples one per line in shortest round-trip decimal.
pub fn write_samples<W: Write>(set: &SampleSet, mut out: W) -> Result<()> {
    for v in &set.values {
        writeln!(out, "{}", fmt_f64(*v))?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// exact-stats

/// The exact statistics of the centered step function.
pub fn run_exact_stats(cfg: &ExperimentConfig) -> Result<ExactStats> {
    centered_stats(step_of(&cfg.function, "exact-stats")?)
}

/// One row: r, var0, m3, m4, rho_1..rho_{r−1}, C3, sigma_sq_limit, D.
pub fn exact_stats_table(stats: &ExactStats) -> CsvTable {
    let mut header = vec!["r".to_string(), "var0".into(), "m3".into(), "m4".into()];
    header.extend((1..stats.level).map(|k| format!("rho_{k}")));
    header.extend(["C3".to_string(), "sigma_sq_limit".into(), "D".into()]);
    let mut row = vec![
        stats.level.to_string(),
        fmt_f64(stats.var0),
        fmt_f64(stats.abs_moment3),
        fmt_f64(stats.abs_moment4),
    ];
    row.extend(stats.rho.iter().map(|r| fmt_f64(*r)));
    row.extend([fmt_f64(stats.c3), fmt_f64(stats.sigma_sq_limit), stats.dependency.to_string()]);
    let mut t = CsvTable::new(header);
    t.push(row);
    t
}

// ---------------------------------------------------------------------------
// convergence

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub sigma_n: f64,
    pub w1_empirical: f64,
    /// Present for step functions only.
    pub stein_bound: Option<f64>,
    pub sample_mean: f64,
    pub sample_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Fit of log₂ w1 against log₂ n; absent with fewer than two rows.
    pub slope: Option<SlopeFit>,
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    ensure_non_degenerate(cfg)?;
    let stats = match &cfg.function {
        FunctionSpec::Step(phi) => Some(centered_stats(phi)?),
        FunctionSpec::Fourier(_) => None,
    };
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let set = sample_w(&cfg.function, n, cfg.replicates, cfg.master_seed, &cfg.budget)?;
        rows.push(ConvergenceRow {
            n,
            sigma_n: set.sigma_n,
            w1_empirical: w1_to_normal(&set.values)?.distance,
            stein_bound: stats.as_ref().map(|s| s.stein_bound(n)).transpose()?,
            sample_mean: set.mean(),
            sample_var: set.variance(),
        });
    }
    let ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    let ws: Vec<f64> = rows.iter().map(|r| r.w1_empirical).collect();
    Ok(ConvergenceReport {
        slope: log_log_slope(&ns, &ws),
        rows,
    })
}

impl ConvergenceReport {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(["n", "sigma_n", "w1_empirical", "stein_bound", "sample_mean", "sample_var"]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                fmt_f64(r.sigma_n),
                fmt_f64(r.w1_empirical),
                fmt_opt(r.stein_bound),
                fmt_f64(r.sample_mean),
                fmt_f64(r.sample_var),
            ]);
        }
        t
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s += &format!("n = {:>8}  w1 = {:.6}", r.n, r.w1_empirical);
            if let Some(b) = r.stein_bound {
                s += &format!("  bound = {b:.6}");
            }
            s += "\n";
        }
        match self.slope {
            Some(fit) => s += &format!("log-log slope = {:.4} (rms residual {:.4})\n", fit.slope, fit.residual),
            None => s += "log-log slope unavailable\n",
        }
        s
    }
}

// ---------------------------------------------------------------------------
// certify

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyRow {
    pub n: u64,
    pub sigma_n: f64,
    pub stein_bound: f64,
    pub w1_empirical: f64,
    pub bootstrap_se: f64,
    /// w1_empirical / stein_bound.
    pub ratio: f64,
    /// w1_empirical ≤ stein_bound + 3 · bootstrap_se.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyReport {
    pub rows: Vec<CertifyRow>,
}

pub fn run_certify(cfg: &ExperimentConfig) -> Result<CertifyReport> {
    let phi = step_of(&cfg.function, "certification")?;
    let stats = centered_stats(phi)?;
    ensure_non_degenerate(cfg)?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let set = sample_w(&cfg.function, n, cfg.replicates, cfg.master_seed, &cfg.budget)?;
        let bound = stats.stein_bound(n)?;
        let w1 = w1_to_normal(&set.values)?.distance;
        let se = w1_to_normal_se(&set.values, split_seed(cfg.master_seed, n))?;
        rows.push(CertifyRow {
            n,
            sigma_n: set.sigma_n,
            stein_bound: bound,
            w1_empirical: w1,
            bootstrap_se: se,
            ratio: w1 / bound,
            holds: w1 <= bound + SLACK_SE * se,
        });
    }
    Ok(CertifyReport { rows })
}

impl CertifyReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(["n", "sigma_n", "stein_bound", "w1_empirical", "bootstrap_se", "ratio", "holds"]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                fmt_f64(r.sigma_n),
                fmt_f64(r.stein_bound),
                fmt_f64(r.w1_empirical),
                fmt_f64(r.bootstrap_se),
                fmt_f64(r.ratio),
                r.holds.to_string(),
            ]);
        }
        t
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s += &format!(
                "n = {:>8}  w1 = {:.6} ± {:.6}  bound = {:.6}  ratio = {:.4}  {}\n",
                r.n,
                r.w1_empirical,
                r.bootstrap_se,
                r.stein_bound,
                r.ratio,
                if r.holds { "ok" } else { "VIOLATED" }
            );
        }
        s
    }
}

// ---------------------------------------------------------------------------
// approximate

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationRow {
    pub n: u64,
    pub level: u32,
    /// ‖f − φ‖_{L²} of the projection itself (no sampling).
    pub projection_l2: f64,
    /// ‖W_n^f − W_n^φ‖_{L²} over coupled replicates.
    pub paired_l2: f64,
    pub w1_paired: f64,
    pub w1_f: f64,
    pub w1_phi: f64,
    /// 3 bootstrap standard errors of w1_f.
    pub slack: f64,
    /// w1_paired ≤ paired_l2.
    pub coupling_holds: bool,
    /// w1_f ≤ w1_paired + w1_phi + slack.
    pub triangle_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationReport {
    pub rows: Vec<ApproximationRow>,
    /// Levels whose projection is constant.
    pub skipped: Vec<u32>,
}

pub fn run_approximate(cfg: &ExperimentConfig) -> Result<ApproximationReport> {
    let f = fourier_of(&cfg.function, "approximation")?;
    ensure_non_degenerate(cfg)?;
    let mut projections = Vec::new();
    let mut skipped = Vec::new();
    for &level in &cfg.levels {
        let phi = f.project_to_step(level)?;
        if phi.is_degenerate() {
            skipped.push(level);
        } else {
            projections.push((level, f.projection_error(level)?, FunctionSpec::Step(phi)));
        }
    }
    if projections.is_empty() {
        return Err(Error::AllLevelsDegenerate);
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        for (level, projection_l2, phi) in &projections {
            let (wf, wphi) = paired_samples(&cfg.function, phi, n, cfg.replicates, cfg.master_seed, &cfg.budget)?;
            let paired_l2 = l2_paired(&wf.values, &wphi.values)?;
            let w1_pair = w1_paired(&wf.values, &wphi.values)?.distance;
            let w1_f = w1_to_normal(&wf.values)?.distance;
            let w1_phi = w1_to_normal(&wphi.values)?.distance;
            let slack = SLACK_SE * w1_to_normal_se(&wf.values, split_seed(cfg.master_seed, n))?;
            rows.push(ApproximationRow {
                n,
                level: *level,
                projection_l2: *projection_l2,
                paired_l2,
                w1_paired: w1_pair,
                w1_f,
                w1_phi,
                slack,
                coupling_holds: le_up_to_rounding(w1_pair, paired_l2),
                triangle_holds: le_up_to_rounding(w1_f, w1_pair + w1_phi + slack),
            });
        }
    }
    Ok(ApproximationReport { rows, skipped })
}

impl ApproximationReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.coupling_holds && r.triangle_holds)
    }

    /// True when, at every horizon, paired_l2 strictly decreases as the
    /// level increases.
    pub fn paired_l2_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .filter(|w| w[0].n == w[1].n)
            .all(|w| w[1].paired_l2 < w[0].paired_l2)
    }

    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new([
            "n",
            "level",
            "projection_l2",
            "paired_l2",
            "w1_paired",
            "w1_f",
            "w1_phi",
            "slack",
            "coupling_holds",
            "triangle_holds",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                r.level.to_string(),
                fmt_f64(r.projection_l2),
                fmt_f64(r.paired_l2),
                fmt_f64(r.w1_paired),
                fmt_f64(r.w1_f),
                fmt_f64(r.w1_phi),
                fmt_f64(r.slack),
                r.coupling_holds.to_string(),
                r.triangle_holds.to_string(),
            ]);
        }
        t
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for level in &self.skipped {
            s += &format!("warning: level {level} projection is constant; skipped\n");
        }
        for r in &self.rows {
            s += &format!(
                "n = {:>6}  r = {:>2}  |f-phi| = {:.6}  |W^f-W^phi| = {:.6}  w1(W^f,W^phi) = {:.6}  w1(W^f,Z) = {:.6}  w1(W^phi,Z) = {:.6}\n",
                r.n, r.level, r.projection_l2, r.paired_l2, r.w1_paired, r.w1_f, r.w1_phi
            );
        }
        s
    }
}

// ---------------------------------------------------------------------------
// project

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub level: u32,
    pub step: StepFunction,
    /// ‖f − φ‖_{L²}.
    pub l2_error: f64,
    pub degenerate: bool,
}

pub fn run_project(cfg: &ExperimentConfig) -> Result<Vec<Projection>> {
    let f = fourier_of(&cfg.function, "projection")?;
    cfg.levels
        .iter()
        .map(|&level| {
            let step = f.project_to_step(level)?;
            Ok(Projection {
                level,
                l2_error: f.projection_error(level)?,
                degenerate: step.is_degenerate(),
                step,
            })
        })
        .collect()
}

pub fn projection_table(projections: &[Projection]) -> CsvTable {
    let mut t = CsvTable::new(["level", "index", "value"]);
    for p in projections {
        for (i, v) in p.step.values().iter().enumerate() {
            t.push(vec![p.level.to_string(), i.to_string(), fmt_f64(*v)]);
        }
    }
    t
}

// ---------------------------------------------------------------------------
// driver

/// What a run produced: the CSV, a human-readable summary, and whether an
/// empirical inequality failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: CsvTable,
    pub summary: String,
    pub violation: bool,
}

/// Runs the configured mode. Raw samples are written when requested.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.mode {
        Mode::Simulate => {
            let report = run_simulate(cfg)?;
            if let (Some(path), Some(set)) = (&cfg.dump_samples, &report.samples) {
                write_samples(set, BufWriter::new(File::create(path)?))?;
            }
            let summary = report
                .rows
                .iter()
                .map(|r| {
                    format!(
                        "n = {:>8}  mean = {:+.5}  var = {:.5}  w1 = {:.6}\n",
                        r.n, r.sample_mean, r.sample_var, r.w1_to_normal
                    )
                })
                .collect();
            Ok(Outcome {
                table: report.table(),
                summary,
                violation: false,
            })
        }
        Mode::ExactStats => {
            let stats = run_exact_stats(cfg)?;
            Ok(Outcome {
                table: exact_stats_table(&stats),
                summary: format!(
                    "r = {}  var0 = {}  C3 = {}  sigma^2/n -> {}  D = {}\n",
                    stats.level, stats.var0, stats.c3, stats.sigma_sq_limit, stats.dependency
                ),
                violation: false,
            })
        }
        Mode::Convergence => {
            let report = run_convergence(cfg)?;
            Ok(Outcome {
                table: report.table(),
                summary: report.summary(),
                violation: false,
            })
        }
        Mode::Certify => {
            let report = run_certify(cfg)?;
            Ok(Outcome {
                table: report.table(),
                summary: report.summary(),
                violation: !report.all_hold(),
            })
        }
        Mode::Approximate => {
            let report = run_approximate(cfg)?;
            Ok(Outcome {
                table: report.table(),
                summary: report.summary(),
                violation: !report.all_hold(),
            })
        }
        Mode::Project => {
            let projections = run_project(cfg)?;
            let summary = projections
                .iter()
                .map(|p| {
                    format!(
                        "level {:>2}: |f - phi|_L2 = {:.6e}{}\n",
                        p.level,
                        p.l2_error,
                        if p.degenerate { " (constant)" } else { "" }
                    )
                })
                .collect();
            Ok(Outcome {
                table: projection_table(&projections),
                summary,
                violation: false,
            })
        }
    }
}

/// Writes the CSV of `outcome` to `path`.
pub fn write_table(outcome: &Outcome, path: &Path) -> Result<()> {
    outcome.table.write(BufWriter::new(File::create(path)?))
}

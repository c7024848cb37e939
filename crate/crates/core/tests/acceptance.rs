//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use kac_clt::experiments::{
    run_approximate, run_certify, run_convergence, with_threads, ExperimentConfig, FunctionSource,
    Mode,
};
use kac_clt::{
    covariance, fourier_sum_variance, l2_paired, stein_bound, sum_variance, w1_paired,
    w1_to_normal, ExactStats, FourierFunction, StepFunction,
};

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn step(values: &[f64]) -> FunctionSource {
    FunctionSource::Step {
        level: values.len().ilog2(),
        values: values.to_vec(),
    }
}

fn fourier(coeffs: &[f64]) -> FunctionSource {
    FunctionSource::Fourier {
        coeffs: coeffs.to_vec(),
        m: 2.0,
        beta: 1.0,
        max_terms: None,
    }
}

fn config(mode: Mode, source: FunctionSource, n_grid: Vec<u64>, replicates: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(mode, source).expect("valid config");
    cfg.n_grid = n_grid;
    cfg.replicates = replicates;
    cfg.master_seed = SEED;
    cfg
}

fn powers_of_two(lo: u32, hi: u32, stride: u32) -> Vec<u64> {
    (lo..=hi).step_by(stride as usize).map(|e| 1u64 << e).collect()
}

// Cov(X_0, X_k) from φ at the midpoints of the 2^{r+k} dyadic intervals.
fn midpoint_covariance(values: &[f64], k: u32) -> f64 {
    let r = values.len().ilog2();
    let cells = 1u64 << (r + k);
    let phi = |t: f64| values[(t * values.len() as f64).floor() as usize];
    let mut sum = 0.0;
    let mut mean = 0.0;
    for j in 0..cells {
        let t = (j as f64 + 0.5) / cells as f64;
        let shifted = (t * (1u64 << k) as f64).fract();
        sum += phi(t) * phi(shifted);
        mean += phi(t);
    }
    let mean = mean / cells as f64;
    sum / cells as f64 - mean * mean
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..50 {
        let r = rng.random_range(1..=4u32);
        let raw: Vec<f64> = (0..1 << r).map(|_| rng.random_range(-5.0..5.0)).collect();
        let phi = StepFunction::new(r, raw).unwrap().center();
        for k in 1..=r + 2 {
            let got = covariance(&phi, k as u64).unwrap();
            let want = midpoint_covariance(phi.values(), k);
            worst = worst.max((got - want).abs());
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("{cases} cases, max |diff| = {worst:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let phi = StepFunction::from_values(vec![3.0, 1.0, -1.0, -3.0]).unwrap();
    let s = ExactStats::compute(&phi).unwrap();
    let pins = [
        ("var0", s.var0, 5.0),
        ("rho(1)", s.rho[0], 0.4),
        ("C3", s.c3, 0.8),
        ("sigma_sq_limit", s.sigma_sq_limit, 9.0),
        ("m3", s.abs_moment3, 14.0),
        ("m4", s.abs_moment4, 41.0),
    ];
    let mut worst = pins.iter().map(|(_, got, want)| (got - want).abs()).fold(0.0, f64::max);
    for n in 1..=4096u64 {
        let got = sum_variance(&phi, n).unwrap();
        worst = worst.max((got - (9.0 * n as f64 - 4.0)).abs());
    }
    outcome(worst <= 1e-12, format!("max |diff| = {worst:.2e} (9n-4 for n <= 4096)"))
}

fn criterion_3() -> Outcome {
    let phi = StepFunction::from_values(vec![1.0, -1.0]).unwrap();
    let c = (28.0 / PI).sqrt();
    let mut worst = 0.0f64;
    for n in [1u64, 100, 1024] {
        let got = stein_bound(&phi, n).unwrap();
        worst = worst.max((got - (1.0 + c) / (n as f64).sqrt()).abs());
    }
    let at_1024 = stein_bound(&phi, 1024).unwrap();
    outcome(
        worst <= 1e-12 && (at_1024 - 0.124544).abs() <= 1e-6,
        format!("max |diff| = {worst:.2e}, bound(1024) = {at_1024:.7}"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for values in [&[1.0, -1.0][..], &[3.0, 1.0, -1.0, -3.0], &[1.0, -1.0, -1.0, 1.0]] {
        let cfg = config(Mode::Certify, step(values), powers_of_two(6, 10, 2), 100_000);
        let report = run_certify(&cfg).unwrap();
        pass &= report.all_hold();
        for r in &report.rows {
            lines.push(format!(
                "{values:?} n={} w1={:.5}±{:.5} bound={:.5}",
                r.n, r.w1_empirical, r.bootstrap_se, r.stein_bound
            ));
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    outcome(pass, format!("{elapsed:.2?}\n    {}", lines.join("\n    ")))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for values in [&[1.0, -1.0][..], &[3.0, 1.0, -1.0, -3.0]] {
        let cfg = config(Mode::Convergence, step(values), powers_of_two(4, 12, 1), 100_000);
        let report = run_convergence(&cfg).unwrap();
        let fit = report.slope.unwrap();
        pass &= (-0.65..=-0.35).contains(&fit.slope);
        let below_bound = report
            .rows
            .iter()
            .all(|r| r.stein_bound.is_some_and(|b| r.w1_empirical <= b));
        lines.push(format!(
            "{values:?} slope={:.4} residual={:.4} w1<=bound on every row: {below_bound}",
            fit.slope, fit.residual
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    outcome(pass, format!("{elapsed:.2?}\n    {}", lines.join("\n    ")))
}

// E[(Σ_{k<n} f(2^k t))²] by the trapezoid rule on a periodic grid, exact for
// trigonometric polynomials of degree below the grid size.
fn quadrature_sum_variance(f: &FourierFunction, n: u32) -> f64 {
    let points = 1usize << 14;
    let mut acc = 0.0;
    for j in 0..points {
        let t = j as f64 / points as f64;
        let s: f64 = (0..n)
            .map(|k| {
                f.coefficients()
                    .iter()
                    .enumerate()
                    .map(|(m, a)| a * (2.0 * PI * (m as f64 + 1.0) * (1u64 << k) as f64 * t).cos())
                    .sum::<f64>()
            })
            .sum();
        acc += s * s;
    }
    acc / points as f64
}

fn criterion_6() -> Outcome {
    let f = FourierFunction::new(vec![1.0, 0.5], 2.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=6u32 {
        let got = fourier_sum_variance(&f, n as u64).unwrap();
        let closed = 9.0 / 8.0 * n as f64 - 0.5;
        worst = worst
            .max((got - quadrature_sum_variance(&f, n)).abs())
            .max((got - closed).abs());
    }
    let cfg = config(Mode::Convergence, fourier(&[1.0, 0.5]), powers_of_two(4, 12, 2), 100_000);
    let report = run_convergence(&cfg).unwrap();
    let w: Vec<f64> = report.rows.iter().map(|r| r.w1_empirical).collect();
    let decreasing = w.windows(2).all(|p| p[1] < p[0]);
    let last = *w.last().unwrap();
    outcome(
        worst <= 1e-9 && decreasing && last < 0.1,
        format!(
            "variance max |diff| = {worst:.2e}; w1 = [{}]",
            w.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let zero = w1_to_normal(&[0.0]).unwrap().distance;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let z: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
    let shifted: Vec<f64> = z.iter().map(|x| x + 0.5).collect();
    let w_z = w1_to_normal(&z).unwrap().distance;
    let w_shift = w1_to_normal(&shifted).unwrap().distance;
    let elapsed = start.elapsed();
    outcome(
        (zero - (2.0 / PI).sqrt()).abs() <= 1e-12
            && w_z <= 0.005
            && (w_shift - 0.5).abs() <= 0.01
            && elapsed < Duration::from_secs(30),
        format!("w1({{0}}) = {zero:.15}, N(0,1): {w_z:.5}, N(0.5,1): {w_shift:.5}, {elapsed:.2?}"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut exceptions = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..1000 {
        let len = rng.random_range(1..=1000);
        let rho: f64 = rng.random_range(-1.0..1.0);
        let scale: f64 = rng.random_range(0.1..3.0);
        let shift: f64 = rng.random_range(-1.0..1.0);
        let x: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| {
                let e: f64 = rng.sample(StandardNormal);
                scale * (rho * xi + (1.0 - rho * rho).sqrt() * e) + shift
            })
            .collect();
        let w = w1_paired(&x, &y).unwrap().distance;
        let l2 = l2_paired(&x, &y).unwrap();
        if w > l2 {
            exceptions += 1;
        }
        tightest = tightest.min(l2 - w);
    }
    outcome(
        exceptions == 0,
        format!("{exceptions} exceptions in 1000 arrays, min l2 - w1 = {tightest:.3e}"),
    )
}

fn criterion_9() -> Outcome {
    let cfg = config(Mode::Convergence, step(&[3.0, 1.0, -1.0, -3.0]), powers_of_two(4, 10, 2), 20_000);
    let max_threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let csv = |threads| {
        with_threads(Some(threads), || run_convergence(&cfg))
            .unwrap()
            .unwrap()
            .table()
            .to_csv_string()
    };
    let a = csv(1);
    let b = csv(1);
    let c = csv(max_threads);
    outcome(
        a == b && a == c,
        format!("1 thread twice and {max_threads} threads, {} bytes", a.len()),
    )
}

fn criterion_10() -> Outcome {
    let mut cfg = config(Mode::Approximate, fourier(&[1.0]), vec![256], 10_000);
    cfg.levels = vec![2, 4, 6, 8];
    let report = run_approximate(&cfg).unwrap();
    let coupled = report.rows.iter().all(|r| r.w1_paired <= r.paired_l2);
    let decreasing = report.paired_l2_decreasing() && report.rows.len() == 4;
    outcome(
        coupled && decreasing,
        format!(
            "paired_l2 = [{}], w1_paired <= paired_l2 on every row: {coupled}",
            report
                .rows
                .iter()
                .map(|r| format!("{:.5}", r.paired_l2))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("exact covariance matches midpoint oracle", criterion_1),
        ("closed-form statistics of (3,1,-1,-3)", criterion_2),
        ("Stein bound of (1,-1)", criterion_3),
        ("empirical W1 below Stein bound", criterion_4),
        ("convergence slope of step functions", criterion_5),
        ("Fourier variance and decreasing W1", criterion_6),
        ("W1 estimator pins", criterion_7),
        ("paired W1 below paired L2", criterion_8),
        ("byte-identical CSV across thread counts", criterion_9),
        ("approximation study", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {name}: {}", i + 1, result.detail);
        failed += usize::from(!result.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

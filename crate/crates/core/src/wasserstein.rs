//! Wasserstein-1 distances between empirical laws on the line.
//!
//! In one dimension d_W(X, Y) = ∫|F_X − F_Y|. Against the standard normal the
//! empirical CDF is a step function, and on each step the integral of
//! |k/N − Φ| has a closed form through the antiderivative xΦ(x) + ϕ(x) of Φ,
//! split at the crossing point Φ⁻¹(k/N) when there is one. Nothing is
//! truncated or discretized.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitstream::split_seed;
use crate::error::{Error, Result};
use crate::functions::neumaier_sum;
use crate::normal;

/// Number of bootstrap resamples used for standard errors.
pub const BOOTSTRAP_RESAMPLES: usize = 20;

/// Mixed into the master seed before splitting bootstrap seeds, so bootstrap
/// streams never coincide with replicate streams.
pub const BOOTSTRAP_SALT: u64 = 0xB007_57A9_5EED_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum W1Method {
    /// Empirical CDF against Φ.
    ToNormalCdf,
    /// Two empirical laws matched by order statistics.
    PairedSorted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W1Report {
    pub distance: f64,
    pub n: usize,
    pub method: W1Method,
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    Ok(())
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// ∫_{−∞}^x Φ.
fn lower_integral(x: f64) -> f64 {
    x * normal::cdf(x) + normal::pdf(x)
}

/// ∫_x^∞ (1 − Φ).
fn upper_integral(x: f64) -> f64 {
    normal::pdf(x) - x * normal::sf(x)
}

struct Point {
    x: f64,
    cdf: f64,
    lower: f64,
    upper: f64,
}

impl Point {
    fn new(x: f64) -> Point {
        Point {
            x,
            cdf: normal::cdf(x),
            lower: lower_integral(x),
            upper: upper_integral(x),
        }
    }
}

/// ∫_a^b (Φ − p), using the tail where the antiderivative is better conditioned.
fn signed_integral(a: &Point, b: &Point, p: f64) -> f64 {
    let width = b.x - a.x;
    if a.x + b.x < 0.0 {
        (b.lower - a.lower) - p * width
    } else {
        // Φ − p = (1 − p) − (1 − Φ)
        (1.0 - p) * width - (a.upper - b.upper)
    }
}

/// ∫_a^b |p − Φ| for a ≤ b.
fn segment(a: &Point, b: &Point, p: f64) -> f64 {
    if a.x == b.x {
        return 0.0;
    }
    if a.cdf >= p {
        signed_integral(a, b, p).max(0.0)
    } else if b.cdf <= p {
        (-signed_integral(a, b, p)).max(0.0)
    } else {
        let c = Point::new(normal::quantile(p).clamp(a.x, b.x));
        (-signed_integral(a, &c, p)).max(0.0) + signed_integral(&c, b, p).max(0.0)
    }
}

/// d_W between the empirical law of `samples` and N(0, 1).
pub fn w1_to_normal(samples: &[f64]) -> Result<W1Report> {
    check_samples(samples)?;
    let xs = sorted(samples);
    let n = xs.len();
    let points: Vec<Point> = xs.iter().map(|&x| Point::new(x)).collect();
    let head = points[0].lower;
    let tail = points[n - 1].upper;
    let middle = points
        .windows(2)
        .enumerate()
        .map(|(k, w)| segment(&w[0], &w[1], (k + 1) as f64 / n as f64));
    let distance = neumaier_sum(std::iter::once(head).chain(middle).chain(std::iter::once(tail)));
    Ok(W1Report {
        distance,
        n,
        method: W1Method::ToNormalCdf,
    })
}

/// d_W between the empirical laws of `x` and `y`: (1/N) Σ |x₍ᵢ₎ − y₍ᵢ₎|.
pub fn w1_paired(x: &[f64], y: &[f64]) -> Result<W1Report> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    check_samples(x)?;
    check_samples(y)?;
    let (xs, ys) = (sorted(x), sorted(y));
    let distance = neumaier_sum(xs.iter().zip(&ys).map(|(a, b)| (a - b).abs())) / x.len() as f64;
    Ok(W1Report {
        distance,
        n: x.len(),
        method: W1Method::PairedSorted,
    })
}

/// ‖X − Y‖_{L²} for samples coupled by index: √((1/N) Σ (xᵢ − yᵢ)²).
///
/// Since d_W(X, Y) ≤ E|X − Y| ≤ ‖X − Y‖_{L²} for any coupling, this majorizes
/// [`w1_paired`] on the same arrays.
pub fn l2_paired(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    check_samples(x)?;
    check_samples(y)?;
    let sq = neumaier_sum(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)));
    Ok((sq / x.len() as f64).sqrt())
}

/// (1/N) Σ |xᵢ − yᵢ| for samples coupled by index.
pub fn mean_abs_paired(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    check_samples(x)?;
    check_samples(y)?;
    Ok(neumaier_sum(x.iter().zip(y).map(|(a, b)| (a - b).abs())) / x.len() as f64)
}

/// Bootstrap standard error of `estimator` over [`BOOTSTRAP_RESAMPLES`]
/// resamples with replacement. Resample `b` draws indices from ChaCha8
/// seeded with `split_seed(seed ^ BOOTSTRAP_SALT, b)`.
pub fn bootstrap_se<F>(samples: &[f64], seed: u64, estimator: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    check_samples(samples)?;
    let n = samples.len();
    let mut buf = vec![0.0; n];
    let stats = (0..BOOTSTRAP_RESAMPLES as u64)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed ^ BOOTSTRAP_SALT, b));
            for slot in buf.iter_mut() {
                *slot = samples[rng.random_range(0..n)];
            }
            estimator(&buf)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = neumaier_sum(stats.iter().copied()) / stats.len() as f64;
    let var = neumaier_sum(stats.iter().map(|s| (s - mean) * (s - mean))) / (stats.len() - 1) as f64;
    Ok(var.sqrt())
}

/// Bootstrap standard error of [`w1_to_normal`].
pub fn w1_to_normal_se(samples: &[f64], seed: u64) -> Result<f64> {
    bootstrap_se(samples, seed, |s| Ok(w1_to_normal(s)?.distance))
}

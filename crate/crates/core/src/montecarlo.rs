//! Seeded replication of the normalized Birkhoff sum
//! W_n = (Σ_{k<n} f(T^k α) − nμ) / σ_n, with σ_n² = Var(Σ_{k<n} f(T^k α)).
//!
//! Replicate `j` draws its sample point from the digit stream seeded by
//! [`split_seed`]`(master_seed, j)`, holding `n + 64` digits. Step functions
//! read `r`-digit windows; cosine series read 53-digit windows as reals.
//! Replicates are pure functions of their seed and are collected in index
//! order, so output does not depend on the thread count.

use rayon::prelude::*;

use crate::bitstream::{split_seed, DigitStream, DEFAULT_WINDOW_WIDTH};
use crate::error::{Error, Result};
use crate::exact_stats::{fourier_sum_variance, ExactStats};
use crate::functions::{neumaier_sum, FunctionSpec, DEGENERACY_THRESHOLD};
use crate::wasserstein::l2_paired;

/// Digits generated past the horizon so the last window is always complete.
pub const GUARD_DIGITS: usize = 64;

/// Limits on a single sampling request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_replicates: usize,
    pub max_horizon: u64,
    /// Cap on n · N, the number of function evaluations.
    pub max_evaluations: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_replicates: 1_000_000,
            max_horizon: 1 << 20,
            max_evaluations: 1 << 36,
        }
    }
}

impl Budget {
    pub fn check(&self, n: u64, replicates: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::ZeroHorizon);
        }
        if replicates == 0 {
            return Err(Error::EmptySample);
        }
        if replicates > self.max_replicates {
            return Err(Error::BudgetExceeded(format!(
                "{replicates} replicates > {}",
                self.max_replicates
            )));
        }
        if n > self.max_horizon {
            return Err(Error::BudgetExceeded(format!("horizon {n} > {}", self.max_horizon)));
        }
        match n.checked_mul(replicates as u64) {
            Some(work) if work <= self.max_evaluations => Ok(()),
            _ => Err(Error::BudgetExceeded(format!(
                "{n} x {replicates} evaluations > {}",
                self.max_evaluations
            ))),
        }
    }
}

/// N replicated draws of W_n with the metadata needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub n: u64,
    pub replicates: usize,
    pub values: Vec<f64>,
    pub master_seed: u64,
    pub function_digest: String,
    pub sigma_n: f64,
}

impl SampleSet {
    pub fn mean(&self) -> f64 {
        neumaier_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// Unbiased sample variance (zero for a single replicate).
    pub fn variance(&self) -> f64 {
        let len = self.values.len();
        if len < 2 {
            return 0.0;
        }
        let mean = self.mean();
        neumaier_sum(self.values.iter().map(|v| (v - mean) * (v - mean))) / (len - 1) as f64
    }

    /// True when |mean| ≤ 4/√N, the expected range for a mean-zero,
    /// unit-variance law.
    pub fn mean_within_noise(&self) -> bool {
        self.mean().abs() <= 4.0 / (self.values.len() as f64).sqrt()
    }
}

/// Exact normalizer σ_n of a function: the square root of the variance of
/// the n-term Birkhoff sum.
pub fn sigma_n(spec: &FunctionSpec, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    let sigma_sq = match spec {
        FunctionSpec::Step(phi) => {
            if phi.is_degenerate() {
                return Err(Error::Degenerate);
            }
            ExactStats::compute(&phi.center())?.sum_variance(n)?
        }
        FunctionSpec::Fourier(f) => fourier_sum_variance(f, n)?,
    };
    if sigma_sq <= DEGENERACY_THRESHOLD {
        return Err(Error::Degenerate);
    }
    Ok(sigma_sq.sqrt())
}

/// A function prepared for repeated evaluation of W_n at a fixed horizon.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    spec: &'a FunctionSpec,
    n: u64,
    mu: f64,
    sigma_n: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(spec: &'a FunctionSpec, n: u64) -> Result<Self> {
        Ok(Sampler {
            spec,
            n,
            mu: spec.mean(),
            sigma_n: sigma_n(spec, n)?,
        })
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    /// Digits needed per replicate.
    pub fn stream_len(&self) -> usize {
        self.n as usize + GUARD_DIGITS
    }

    /// Σ_{k<n} f(T^k α) for the point held by `stream`.
    ///
    /// # Panics
    ///
    /// Panics if the stream is shorter than [`Sampler::stream_len`].
    pub fn birkhoff_sum(&self, stream: &DigitStream) -> f64 {
        assert!(stream.len() >= self.stream_len(), "stream too short for horizon {}", self.n);
        let n = self.n as usize;
        match self.spec {
            FunctionSpec::Step(phi) => {
                let r = phi.level();
                let values = phi.values();
                (0..n).map(|k| values[stream.bits_unchecked(k, r) as usize]).sum()
            }
            FunctionSpec::Fourier(f) => {
                let scale = 1.0 / (1u64 << DEFAULT_WINDOW_WIDTH) as f64;
                (0..n)
                    .map(|k| f.eval(stream.bits_unchecked(k, DEFAULT_WINDOW_WIDTH) as f64 * scale))
                    .sum()
            }
        }
    }

    /// W_n for the point held by `stream`.
    pub fn standardized(&self, stream: &DigitStream) -> f64 {
        (self.birkhoff_sum(stream) - self.n as f64 * self.mu) / self.sigma_n
    }

    /// The digit stream of replicate `j`.
    pub fn stream(&self, master_seed: u64, replicate: u64) -> DigitStream {
        DigitStream::generate(split_seed(master_seed, replicate), self.stream_len())
    }
}

/// Draws N replicates of W_n.
pub fn sample_w(
    spec: &FunctionSpec,
    n: u64,
    replicates: usize,
    master_seed: u64,
    budget: &Budget,
) -> Result<SampleSet> {
    budget.check(n, replicates)?;
    let sampler = Sampler::new(spec, n)?;
    let values: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|j| sampler.standardized(&sampler.stream(master_seed, j)))
        .collect();
    Ok(SampleSet {
        n,
        replicates,
        values,
        master_seed,
        function_digest: spec.digest(),
        sigma_n: sampler.sigma_n(),
    })
}

/// Draws W_n for two functions from the same sample point in every
/// replicate.
pub fn paired_samples(
    first: &FunctionSpec,
    second: &FunctionSpec,
    n: u64,
    replicates: usize,
    master_seed: u64,
    budget: &Budget,
) -> Result<(SampleSet, SampleSet)> {
    budget.check(n, replicates.saturating_mul(2))?;
    let a = Sampler::new(first, n)?;
    let b = Sampler::new(second, n)?;
    let pairs: Vec<(f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|j| {
            let stream = a.stream(master_seed, j);
            (a.standardized(&stream), b.standardized(&stream))
        })
        .collect();
    let (va, vb) = pairs.into_iter().unzip();
    let set = |spec: &FunctionSpec, values, sigma_n| SampleSet {
        n,
        replicates,
        values,
        master_seed,
        function_digest: spec.digest(),
        sigma_n,
    };
    Ok((set(first, va, a.sigma_n()), set(second, vb, b.sigma_n())))
}

/// ‖W_n^f − W_n^φ‖_{L²} estimated from N coupled replicates.
pub fn paired_l2_distance(
    f: &FunctionSpec,
    phi: &FunctionSpec,
    n: u64,
    replicates: usize,
    master_seed: u64,
    budget: &Budget,
) -> Result<f64> {
    let (a, b) = paired_samples(f, phi, n, replicates, master_seed, budget)?;
    l2_paired(&a.values, &b.values)
}

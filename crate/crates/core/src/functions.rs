//! Observables: dyadic step functions and truncated even cosine series.
//!
//! A level-`r` step function is constant on each `[i/2^r, (i+1)/2^r)`, so its
//! value at α depends only on the first `r` binary digits of α: the value
//! index `i` is the integer whose binary digits are ε₁…ε_r. Cosine series are
//! evaluated on the real value of a digit window.

use std::f64::consts::PI;

use sha2::{Digest, Sha256};

use crate::bitstream::DyadicWindow;
use crate::error::{Error, Result};

/// Largest supported step-function level.
pub const MAX_LEVEL: u32 = 26;

/// Default number of stored cosine coefficients.
pub const DEFAULT_MAX_TERMS: usize = 64;

/// A step function whose value variance is at or below this is treated as
/// constant.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Tolerance (relative to the largest |value|) for a step function to count
/// as centered.
pub const CENTERING_TOLERANCE: f64 = 1e-12;

/// φ(t) = c_i on [i/2^r, (i+1)/2^r).
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    level: u32,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::InvalidLevel(level));
        }
        let expected = 1usize << level;
        if values.len() != expected {
            return Err(Error::ValueCount {
                level,
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("step function values"));
        }
        Ok(StepFunction { level, values })
    }

    /// Infers the level from the number of values, which must be a power of
    /// two no smaller than 2.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::ValueCount {
                level: len.max(1).ilog2(),
                expected: len.max(2).next_power_of_two(),
                got: len,
            });
        }
        StepFunction::new(len.ilog2(), values)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on the interval with index `i` (digits ε₁…ε_r of `i`).
    #[inline]
    pub fn value_at(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// φ at the point whose leading digits are held by `window`.
    pub fn eval(&self, window: &DyadicWindow) -> Result<f64> {
        let index = window.leading(self.level).ok_or(Error::InsufficientDigits {
            width: window.width(),
            level: self.level,
        })?;
        Ok(self.values[index as usize])
    }

    /// ∫φ = 2^{-r} Σ c_i.
    pub fn mean(&self) -> f64 {
        neumaier_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// Variance of the values under the uniform weight, ∫(φ − ∫φ)².
    pub fn value_variance(&self) -> f64 {
        let mu = self.mean();
        neumaier_sum(self.values.iter().map(|v| (v - mu) * (v - mu))) / self.values.len() as f64
    }

    /// True when φ is constant up to [`DEGENERACY_THRESHOLD`], in which case
    /// every Birkhoff sum of it has zero variance.
    pub fn is_degenerate(&self) -> bool {
        self.value_variance() <= DEGENERACY_THRESHOLD
    }

    /// φ − ∫φ.
    pub fn center(&self) -> StepFunction {
        let mu = self.mean();
        StepFunction {
            level: self.level,
            values: self.values.iter().map(|v| v - mu).collect(),
        }
    }

    pub fn is_centered(&self) -> bool {
        let scale = self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        self.mean().abs() <= CENTERING_TOLERANCE * scale
    }

    /// Conditional expectation onto the coarser dyadic partition of `level`:
    /// each coarse value is the average of the `2^(r - level)` fine values it
    /// covers. `level == self.level()` returns a copy.
    pub fn coarsen(&self, level: u32) -> Result<StepFunction> {
        if level == 0 || level > self.level {
            return Err(Error::InvalidLevel(level));
        }
        let block = 1usize << (self.level - level);
        let values = self
            .values
            .chunks(block)
            .map(|c| neumaier_sum(c.iter().copied()) / block as f64)
            .collect();
        StepFunction::new(level, values)
    }

    /// The same function written at a finer level.
    pub fn refine(&self, level: u32) -> Result<StepFunction> {
        if level < self.level || level > MAX_LEVEL {
            return Err(Error::InvalidLevel(level));
        }
        let repeat = 1usize << (level - self.level);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, repeat))
            .collect();
        StepFunction::new(level, values)
    }
}

/// f(t) = Σ_{m=1}^{M_max} a_m cos(2πmt), with the decay envelope
/// |a_m| < M / m^β recorded and checked.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFunction {
    coefficients: Vec<f64>,
    decay_m: f64,
    decay_beta: f64,
}

impl FourierFunction {
    /// `coefficients[0]` is a₁.
    pub fn new(coefficients: Vec<f64>, decay_m: f64, decay_beta: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::NoCoefficients);
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("cosine coefficients"));
        }
        if !(decay_m.is_finite() && decay_m > 0.0 && decay_beta.is_finite() && decay_beta > 0.5) {
            return Err(Error::InvalidEnvelope {
                m: decay_m,
                beta: decay_beta,
            });
        }
        for (i, &a) in coefficients.iter().enumerate() {
            let bound = decay_m / ((i + 1) as f64).powf(decay_beta);
            if a.abs() >= bound {
                return Err(Error::DecayViolation {
                    index: i + 1,
                    value: a,
                    bound,
                });
            }
        }
        Ok(FourierFunction {
            coefficients,
            decay_m,
            decay_beta,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// a_m for m ≥ 1; zero past the stored terms.
    pub fn coefficient(&self, m: usize) -> f64 {
        match m {
            0 => 0.0,
            m => self.coefficients.get(m - 1).copied().unwrap_or(0.0),
        }
    }

    /// Number of stored terms, M_max.
    pub fn terms(&self) -> usize {
        self.coefficients.len()
    }

    pub fn decay_m(&self) -> f64 {
        self.decay_m
    }

    pub fn decay_beta(&self) -> f64 {
        self.decay_beta
    }

    /// Keeps the first `max_terms` coefficients.
    pub fn truncate(&self, max_terms: usize) -> Result<FourierFunction> {
        let keep = self.coefficients.len().min(max_terms);
        FourierFunction::new(self.coefficients[..keep].to_vec(), self.decay_m, self.decay_beta)
    }

    /// Σ a_m cos(2πmt), by Clenshaw's recurrence on cos(2πt).
    pub fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * PI * t).cos();
        let two_x = 2.0 * x;
        let (mut b1, mut b2) = (0.0f64, 0.0f64);
        for &a in self.coefficients.iter().rev() {
            let b0 = a + two_x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2
    }

    /// f at the real value of `window`.
    pub fn eval_window(&self, window: &DyadicWindow) -> f64 {
        self.eval(window.value())
    }

    /// ∫f² = ½ Σ a_m².
    pub fn l2_norm_sq(&self) -> f64 {
        0.5 * neumaier_sum(self.coefficients.iter().map(|a| a * a))
    }

    /// Σ |a_m|, a uniform bound on |f|.
    pub fn sup_bound(&self) -> f64 {
        self.coefficients.iter().map(|a| a.abs()).sum()
    }

    /// Upper bound on the squared L² norm of everything the envelope allows
    /// past the stored terms: ½ Σ_{m > M_max} (M/m^β)² ≤ ½ M² M_max^{1−2β}/(2β−1).
    pub fn tail_bound(&self) -> f64 {
        let k = self.coefficients.len() as f64;
        let e = 2.0 * self.decay_beta;
        0.5 * self.decay_m * self.decay_m * k.powf(1.0 - e) / (e - 1.0)
    }

    /// Level-`level` conditional expectation of f:
    /// c_i = 2^r ∫_{i/2^r}^{(i+1)/2^r} f, from the sine antiderivative,
    /// then re-centered to remove rounding residue.
    pub fn project_to_step(&self, level: u32) -> Result<StepFunction> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::InvalidLevel(level));
        }
        let cells = 1usize << level;
        let mask = cells as u64 - 1;
        let scale = cells as f64;
        let mut values = vec![0.0f64; cells];
        for (idx, &a) in self.coefficients.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let m = (idx + 1) as u64;
            let weight = a * scale / (2.0 * PI * m as f64);
            // sin(2π m j / 2^r) with m·j reduced modulo 2^r first, so the
            // argument stays in [0, 2π).
            let sin_at = |j: u64| (2.0 * PI * ((m.wrapping_mul(j) & mask) as f64) / scale).sin();
            let mut left = 0.0;
            for (i, c) in values.iter_mut().enumerate() {
                let right = sin_at(i as u64 + 1);
                *c += weight * (right - left);
                left = right;
            }
        }
        Ok(StepFunction::new(level, values)?.center())
    }

    /// ‖f − P_r f‖_{L²} where P_r is the level-`level` projection.
    pub fn projection_error(&self, level: u32) -> Result<f64> {
        let phi = self.project_to_step(level)?;
        let kept = neumaier_sum(phi.values().iter().map(|c| c * c)) / phi.values().len() as f64;
        Ok((self.l2_norm_sq() - kept).max(0.0).sqrt())
    }
}

/// An observable together with its exact mean μ = ∫₀¹ f.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Step(StepFunction),
    Fourier(FourierFunction),
}

impl FunctionSpec {
    /// 2^{-r} Σ c_i for step functions, 0 for cosine series.
    pub fn mean(&self) -> f64 {
        match self {
            FunctionSpec::Step(phi) => phi.mean(),
            FunctionSpec::Fourier(_) => 0.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FunctionSpec::Step(_) => "step",
            FunctionSpec::Fourier(_) => "fourier",
        }
    }

    /// Short content hash identifying the function in sample metadata.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        match self {
            FunctionSpec::Step(phi) => {
                h.update(b"step");
                h.update(phi.level().to_le_bytes());
                for v in phi.values() {
                    h.update(v.to_bits().to_le_bytes());
                }
            }
            FunctionSpec::Fourier(f) => {
                h.update(b"fourier");
                h.update(f.decay_m().to_bits().to_le_bytes());
                h.update(f.decay_beta().to_bits().to_le_bytes());
                for a in f.coefficients() {
                    h.update(a.to_bits().to_le_bytes());
                }
            }
        }
        hex::encode(&h.finalize()[..8])
    }
}

impl From<StepFunction> for FunctionSpec {
    fn from(phi: StepFunction) -> Self {
        FunctionSpec::Step(phi)
    }
}

impl From<FourierFunction> for FunctionSpec {
    fn from(f: FourierFunction) -> Self {
        FunctionSpec::Fourier(f)
    }
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

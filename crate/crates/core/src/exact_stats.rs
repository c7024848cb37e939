//! Exact second-order statistics of Birkhoff sums of step functions, and the
//! Stein-method Wasserstein bound built from them.
//!
//! For a centered level-`r` step function φ put X_i = φ(T^i α). X_i reads
//! digits `i+1 ..= i+r`, so X_i and X_j share a digit iff |i − j| ≤ r − 1.
//! Consequently:
//!
//! * the sequence is stationary and Cov(X_i, X_j) depends on |i − j| only;
//! * Cov(X_0, X_k) = 0 for k ≥ r (disjoint digits are independent);
//! * each X_i is independent of all but at most `2r − 1` of the X_j (itself
//!   included), which is the dependency-neighborhood size `D`.
//!
//! Covariances for `k < r` are computed by enumerating the `2^{r+k}` equally
//! likely digit patterns that X_0 and X_k depend on.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::{neumaier_sum, FourierFunction, StepFunction, DEGENERACY_THRESHOLD};

/// Covariance enumeration is refused past `2^MAX_ENUMERATION_BITS` patterns.
pub const MAX_ENUMERATION_BITS: u32 = 26;

const CHUNK_BITS: u32 = 16;

/// √28 / √π, the constant in front of the fourth-moment term of the bound.
pub fn stein_fourth_moment_constant() -> f64 {
    (28.0 / std::f64::consts::PI).sqrt()
}

/// Every exact quantity of a centered step function that the CLT bound uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactStats {
    /// Level r of the step function.
    pub level: u32,
    /// Var(X_0) = ∫φ².
    pub var0: f64,
    /// E|X_0|³.
    pub abs_moment3: f64,
    /// E|X_0|⁴.
    pub abs_moment4: f64,
    /// ρ(1), …, ρ(r−1).
    pub rho: Vec<f64>,
    /// 2 Σ ρ(k).
    pub c3: f64,
    /// lim σ_n²/n = (1 + C₃) var0.
    pub sigma_sq_limit: f64,
    /// Dependency-neighborhood bound 2r − 1.
    pub dependency: u64,
    covariances: Vec<f64>,
}

fn ensure_centered(phi: &StepFunction) -> Result<()> {
    if phi.is_centered() {
        Ok(())
    } else {
        Err(Error::NotCentered(phi.mean()))
    }
}

/// E|X_0|^p = 2^{-r} Σ |c_i|^p for p ∈ {1, 2, 3, 4}.
pub fn abs_moment(phi: &StepFunction, p: u32) -> Result<f64> {
    if !(1..=4).contains(&p) {
        return Err(Error::MomentOrder(p));
    }
    ensure_centered(phi)?;
    let sum = neumaier_sum(phi.values().iter().map(|c| c.abs().powi(p as i32)));
    Ok(sum / phi.values().len() as f64)
}

/// Cov(X_0, X_k) for centered φ.
///
/// Zero for `k ≥ r`; `k = 0` gives the variance.
pub fn covariance(phi: &StepFunction, k: u64) -> Result<f64> {
    ensure_centered(phi)?;
    covariance_unchecked(phi, k)
}

fn covariance_unchecked(phi: &StepFunction, k: u64) -> Result<f64> {
    let r = phi.level();
    if k >= r as u64 {
        return Ok(0.0);
    }
    let k = k as u32;
    let bits = r + k;
    if bits > MAX_ENUMERATION_BITS {
        return Err(Error::EnumerationTooLarge(bits));
    }
    let values = phi.values();
    let mask = (1u64 << r) - 1;
    // pattern p holds digits 1..=r+k; X_0 reads the top r, X_k the bottom r
    let term = |p: u64| values[(p >> k) as usize] * values[(p & mask) as usize];
    let total = 1u64 << bits;
    let sum = if bits <= CHUNK_BITS {
        neumaier_sum((0..total).map(term))
    } else {
        let chunk = 1u64 << CHUNK_BITS;
        let partial: Vec<f64> = (0..total / chunk)
            .into_par_iter()
            .map(|c| neumaier_sum((c * chunk..(c + 1) * chunk).map(term)))
            .collect();
        neumaier_sum(partial)
    };
    Ok(sum / total as f64)
}

/// Var(X_0 + … + X_{n−1}) = n var0 + 2 Σ_{k=1}^{min(r−1, n−1)} (n − k) Cov(X_0, X_k).
pub fn sum_variance(phi: &StepFunction, n: u64) -> Result<f64> {
    ExactStats::compute(phi)?.sum_variance(n)
}

/// Upper bound on d_W((X_0 + … + X_{n−1})/σ_n, Z) for Z ~ N(0, 1):
///
/// D² n m₃ / σ_n³ + √28 D^{3/2} / (√π σ_n²) · √(n m₄)
///
/// with D = 2r − 1, m_p = E|X_0|^p and σ_n² the exact variance of the sum.
pub fn stein_bound(phi: &StepFunction, n: u64) -> Result<f64> {
    ExactStats::compute(phi)?.stein_bound(n)
}

/// Var(Σ_{k<n} f(T^k α)) for a cosine series.
///
/// With cosine orthogonality, Cov(f, f∘T^j) = γ(j) = ½ Σ_m a_m a_{m 2^j}, so
/// the variance is n ½Σa_m² + 2 Σ_{j=1}^{n−1} (n − j) γ(j). γ vanishes once
/// 2^j exceeds the number of stored terms.
pub fn fourier_sum_variance(f: &FourierFunction, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    let terms = f.terms();
    let mut total = vec![n as f64 * f.l2_norm_sq()];
    let mut j = 1u32;
    while (j as u64) < n && j < usize::BITS && (1usize << j) <= terms {
        let step = 1usize << j;
        let gamma = 0.5
            * neumaier_sum((1..=terms / step).map(|m| f.coefficient(m) * f.coefficient(m * step)));
        total.push(2.0 * (n - j as u64) as f64 * gamma);
        j += 1;
    }
    Ok(neumaier_sum(total))
}

impl ExactStats {
    /// Enumerates moments and covariances of a centered step function.
    pub fn compute(phi: &StepFunction) -> Result<ExactStats> {
        ensure_centered(phi)?;
        let r = phi.level();
        let covariances = (0..r as u64)
            .map(|k| covariance_unchecked(phi, k))
            .collect::<Result<Vec<f64>>>()?;
        let var0 = covariances[0];
        let rho: Vec<f64> = if var0 > 0.0 {
            covariances[1..].iter().map(|c| c / var0).collect()
        } else {
            vec![0.0; covariances.len() - 1]
        };
        let c3 = 2.0 * neumaier_sum(rho.iter().copied());
        Ok(ExactStats {
            level: r,
            var0,
            abs_moment3: abs_moment(phi, 3)?,
            abs_moment4: abs_moment(phi, 4)?,
            c3,
            sigma_sq_limit: (1.0 + c3) * var0,
            dependency: 2 * r as u64 - 1,
            rho,
            covariances,
        })
    }

    /// Cov(X_0, X_k); zero for k ≥ r.
    pub fn covariance(&self, k: u64) -> f64 {
        self.covariances.get(k as usize).copied().unwrap_or(0.0)
    }

    /// σ_n² = Var(X_0 + … + X_{n−1}).
    pub fn sum_variance(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::ZeroHorizon);
        }
        let lag_max = (self.level as u64 - 1).min(n - 1);
        let terms = std::iter::once(n as f64 * self.var0)
            .chain((1..=lag_max).map(|k| 2.0 * (n - k) as f64 * self.covariance(k)));
        Ok(neumaier_sum(terms))
    }

    /// The Stein-method bound on d_W(W_n, Z); see [`stein_bound`].
    pub fn stein_bound(&self, n: u64) -> Result<f64> {
        let sigma_sq = self.sum_variance(n)?;
        if self.var0 <= DEGENERACY_THRESHOLD || sigma_sq <= DEGENERACY_THRESHOLD {
            return Err(Error::Degenerate);
        }
        let d = self.dependency as f64;
        let n = n as f64;
        let sigma = sigma_sq.sqrt();
        let third = d * d * n * self.abs_moment3 / (sigma_sq * sigma);
        let fourth = stein_fourth_moment_constant() * d.powf(1.5) / sigma_sq * (n * self.abs_moment4).sqrt();
        Ok(third + fourth)
    }
}

//! Central limit theorem for the angle-doubling map T(α) = 2α mod 1.
//!
//! For an observable f on [0, 1) the Birkhoff sums Σ_{k<n} f(T^k α), with α
//! uniform, are asymptotically normal. This crate makes that statement
//! quantitative:
//!
//! * [`bitstream`] represents α by its binary digits, so T is an exact shift;
//! * [`functions`] holds the observables (dyadic step functions and cosine
//!   series) and the projection of one onto the other;
//! * [`exact_stats`] computes variances, correlations and the Stein-method
//!   bound on the Wasserstein distance to N(0, 1) for step functions;
//! * [`montecarlo`] replicates the standardized sums reproducibly;
//! * [`wasserstein`] measures how far the replicates are from N(0, 1);
//! * [`experiments`] runs the convergence, certification and approximation
//!   studies behind the `kac` command-line tool.

pub mod bitstream;
pub mod error;
pub mod exact_stats;
pub mod experiments;
pub mod functions;
pub mod montecarlo;
pub mod normal;
pub mod wasserstein;

pub use bitstream::{split_seed, DigitStream, DyadicWindow};
pub use error::{Error, Result};
pub use exact_stats::{abs_moment, covariance, fourier_sum_variance, stein_bound, sum_variance, ExactStats};
pub use functions::{FourierFunction, FunctionSpec, StepFunction};
pub use montecarlo::{paired_l2_distance, paired_samples, sample_w, Budget, SampleSet};
pub use wasserstein::{l2_paired, w1_paired, w1_to_normal, W1Method, W1Report};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/digit-streams.md")]
    pub struct DigitStreams;
    #[doc = include_str!("../../../book/src/observables.md")]
    pub struct Observables;
    #[doc = include_str!("../../../book/src/exact-statistics.md")]
    pub struct ExactStatistics;
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    pub struct MonteCarlo;
    #[doc = include_str!("../../../book/src/wasserstein.md")]
    pub struct Wasserstein;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}

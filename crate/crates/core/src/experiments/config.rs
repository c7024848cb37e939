//! Experiment configuration: a TOML file, optionally overridden by flags.
//!
//! ```toml
//! mode = "convergence"
//! seed = 42
//! replicates = 100000
//! n_grid = [16, 64, 256, 1024]
//! out = "convergence.csv"
//!
//! [function.step]
//! level = 2
//! values = [3.0, 1.0, -1.0, -3.0]
//! ```
//!
//! A cosine series is given as
//!
//! ```toml
//! [function.fourier]
//! coeffs = [1.0, 0.5]
//! M = 2.0
//! beta = 1.0
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{FourierFunction, FunctionSpec, StepFunction, DEFAULT_MAX_TERMS};
use crate::montecarlo::Budget;

/// Smallest replicate count accepted by the sampling modes.
pub const MIN_REPLICATES: usize = 100;

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_N_GRID: [u64; 5] = [16, 64, 256, 1024, 4096];
pub const DEFAULT_LEVELS: [u32; 4] = [2, 4, 6, 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    ExactStats,
    Certify,
    Convergence,
    Approximate,
    Project,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::ExactStats => "exact-stats",
            Mode::Certify => "certify",
            Mode::Convergence => "convergence",
            Mode::Approximate => "approximate",
            Mode::Project => "project",
        }
    }

    fn samples(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Certify | Mode::Convergence | Mode::Approximate)
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        [
            Mode::Simulate,
            Mode::ExactStats,
            Mode::Certify,
            Mode::Convergence,
            Mode::Approximate,
            Mode::Project,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

/// Serialized form of a [`FunctionSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSource {
    Step {
        level: u32,
        values: Vec<f64>,
    },
    Fourier {
        coeffs: Vec<f64>,
        #[serde(rename = "M")]
        m: f64,
        beta: f64,
        /// Truncation M_max; defaults to [`DEFAULT_MAX_TERMS`].
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_terms: Option<usize>,
    },
}

impl FunctionSource {
    pub fn build(&self) -> Result<FunctionSpec> {
        Ok(match self {
            FunctionSource::Step { level, values } => StepFunction::new(*level, values.clone())?.into(),
            FunctionSource::Fourier {
                coeffs,
                m,
                beta,
                max_terms,
            } => FourierFunction::new(coeffs.clone(), *m, *beta)?
                .truncate(max_terms.unwrap_or(DEFAULT_MAX_TERMS))?
                .into(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetFile {
    pub max_replicates: Option<usize>,
    pub max_horizon: Option<u64>,
    pub max_evaluations: Option<u64>,
}

/// The config file as written; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    pub function: Option<FunctionSource>,
    pub n_grid: Option<Vec<u64>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub levels: Option<Vec<u32>>,
    pub dump_samples: Option<PathBuf>,
    pub budget: Option<BudgetFile>,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<ConfigFile> {
        ConfigFile::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `overrides` replace those of `self`.
    pub fn merge(self, overrides: ConfigFile) -> ConfigFile {
        ConfigFile {
            mode: overrides.mode.or(self.mode),
            function: overrides.function.or(self.function),
            n_grid: overrides.n_grid.or(self.n_grid),
            replicates: overrides.replicates.or(self.replicates),
            seed: overrides.seed.or(self.seed),
            out: overrides.out.or(self.out),
            levels: overrides.levels.or(self.levels),
            dump_samples: overrides.dump_samples.or(self.dump_samples),
            budget: overrides.budget.or(self.budget),
        }
    }

    /// Fills defaults and validates.
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let mode = self.mode.ok_or_else(|| Error::Config("no mode given".into()))?;
        let source = self
            .function
            .ok_or_else(|| Error::Config("no function given".into()))?;
        let function = source.build()?;
        let defaults = Budget::default();
        let budget = self.budget.unwrap_or_default();
        let config = ExperimentConfig {
            mode,
            function,
            source,
            n_grid: self.n_grid.unwrap_or_else(|| DEFAULT_N_GRID.to_vec()),
            replicates: self.replicates.unwrap_or(DEFAULT_REPLICATES),
            master_seed: self.seed.unwrap_or(DEFAULT_SEED),
            out: self.out,
            levels: self.levels.unwrap_or_else(|| DEFAULT_LEVELS.to_vec()),
            dump_samples: self.dump_samples,
            budget: Budget {
                max_replicates: budget.max_replicates.unwrap_or(defaults.max_replicates),
                max_horizon: budget.max_horizon.unwrap_or(defaults.max_horizon),
                max_evaluations: budget.max_evaluations.unwrap_or(defaults.max_evaluations),
            },
        };
        config.validate()?;
        Ok(config)
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub function: FunctionSpec,
    pub source: FunctionSource,
    /// Strictly increasing horizons.
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    /// Projection levels for `approximate` and `project`.
    pub levels: Vec<u32>,
    pub dump_samples: Option<PathBuf>,
    pub budget: Budget,
}

impl ExperimentConfig {
    /// A config with default grid, replicates and seed.
    pub fn new(mode: Mode, source: FunctionSource) -> Result<ExperimentConfig> {
        ConfigFile {
            mode: Some(mode),
            function: Some(source),
            ..ConfigFile::default()
        }
        .resolve()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::Config("n_grid entries must be at least 1".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.mode.samples() && self.replicates < MIN_REPLICATES {
            return Err(Error::Config(format!(
                "{} needs at least {MIN_REPLICATES} replicates, got {}",
                self.mode.name(),
                self.replicates
            )));
        }
        if matches!(self.mode, Mode::Approximate | Mode::Project) && self.levels.is_empty() {
            return Err(Error::Config("no projection levels given".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEP: &str = r#"
mode = "convergence"
seed = 42
replicates = 1000
n_grid = [16, 64]

[function.step]
level = 2
values = [3.0, 1.0, -1.0, -3.0]
"#;

    #[test]
    fn parses_step_config() {
        let cfg = ConfigFile::from_toml(STEP).unwrap().resolve().unwrap();
        assert_eq!(cfg.mode, Mode::Convergence);
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.replicates, 1000);
        assert_eq!(cfg.n_grid, vec![16, 64]);
        assert_eq!(cfg.levels, DEFAULT_LEVELS.to_vec());
        assert!(matches!(cfg.function, FunctionSpec::Step(_)));
        assert_eq!(cfg.budget, Budget::default());
    }

    #[test]
    fn parses_fourier_config() {
        let text = r#"
mode = "approximate"
levels = [2, 4]
[function.fourier]
coeffs = [1.0, 0.5]
M = 2.0
beta = 1.0
"#;
        let cfg = ConfigFile::from_toml(text).unwrap().resolve().unwrap();
        let FunctionSpec::Fourier(f) = &cfg.function else { panic!() };
        assert_eq!(f.coefficients(), &[1.0, 0.5]);
        assert_eq!(cfg.levels, vec![2, 4]);
    }

    #[test]
    fn fourier_is_truncated() {
        let coeffs: Vec<String> = (1..=100).map(|m| format!("{}", 0.5 / m as f64)).collect();
        let text = format!(
            "mode = \"simulate\"\n[function.fourier]\ncoeffs = [{}]\nM = 1.0\nbeta = 1.0\n",
            coeffs.join(", ")
        );
        let cfg = ConfigFile::from_toml(&text).unwrap().resolve().unwrap();
        let FunctionSpec::Fourier(f) = &cfg.function else { panic!() };
        assert_eq!(f.terms(), DEFAULT_MAX_TERMS);
    }

    #[test]
    fn overrides_win() {
        let base = ConfigFile::from_toml(STEP).unwrap();
        let cfg = base
            .merge(ConfigFile {
                seed: Some(7),
                mode: Some(Mode::Certify),
                ..Default::default()
            })
            .resolve()
            .unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.mode, Mode::Certify);
        assert_eq!(cfg.replicates, 1000);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = || ConfigFile::from_toml(STEP).unwrap();
        let with = |f: ConfigFile| base().merge(f).resolve();
        assert!(with(ConfigFile { n_grid: Some(vec![64, 16]), ..Default::default() }).is_err());
        assert!(with(ConfigFile { n_grid: Some(vec![16, 16]), ..Default::default() }).is_err());
        assert!(with(ConfigFile { n_grid: Some(vec![0, 16]), ..Default::default() }).is_err());
        assert!(with(ConfigFile { n_grid: Some(vec![]), ..Default::default() }).is_err());
        assert!(with(ConfigFile { replicates: Some(99), ..Default::default() }).is_err());
        // exact-stats does not sample, so few replicates are fine
        assert!(with(ConfigFile { replicates: Some(1), mode: Some(Mode::ExactStats), ..Default::default() }).is_ok());
        assert!(ConfigFile::from_toml("mode = \"bogus\"").is_err());
        assert!(ConfigFile::from_toml("unknown = 1").is_err());
        assert!(ConfigFile::from_toml("[function.step]\nlevel = 1\nvalues = [1.0, 2.0]\n").unwrap().resolve().is_err());
        let bad_values = "mode = \"simulate\"\n[function.step]\nlevel = 2\nvalues = [1.0, 2.0]\n";
        assert!(matches!(
            ConfigFile::from_toml(bad_values).unwrap().resolve(),
            Err(Error::ValueCount { .. })
        ));
    }

    #[test]
    fn mode_names_round_trip() {
        for name in ["simulate", "exact-stats", "certify", "convergence", "approximate", "project"] {
            assert_eq!(name.parse::<Mode>().unwrap().name(), name);
        }
    }
}

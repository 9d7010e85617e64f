//! Experiment configuration files.
//!
//! A TOML file with optional sections; anything missing takes the default
//! below. Defaults reproduce the basic reconstruction study: a zero-mean SE
//! prior with `sigma2 = 1` and `alpha = 0.001 * 512^2` on 512 points spanning
//! the unit interval, observed on 2% of each domain with noise variance 0.2.
//!
//! ```toml
//! seed = 7
//!
//! [kernel]
//! family = "squared_exponential"   # or "periodic", which also needs beta
//! sigma2 = 1.0
//! alpha = 262.144
//!
//! [grid]
//! n = 512
//! start = 0.0
//! end = 1.0        # inclusive; a `step` overrides it with t = start + i * step
//!
//! [observations]
//! temporal_fraction = 0.02     # temporal_indices = [...] takes precedence
//! spectral_fraction = 0.02     # likewise spectral_indices; 0 observes nothing
//! sigma2_t = 0.2
//! sigma2_f = 0.2
//! ```
//!
//! `[training]`, `[periodicity]` and `[image]` tune the matching commands.

use std::path::Path;

use brfp::experiments::{ImageConfig, PeriodicityConfig};
use brfp::{KernelSpec, TimeGrid, TrainConfig};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub kernel: KernelSpec,
    pub grid: GridConfig,
    pub observations: ObservationConfig,
    pub training: TrainConfig,
    pub periodicity: PeriodicityConfig,
    pub image: ImageConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            kernel: KernelSpec::squared_exponential(1.0, 0.001 * 512.0 * 512.0),
            grid: GridConfig::default(),
            observations: ObservationConfig::default(),
            training: TrainConfig::default(),
            periodicity: PeriodicityConfig::default(),
            image: ImageConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub start: f64,
    /// Inclusive end point, used unless `step` is given.
    pub end: f64,
    pub step: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 512, start: 0.0, end: 1.0, step: None }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<TimeGrid> {
        let grid = match self.step {
            Some(step) => TimeGrid::regular(self.n, self.start, step)?,
            None => TimeGrid::linspace(self.n, self.start, self.end)?,
        };
        Ok(grid)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationConfig {
    pub temporal_fraction: Option<f64>,
    pub spectral_fraction: Option<f64>,
    pub temporal_indices: Option<Vec<usize>>,
    pub spectral_indices: Option<Vec<usize>>,
    pub sigma2_t: f64,
    pub sigma2_f: f64,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self {
            temporal_fraction: Some(0.02),
            spectral_fraction: Some(0.02),
            temporal_indices: None,
            spectral_indices: None,
            sigma2_t: 0.2,
            sigma2_f: 0.2,
        }
    }
}

impl ExperimentConfig {
    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.grid.build()?;
        let o = &self.observations;
        for (name, v) in [("sigma2_t", o.sigma2_t), ("sigma2_f", o.sigma2_f)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Validation(format!("observations: {name} must be finite and >= 0")));
            }
        }
        for (name, f) in [("temporal_fraction", o.temporal_fraction), ("spectral_fraction", o.spectral_fraction)] {
            if let Some(f) = f {
                if !(0.0..=1.0).contains(&f) {
                    return Err(CliError::Validation(format!("observations: {name} must be in [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reconstruction_study() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let g = c.grid.build().unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.points()[511], 1.0);
        assert_eq!(c.kernel.alpha, 262.144);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let c: ExperimentConfig = toml::from_str(
            "seed = 3\n[kernel]\nfamily = \"periodic\"\nsigma2 = 2.0\nalpha = 1.0\nbeta = 0.5\n[grid]\nn = 64\nstep = 0.1\n",
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.kernel.beta, Some(0.5));
        let g = c.grid.build().unwrap();
        assert_eq!(g.spacing(), Some(0.1));
        assert_eq!(c.observations.sigma2_t, 0.2);
        assert!(toml::from_str::<ExperimentConfig>("[grid]\nsize = 3\n").is_err());
    }
}

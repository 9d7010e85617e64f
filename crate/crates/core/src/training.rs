//! Maximum-likelihood kernel hyperparameters.
//!
//! The log marginal likelihood of the augmented observations is maximised
//! over the log kernel hyperparameters (and, optionally, the log noise
//! variances) with Nelder–Mead. Restart 0 starts at the initial values;
//! every further restart starts from a log-uniform perturbation of them.
//! Restarts run in parallel and the best one wins, ties going to the lowest
//! restart index.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::FourierOperator;
use crate::inference::gaussian_log_density;
use crate::kernels::{build_covariance, jittered_cholesky, symmetrize, KernelSpec, PriorMean, TimeGrid};
use crate::observation::{observation_matrix, ObservationSet};
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    /// Restart starting points are spread log-uniformly over this many
    /// decades either side of the initial values.
    pub spread_decades: f64,
    /// Also fit the noise variances of the observed sides.
    pub train_noise: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { restarts: 5, max_iterations: 500, rel_tolerance: 1e-6, spread_decades: 2.0, train_noise: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingReport {
    pub initial_spec: KernelSpec,
    pub final_spec: KernelSpec,
    /// Noise variances `(σt², σf²)` before and after.
    pub initial_noise: (f64, f64),
    pub final_noise: (f64, f64),
    pub initial_log_likelihood: f64,
    pub final_log_likelihood: f64,
    /// Best log-likelihood so far, per iteration of the winning restart.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub best_restart: usize,
}

/// The fixed parts of the likelihood, built once per training run.
struct Objective<'a> {
    grid: &'a TimeGrid,
    obs: &'a ObservationSet,
    init: KernelSpec,
    train_noise: bool,
    /// Observed times, used when there are no spectral observations.
    t_obs: Option<TimeGrid>,
    hw: Option<DMatrix<f64>>,
    residual: DVector<f64>,
}

impl<'a> Objective<'a> {
    fn new(
        grid: &'a TimeGrid,
        mean: &PriorMean,
        init: KernelSpec,
        obs: &'a ObservationSet,
        train_noise: bool,
    ) -> Result<Self> {
        let n = grid.len();
        let op = FourierOperator::new(n)?;
        obs.check_dims(&op)?;
        let (t_obs, hw, m_obs) = if obs.spectral.selection.is_empty() {
            let idx = obs.temporal.selection.indices();
            let pts: Vec<f64> = idx.iter().map(|&i| grid.points()[i]).collect();
            let t = TimeGrid::new(pts).ok();
            (t, None, obs.temporal.selection.gather(mean.values()))
        } else {
            let hw = observation_matrix(&op, obs);
            let m_obs = &hw * mean.values();
            (None, Some(hw), m_obs)
        };
        let residual = obs.stacked_values() - m_obs;
        Ok(Self { grid, obs, init, train_noise, t_obs, hw, residual })
    }

    fn n_params(&self) -> usize {
        self.init.n_params() + if self.train_noise { self.noise_slots().len() } else { 0 }
    }

    /// Which noise variances are free: temporal, spectral.
    fn noise_slots(&self) -> Vec<bool> {
        vec![!self.obs.temporal.selection.is_empty(), !self.obs.spectral.selection.is_empty()]
            .into_iter()
            .filter(|&b| b)
            .collect()
    }

    fn start(&self) -> Vec<f64> {
        let mut p = self.init.log_params();
        if self.train_noise {
            if !self.obs.temporal.selection.is_empty() {
                p.push(self.obs.temporal.noise_variance.ln());
            }
            if !self.obs.spectral.selection.is_empty() {
                p.push(self.obs.spectral.noise_variance.ln());
            }
        }
        p
    }

    fn unpack(&self, p: &[f64]) -> (KernelSpec, f64, f64) {
        let k = self.init.n_params();
        let spec = self.init.with_log_params(&p[..k]);
        let (mut s2t, mut s2f) = (self.obs.temporal.noise_variance, self.obs.spectral.noise_variance);
        if self.train_noise {
            let mut rest = p[k..].iter();
            if !self.obs.temporal.selection.is_empty() {
                s2t = rest.next().map_or(s2t, |v| v.exp());
            }
            if !self.obs.spectral.selection.is_empty() {
                s2f = rest.next().map_or(s2f, |v| v.exp());
            }
        }
        (spec, s2t, s2f)
    }

    fn log_likelihood(&self, p: &[f64]) -> Result<f64> {
        let (spec, s2t, s2f) = self.unpack(p);
        if !(s2t.is_finite() && s2f.is_finite()) {
            return Err(invalid!("noise variance overflow"));
        }
        let mt = self.obs.temporal.selection.len();
        let mut sigma_obs = match (&self.t_obs, &self.hw) {
            (Some(t), _) => build_covariance(t, &spec)?,
            (None, Some(hw)) => {
                let sigma = build_covariance(self.grid, &spec)?;
                hw * sigma * hw.transpose()
            }
            // A single temporal observation: its own variance.
            (None, None) => DMatrix::from_element(1, 1, spec.sigma2),
        };
        for i in 0..sigma_obs.nrows() {
            sigma_obs[(i, i)] += if i < mt { s2t } else { s2f };
        }
        symmetrize(&mut sigma_obs);
        let factor = jittered_cholesky(&sigma_obs, 0.0)?;
        gaussian_log_density(&factor, &self.residual)
    }

    fn cost(&self, p: &[f64]) -> f64 {
        self.log_likelihood(p).map_or(f64::INFINITY, |ll| -ll)
    }
}

/// Fits the kernel hyperparameters of a zero- or fixed-mean model to `obs`.
///
/// The prior mean is held fixed. Noise variances on observed sides must be
/// positive, since a noiseless likelihood is unbounded in the hyperparameters.
pub fn train(
    grid: &TimeGrid,
    mean: &PriorMean,
    init: &KernelSpec,
    obs: &ObservationSet,
    cfg: &TrainConfig,
) -> Result<TrainingReport> {
    init.validate()?;
    if init.sigma2 <= 0.0 {
        return Err(invalid!("initial sigma2 must be positive for log-space search"));
    }
    if mean.len() != grid.len() {
        return Err(invalid!("prior mean has length {}, grid has {}", mean.len(), grid.len()));
    }
    if obs.total_len() < 2 {
        return Err(invalid!("training needs at least 2 observations, got {}", obs.total_len()));
    }
    if !obs.temporal.selection.is_empty() && obs.temporal.noise_variance <= 0.0 {
        return Err(invalid!("maximum likelihood needs a positive temporal noise variance"));
    }
    if !obs.spectral.selection.is_empty() && obs.spectral.noise_variance <= 0.0 {
        return Err(invalid!("maximum likelihood needs a positive spectral noise variance"));
    }
    if cfg.restarts == 0 {
        return Err(invalid!("training needs at least one restart"));
    }
    if !(cfg.spread_decades.is_finite() && cfg.spread_decades >= 0.0) {
        return Err(invalid!("restart spread must be finite and >= 0"));
    }

    let objective = Objective::new(grid, mean, *init, obs, cfg.train_noise)?;
    let x0 = objective.start();
    let initial_log_likelihood = objective.log_likelihood(&x0).unwrap_or(f64::NEG_INFINITY);
    let nm =
        NelderMeadConfig { max_iterations: cfg.max_iterations, rel_tolerance: cfg.rel_tolerance, initial_step: 0.5 };
    let half_width = cfg.spread_decades * std::f64::consts::LN_10;

    let runs: Vec<_> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut start = x0.clone();
            if r > 0 && half_width > 0.0 {
                let mut g = rng::stream(cfg.seed, r as u64);
                for v in start.iter_mut() {
                    *v += g.random_range(-half_width..=half_width);
                }
            }
            debug_assert_eq!(start.len(), objective.n_params());
            nelder_mead(|p| objective.cost(p), &start, &nm)
        })
        .collect();

    let (best_restart, best) = runs
        .iter()
        .enumerate()
        .filter(|(_, m)| m.value.is_finite())
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Training(format!("none of {} restarts reached a finite likelihood", cfg.restarts)))?;

    let (final_spec, s2t, s2f) = objective.unpack(&best.x);
    Ok(TrainingReport {
        initial_spec: *init,
        final_spec,
        initial_noise: (obs.temporal.noise_variance, obs.spectral.noise_variance),
        final_noise: (s2t, s2f),
        initial_log_likelihood,
        final_log_likelihood: -best.value,
        trace: best.trace.iter().map(|v| -v).collect(),
        iterations: best.iterations,
        converged: best.converged,
        best_restart,
    })
}

pub mod metrics;
pub mod periodicity;
pub mod reconstruct;
pub mod reconstruct2d;
pub mod sample;
pub mod train;

use brfp::observation::{corrupt, fraction_to_count, random_indices};
use brfp::{FourierOperator, FourierPairSample, JointGaussianModel, ObservationSet, TimeGrid, TrainingReport};

use crate::config::{ExperimentConfig, ObservationConfig};
use crate::csvio::{fmt_f64, Table};
use crate::error::{CliError, Result};

/// Physical frequency of each DFT bin, or NaN on an uneven grid.
pub(crate) fn bin_frequencies(op: &FourierOperator, grid: &TimeGrid) -> Vec<f64> {
    let dt = grid.spacing();
    (0..op.len()).map(|k| dt.map_or(f64::NAN, |dt| op.frequency(k, dt))).collect()
}

fn indices_for(n: usize, explicit: &Option<Vec<usize>>, fraction: Option<f64>, seed: u64, stream: u64) -> Vec<usize> {
    match (explicit, fraction) {
        (Some(idx), _) => {
            let mut idx = idx.clone();
            idx.sort_unstable();
            idx
        }
        (None, Some(f)) if f > 0.0 => random_indices(n, fraction_to_count(n, f), seed, stream),
        _ => Vec::new(),
    }
}

/// Observed time and frequency indices as configured.
pub(crate) fn observation_indices(o: &ObservationConfig, n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let t = indices_for(n, &o.temporal_indices, o.temporal_fraction, seed, 1);
    let f = indices_for(n, &o.spectral_indices, o.spectral_fraction, seed, 2);
    for (name, idx) in [("temporal_indices", &t), ("spectral_indices", &f)] {
        if idx.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Validation(format!("observations: {name} has duplicates")));
        }
        if let Some(&last) = idx.last() {
            if last >= n {
                return Err(CliError::Validation(format!(
                    "observations: {name} entry {last} out of range for N = {n}"
                )));
            }
        }
    }
    Ok((t, f))
}

/// A prior draw and the configured noisy observations of it.
pub(crate) fn synthetic_data(
    cfg: &ExperimentConfig,
    model: &JointGaussianModel,
) -> Result<(FourierPairSample, ObservationSet)> {
    let truth = model.sample_pair(cfg.seed)?;
    let (t, f) = observation_indices(&cfg.observations, model.len(), cfg.seed)?;
    let o = &cfg.observations;
    let obs = corrupt(&truth, &t, &f, o.sigma2_t, o.sigma2_f, cfg.seed)?;
    Ok((truth, obs))
}

pub(crate) fn training_csv(r: &TrainingReport) -> String {
    let mut t = Table::new(&["key", "value"]);
    let beta = |b: Option<f64>| b.map_or(String::new(), fmt_f64);
    let family = serde_family(r.final_spec.family);
    t.row(["family".to_string(), family]);
    for (key, value) in [
        ("initial_sigma2", fmt_f64(r.initial_spec.sigma2)),
        ("initial_alpha", fmt_f64(r.initial_spec.alpha)),
        ("initial_beta", beta(r.initial_spec.beta)),
        ("initial_sigma2_t", fmt_f64(r.initial_noise.0)),
        ("initial_sigma2_f", fmt_f64(r.initial_noise.1)),
        ("initial_log_likelihood", fmt_f64(r.initial_log_likelihood)),
        ("final_sigma2", fmt_f64(r.final_spec.sigma2)),
        ("final_alpha", fmt_f64(r.final_spec.alpha)),
        ("final_beta", beta(r.final_spec.beta)),
        ("final_sigma2_t", fmt_f64(r.final_noise.0)),
        ("final_sigma2_f", fmt_f64(r.final_noise.1)),
        ("final_log_likelihood", fmt_f64(r.final_log_likelihood)),
        ("iterations", r.iterations.to_string()),
        ("converged", r.converged.to_string()),
        ("best_restart", r.best_restart.to_string()),
    ] {
        t.row([key.to_string(), value]);
    }
    t.finish()
}

pub(crate) fn trace_csv(r: &TrainingReport) -> String {
    let mut t = Table::new(&["iteration", "log_likelihood"]);
    for (i, v) in r.trace.iter().enumerate() {
        t.row([i.to_string(), fmt_f64(*v)]);
    }
    t.finish()
}

fn serde_family(f: brfp::KernelFamily) -> String {
    match f {
        brfp::KernelFamily::SquaredExponential => "squared_exponential".into(),
        brfp::KernelFamily::Periodic => "periodic".into(),
    }
}

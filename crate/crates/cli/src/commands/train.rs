use brfp::{train, JointGaussianModel, PriorMean};

use super::{synthetic_data, trace_csv, training_csv};
use crate::config::ExperimentConfig;
use crate::csvio::{observations_csv, read_observations};
use crate::error::Result;
use crate::{Output, TrainArgs};

/// Fits `[kernel]`, used as the starting point, to an observation file or to
/// data drawn from that same kernel.
pub fn run(cfg: &ExperimentConfig, args: &TrainArgs) -> Result<Vec<Output>> {
    let grid = cfg.grid.build()?;
    let n = grid.len();
    let mut out = Vec::new();
    let obs = match &args.observations {
        Some(path) => read_observations(path, n, n)?,
        None => {
            let model = JointGaussianModel::from_kernel(&grid, &cfg.kernel)?;
            let (_, obs) = synthetic_data(cfg, &model)?;
            out.push(("observations.csv".to_string(), observations_csv(&obs)));
            obs
        }
    };
    let report = train(&grid, &PriorMean::zeros(n), &cfg.kernel, &obs, &cfg.training)?;
    out.push(("training.csv".to_string(), training_csv(&report)));
    out.push(("training_trace.csv".to_string(), trace_csv(&report)));
    Ok(out)
}

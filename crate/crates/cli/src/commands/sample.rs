use brfp::JointGaussianModel;

use super::{bin_frequencies, synthetic_data};
use crate::config::ExperimentConfig;
use crate::csvio::{fmt_f64, observations_csv, Table};
use crate::error::Result;
use crate::Output;

/// `signal.csv`, `spectrum.csv` and, when any entries are observed,
/// `observations.csv`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Output>> {
    let grid = cfg.grid.build()?;
    let model = JointGaussianModel::from_kernel(&grid, &cfg.kernel)?;
    let (truth, obs) = synthetic_data(cfg, &model)?;

    let mut signal = Table::new(&["index", "time", "value"]);
    for (i, (t, v)) in grid.points().iter().zip(truth.x.iter()).enumerate() {
        signal.row([i.to_string(), fmt_f64(*t), fmt_f64(*v)]);
    }
    let op = model.operator();
    let freqs = bin_frequencies(op, &grid);
    let power = truth.spectrum.power();
    let mut spectrum = Table::new(&["index", "freq_index", "frequency", "real", "imag", "power"]);
    for k in 0..op.len() {
        spectrum.row([
            k.to_string(),
            op.frequency_index(k).to_string(),
            fmt_f64(freqs[k]),
            fmt_f64(truth.spectrum.real[k]),
            fmt_f64(truth.spectrum.imag[k]),
            fmt_f64(power[k]),
        ]);
    }
    let mut out = vec![("signal.csv".to_string(), signal.finish()), ("spectrum.csv".to_string(), spectrum.finish())];
    if !obs.is_empty() {
        out.push(("observations.csv".to_string(), observations_csv(&obs)));
    }
    Ok(out)
}

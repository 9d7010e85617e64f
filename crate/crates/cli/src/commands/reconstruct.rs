use brfp::metrics::nmse;
use brfp::{posterior, Block, JointGaussianModel};
use nalgebra::DVector;

use crate::config::ExperimentConfig;
use crate::csvio::{metrics_csv, posterior_csv, read_observations, Records};
use crate::error::{CliError, Result};
use crate::{Output, ReconstructArgs};

pub fn run(cfg: &ExperimentConfig, args: &ReconstructArgs) -> Result<Vec<Output>> {
    let grid = cfg.grid.build()?;
    let n = grid.len();
    let obs = read_observations(&args.observations, n, n)?;
    let truth = args.truth.as_deref().map(|p| read_column(p, "value", n)).transpose()?;
    let truth_spectrum = args
        .truth_spectrum
        .as_deref()
        .map(|p| -> Result<DVector<f64>> {
            let re = read_column(p, "real", n)?;
            let im = read_column(p, "imag", n)?;
            Ok(DVector::from_iterator(2 * n, re.iter().chain(im.iter()).cloned()))
        })
        .transpose()?;

    let model = JointGaussianModel::from_kernel(&grid, &cfg.kernel)?;
    let post = posterior(&model, &obs, &Block::ALL)?;
    let mut out = vec![
        ("posterior_time.csv".to_string(), posterior_csv(&post, &[Block::Time])),
        ("posterior_spectrum.csv".to_string(), posterior_csv(&post, &Block::SPECTRAL)),
    ];
    let mut rows = Vec::new();
    if let Some(x) = truth {
        rows.push(("nmse_time".to_string(), nmse(&x, &post.block_mean(Block::Time).expect("time block"))?));
    }
    if let Some(s) = truth_spectrum {
        let re = post.block_mean(Block::Real).expect("real block");
        let im = post.block_mean(Block::Imag).expect("imag block");
        let est = DVector::from_iterator(2 * n, re.iter().chain(im.iter()).cloned());
        rows.push(("nmse_spectrum".to_string(), nmse(&s, &est)?));
    }
    if !rows.is_empty() {
        out.push(("metrics.csv".to_string(), metrics_csv(&rows)));
    }
    Ok(out)
}

/// A numeric column that must have exactly `n` rows.
pub(crate) fn read_column(path: &std::path::Path, column: &str, n: usize) -> Result<DVector<f64>> {
    let v = Records::read(path)?.floats(column)?;
    if v.len() != n {
        return Err(CliError::Validation(format!("{}: expected {n} rows, found {}", path.display(), v.len())));
    }
    Ok(v)
}

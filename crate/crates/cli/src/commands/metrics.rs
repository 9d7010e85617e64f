use brfp::metrics::{kl_divergence, l01, nmse};

use crate::csvio::{metrics_csv, Records};
use crate::error::{CliError, Result};
use crate::{MetricsArgs, Output};

/// Compares one column of two files. `l01` and `kl` read the column as a
/// power spectral density.
pub fn run(args: &MetricsArgs) -> Result<Vec<Output>> {
    for m in &args.metrics {
        if !matches!(m.as_str(), "nmse" | "l01" | "kl") {
            return Err(CliError::Validation(format!("unknown metric `{m}`; expected nmse, l01 or kl")));
        }
    }
    let truth = Records::read(&args.truth)?.floats(&args.column)?;
    let estimate = Records::read(&args.estimate)?.floats(&args.column)?;
    if truth.len() != estimate.len() {
        return Err(CliError::Validation(format!(
            "truth has {} rows but estimate has {}",
            truth.len(),
            estimate.len()
        )));
    }
    let names: Vec<String> = if args.metrics.is_empty() {
        let psd = truth.iter().chain(estimate.iter()).all(|v| *v >= 0.0);
        let all: &[&str] = if psd { &["nmse", "l01", "kl"] } else { &["nmse", "l01"] };
        all.iter().map(|s| s.to_string()).collect()
    } else {
        args.metrics.clone()
    };
    let rows = names
        .iter()
        .map(|m| {
            let v = match m.as_str() {
                "nmse" => nmse(&truth, &estimate)?,
                "l01" => l01(&truth, &estimate)?,
                _ => kl_divergence(&truth, &estimate)?,
            };
            Ok((m.clone(), v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![("metrics.csv".to_string(), metrics_csv(&rows))])
}

use brfp::experiments::{run_periodicity, PeriodicityConfig, PeriodicityOutcome};
use brfp::fourier::signed_frequency;
use rayon::prelude::*;

use super::{trace_csv, training_csv};
use crate::config::ExperimentConfig;
use crate::csvio::{fmt_f64, observations_csv, Table};
use crate::error::{CliError, Result};
use crate::{Output, PeriodicityArgs};

pub fn run(cfg: &ExperimentConfig, args: &PeriodicityArgs) -> Result<Vec<Output>> {
    if args.realizations == 0 {
        return Err(CliError::Validation("--realizations must be >= 1".into()));
    }
    let base = cfg.periodicity;
    let runs = (0..args.realizations)
        .into_par_iter()
        .map(|i| {
            let seed = base.seed.wrapping_add(i);
            run_periodicity(&PeriodicityConfig { seed, ..base }).map(|o| (seed, o))
        })
        .collect::<brfp::Result<Vec<_>>>()?;
    let main = &runs[0].1;

    let n = main.grid.len();
    let mut dft = Table::new(&["index", "freq_index", "frequency", "mean", "lower", "upper"]);
    let p = &main.dft_power;
    for k in 0..n {
        let signed = signed_frequency(n, k);
        dft.row([
            k.to_string(),
            signed.to_string(),
            fmt_f64(signed as f64 / base.duration),
            fmt_f64(p.mean[k]),
            fmt_f64(p.lower[k]),
            fmt_f64(p.upper[k]),
        ]);
    }

    let mut grid = Table::new(&["frequency", "brfp_mean", "brfp_lower", "brfp_upper", "lomb_scargle"]);
    let c = &main.comparison_power;
    for (j, f) in main.comparison_frequencies.iter().enumerate() {
        grid.row([f, &c.mean[j], &c.lower[j], &c.upper[j], &main.lomb_scargle[j]].map(|v| fmt_f64(*v)));
    }

    let mut peaks = Table::new(&["target", "index", "frequency", "power", "is_local_max"]);
    for pk in &main.peaks {
        peaks.row([
            fmt_f64(pk.target),
            pk.bin.to_string(),
            fmt_f64(pk.frequency),
            fmt_f64(pk.power),
            pk.is_local_max.to_string(),
        ]);
    }

    let mut out = vec![
        ("periodicity_dft.csv".to_string(), dft.finish()),
        ("periodicity_grid.csv".to_string(), grid.finish()),
        ("peaks.csv".to_string(), peaks.finish()),
        ("summary.csv".to_string(), summary_csv(main)),
        ("observations.csv".to_string(), observations_csv(&main.observations)),
        ("training.csv".to_string(), training_csv(&main.training)),
        ("training_trace.csv".to_string(), trace_csv(&main.training)),
    ];
    if runs.len() > 1 {
        let mut t = Table::new(&[
            "seed",
            "all_peaks_found",
            "peak_to_median",
            "lomb_scargle_peak",
            "final_sigma2",
            "final_alpha",
        ]);
        for (seed, o) in &runs {
            t.row([
                seed.to_string(),
                o.all_peaks_found().to_string(),
                fmt_f64(o.peak_to_median),
                fmt_f64(o.lomb_scargle_peak),
                fmt_f64(o.training.final_spec.sigma2),
                fmt_f64(o.training.final_spec.alpha),
            ]);
        }
        out.push(("realizations.csv".to_string(), t.finish()));
    }
    Ok(out)
}

fn summary_csv(o: &PeriodicityOutcome) -> String {
    let mut t = Table::new(&["key", "value"]);
    t.row(["all_peaks_found".to_string(), o.all_peaks_found().to_string()]);
    t.row(["peak_to_median".to_string(), fmt_f64(o.peak_to_median)]);
    t.row(["lomb_scargle_peak".to_string(), fmt_f64(o.lomb_scargle_peak)]);
    t.finish()
}

use brfp::experiments::{image_model, radial_mask, reconstruct_image, synthetic_image};
use brfp::fourier::MAX_IMAGE_SIDE;
use brfp::metrics::nmse;
use brfp::observation::corrupt;
use brfp::{Block, FourierPairSample, SpectralOperator};
use nalgebra::{DMatrix, DVector};

use crate::config::ExperimentConfig;
use crate::csvio::{grid_csv, metrics_csv, observations_csv, posterior_csv, read_grid, read_observations};
use crate::error::{CliError, Result};
use crate::{Output, Reconstruct2dArgs};

/// Pixel and frequency grids are vectorised column by column, so cell
/// `(r, c)` is entry `r + side * c`.
pub fn run(cfg: &ExperimentConfig, args: &Reconstruct2dArgs) -> Result<Vec<Output>> {
    let image = &cfg.image;
    let mask_grid = args.mask.as_deref().map(read_grid).transpose()?;
    let side = mask_grid.as_ref().map_or(image.side, |m| m.nrows());
    if side > MAX_IMAGE_SIDE {
        return Err(CliError::Validation(format!(
            "image side {side} exceeds the dense-solve limit of {MAX_IMAGE_SIDE}"
        )));
    }
    let mask = mask_grid.as_ref().map(mask_indices).transpose()?;
    let total = side * side;

    let model = image_model(side, &image.kernel)?;
    let (truth, obs) = match &args.spectrum {
        Some(path) => {
            let obs = read_observations(path, total, total)?;
            if !obs.temporal.selection.is_empty() {
                return Err(CliError::Validation(format!("{}: only `freq` rows are allowed", path.display())));
            }
            if let Some(m) = &mask {
                if m.as_slice() != obs.spectral.selection.indices() {
                    return Err(CliError::Validation("mask and spectrum file observe different frequencies".into()));
                }
            }
            (None, obs)
        }
        None => {
            let img = synthetic_image(side, &image.kernel, image.seed)?;
            let x = DVector::from_column_slice(img.as_slice());
            let pair = FourierPairSample { spectrum: model.operator().forward(&x)?, x };
            let mask = match mask {
                Some(m) => m,
                None => radial_mask(model.operator(), image.coverage, image.seed)?,
            };
            let obs = corrupt(&pair, &[], &mask, 0.0, image.noise_variance, image.seed)?;
            (Some(img), obs)
        }
    };

    let sp = &obs.spectral;
    let post = reconstruct_image(&model, sp.selection.indices(), sp.real.clone(), sp.imag.clone(), sp.noise_variance)?;
    let fold = |v: DVector<f64>| DMatrix::from_column_slice(side, side, v.as_slice());
    let mean = fold(post.block_mean(Block::Time).expect("time block"));
    let std = fold(post.block_std(Block::Time).expect("time block"));
    let mut observed = DMatrix::zeros(side, side);
    for &k in sp.selection.indices() {
        observed[(k % side, k / side)] = 1.0;
    }

    let mut out = vec![
        ("image_mean.csv".to_string(), grid_csv(&mean)),
        ("image_std.csv".to_string(), grid_csv(&std)),
        ("posterior_spectrum.csv".to_string(), posterior_csv(&post, &Block::SPECTRAL)),
        ("mask.csv".to_string(), grid_csv(&observed)),
    ];
    if let Some(img) = truth {
        let x = DVector::from_column_slice(img.as_slice());
        let m = DVector::from_column_slice(mean.as_slice());
        out.push(("truth.csv".to_string(), grid_csv(&img)));
        out.push(("observations.csv".to_string(), observations_csv(&obs)));
        out.push(("metrics.csv".to_string(), metrics_csv(&[("nmse".to_string(), nmse(&x, &m)?)])));
    }
    Ok(out)
}

fn mask_indices(grid: &DMatrix<f64>) -> Result<Vec<usize>> {
    let side = grid.nrows();
    let mut idx = Vec::new();
    for c in 0..side {
        for r in 0..side {
            match grid[(r, c)] {
                1.0 => idx.push(r + side * c),
                0.0 => {}
                v => return Err(CliError::Validation(format!("mask cell ({r}, {c}) is {v}, expected 0 or 1"))),
            }
        }
    }
    Ok(idx)
}

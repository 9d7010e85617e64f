//! Synthetic studies shared by the command-line front end and the tests.
//!
//! - [`run_periodicity`]: recover the two frequencies of a sum of sinusoids
//!   from 52 noisy, irregularly placed samples, against Lomb-Scargle.
//! - [`run_image_reconstruction`]: rebuild a smooth image from a partial,
//!   centre-weighted set of its 2D Fourier coefficients.
//! - [`JointSetup`]: partial noisy observations in both domains of a prior
//!   sample, the basic reconstruction experiment.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::baseline::{lomb_scargle, IrregularSamples};
use crate::error::{invalid, Result};
use crate::fourier::{DtftOperator, FourierOperator, FourierOperator2D, SpectralOperator};
use crate::inference::{posterior, Block, PosteriorResult};
use crate::kernels::{build_covariance, jittered_cholesky, KernelSpec, PriorMean, TimeGrid};
use crate::metrics::nmse;
use crate::model::{power_spectrum_samples, FourierPairSample, JointGaussianModel, PowerSamples};
use crate::observation::{
    corrupt, fraction_to_count, random_indices, ObservationSet, SelectionMatrix, SpectralObservations,
    TemporalObservations,
};
use crate::rng;
use crate::training::{train, TrainConfig, TrainingReport};

/// `10 cos(2π·0.5·t) − 5 sin(2π·t)`.
pub fn sum_of_sines(t: f64) -> f64 {
    10.0 * (2.0 * PI * 0.5 * t).cos() - 5.0 * (2.0 * PI * t).sin()
}

/// The frequencies present in [`sum_of_sines`].
pub const SUM_OF_SINES_FREQUENCIES: [f64; 2] = [0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodicityConfig {
    /// Latent grid size; the grid is `t_n = n · duration / grid_len`.
    pub grid_len: usize,
    pub duration: f64,
    pub observations: usize,
    pub noise_variance: f64,
    /// Smallest noise variance handed to the likelihood. Noiseless data
    /// would make the likelihood unbounded.
    pub model_noise_floor: f64,
    /// Evaluation grid of `comparison_len` points on `[0, comparison_max]`.
    pub comparison_len: usize,
    pub comparison_max: f64,
    pub power_samples: usize,
    /// Starting kernel `alpha`; `sigma2` starts at the sample variance.
    pub initial_alpha: f64,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for PeriodicityConfig {
    fn default() -> Self {
        Self {
            grid_len: 512,
            duration: 10.0,
            observations: 52,
            noise_variance: 0.25,
            model_noise_floor: 1e-6,
            comparison_len: 256,
            comparison_max: 4.0 / PI,
            power_samples: 1000,
            initial_alpha: 1.0,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

/// Whether the mean power has a strict local maximum at the DFT bin
/// nearest a target frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakCheck {
    pub target: f64,
    pub bin: usize,
    pub frequency: f64,
    pub power: f64,
    pub is_local_max: bool,
}

#[derive(Debug, Clone)]
pub struct PeriodicityOutcome {
    pub grid: TimeGrid,
    pub observed: Vec<usize>,
    pub observations: ObservationSet,
    pub training: TrainingReport,
    /// DFT bin frequencies `k / duration` for `k = 0..grid_len`.
    pub dft_frequencies: Vec<f64>,
    pub dft_power: PowerSamples,
    pub comparison_frequencies: Vec<f64>,
    pub comparison_power: PowerSamples,
    /// Lomb-Scargle power on the comparison grid; `NaN` at frequency 0.
    pub lomb_scargle: Vec<f64>,
    pub peaks: Vec<PeakCheck>,
    /// Comparison-grid frequency of the largest Lomb-Scargle power.
    pub lomb_scargle_peak: f64,
    /// Largest over median mean power across the positive DFT bins below Nyquist.
    pub peak_to_median: f64,
}

impl PeriodicityOutcome {
    pub fn all_peaks_found(&self) -> bool {
        self.peaks.iter().all(|p| p.is_local_max)
    }
}

pub fn linspace(n: usize, start: f64, end: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n).map(|i| start + (end - start) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn run_periodicity(cfg: &PeriodicityConfig) -> Result<PeriodicityOutcome> {
    if cfg.observations < 4 || cfg.observations > cfg.grid_len {
        return Err(invalid!("need 4..={} observations, got {}", cfg.grid_len, cfg.observations));
    }
    if !(cfg.duration.is_finite() && cfg.duration > 0.0) {
        return Err(invalid!("duration must be positive"));
    }
    if cfg.comparison_len < 2 || cfg.comparison_max.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(invalid!("comparison grid needs >= 2 points and a positive upper end"));
    }
    if !(cfg.noise_variance.is_finite() && cfg.noise_variance >= 0.0) {
        return Err(invalid!("noise variance must be finite and >= 0"));
    }
    let n = cfg.grid_len;
    let dt = cfg.duration / n as f64;
    let grid = TimeGrid::regular(n, 0.0, dt)?;
    let op = FourierOperator::new(n)?;
    let x = DVector::from_iterator(n, grid.points().iter().map(|&t| sum_of_sines(t)));
    let truth = FourierPairSample { spectrum: op.forward(&x)?, x };

    let observed = random_indices(n, cfg.observations, cfg.seed, 1);
    let mut obs = corrupt(&truth, &observed, &[], cfg.noise_variance, 0.0, cfg.seed)?;
    obs.temporal.noise_variance = cfg.noise_variance.max(cfg.model_noise_floor);

    let y = &obs.temporal.values;
    let mean_y = y.mean();
    let var_y = y.iter().map(|v| (v - mean_y).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
    let init = KernelSpec::squared_exponential(var_y.max(f64::MIN_POSITIVE), cfg.initial_alpha);
    let zero = PriorMean::zeros(n);
    let training = train(&grid, &zero, &init, &obs, &TrainConfig { seed: cfg.seed, ..cfg.train })?;

    let model = JointGaussianModel::from_kernel(&grid, &training.final_spec)?;
    let post = posterior(&model, &obs, &[Block::Time])?;
    let signal = post.time_gaussian().expect("time block requested");
    let dft_power = power_spectrum_samples(&signal, &op, cfg.power_samples, cfg.seed)?;
    let comparison_frequencies = linspace(cfg.comparison_len, 0.0, cfg.comparison_max);
    let dtft = DtftOperator::new(&grid, &comparison_frequencies)?;
    let comparison_power = power_spectrum_samples(&signal, &dtft, cfg.power_samples, cfg.seed)?;

    let samples = IrregularSamples::new(
        observed.iter().map(|&i| grid.points()[i]).collect(),
        obs.temporal.values.iter().cloned().collect(),
    )?;
    let positive: Vec<f64> = comparison_frequencies.iter().cloned().filter(|&f| f > 0.0).collect();
    let ls = lomb_scargle(&samples, &positive)?;
    let mut ls_iter = ls.iter();
    let lomb: Vec<f64> =
        comparison_frequencies.iter().map(|&f| if f > 0.0 { *ls_iter.next().unwrap() } else { f64::NAN }).collect();
    let lomb_scargle_peak = positive[ls.argmax().0];

    let dft_frequencies: Vec<f64> = (0..n).map(|k| k as f64 / cfg.duration).collect();
    let p = &dft_power.mean;
    let half = n / 2;
    let peaks = SUM_OF_SINES_FREQUENCIES
        .iter()
        .map(|&f| {
            let bin = ((f * cfg.duration).round() as usize).clamp(1, half - 1);
            PeakCheck {
                target: f,
                bin,
                frequency: dft_frequencies[bin],
                power: p[bin],
                is_local_max: p[bin] > p[bin - 1] && p[bin] > p[bin + 1],
            }
        })
        .collect();
    let mut band: Vec<f64> = p.rows(1, half - 1).iter().cloned().collect();
    let top = band.iter().cloned().fold(0.0, f64::max);
    band.sort_by(f64::total_cmp);
    let median = crate::model::percentile_sorted(&band, 0.5);

    Ok(PeriodicityOutcome {
        grid,
        observed,
        observations: obs,
        training,
        dft_frequencies,
        dft_power,
        comparison_frequencies,
        comparison_power,
        lomb_scargle: lomb,
        peaks,
        lomb_scargle_peak,
        peak_to_median: top / median,
    })
}

/// Prior over `side x side` images with the separable covariance `K ⊗ K`.
pub fn image_model(side: usize, spec: &KernelSpec) -> Result<JointGaussianModel<FourierOperator2D>> {
    let op = FourierOperator2D::new(side)?;
    let k = build_covariance(&TimeGrid::index(side)?, spec)?;
    JointGaussianModel::new(PriorMean::zeros(side * side), k.kronecker(&k), op)
}

/// An image drawn from the separable prior as `L Z Lᵀ` with `L Lᵀ = K`.
pub fn synthetic_image(side: usize, spec: &KernelSpec, seed: u64) -> Result<DMatrix<f64>> {
    let k = build_covariance(&TimeGrid::index(side)?, spec)?;
    let l = jittered_cholesky(&k, 0.0)?;
    let mut g = rng::stream(seed, 0);
    let z = DMatrix::from_vec(side, side, rng::standard_normals(&mut g, side * side));
    Ok(l.l() * z * l.l().transpose())
}

/// A centre-weighted sampling pattern of 2D frequencies.
///
/// Each coefficient gets the score `|(u, v)| + U(0, 2)` from its signed
/// frequency pair, and the `floor(coverage · side²)` lowest scores are kept,
/// mimicking the dense-core, sparse-edge coverage of interferometric
/// baselines. Returns sorted vectorised indices.
pub fn radial_mask(op: &FourierOperator2D, coverage: f64, seed: u64) -> Result<Vec<usize>> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(invalid!("coverage must be in (0, 1], got {coverage}"));
    }
    let total = op.spectrum_len();
    let mut g = rng::stream(seed, 3);
    let mut scored: Vec<(f64, usize)> = (0..total)
        .map(|k| {
            let (u, v) = op.frequency_index(k);
            ((u as f64).hypot(v as f64) + g.random_range(0.0..2.0), k)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut keep: Vec<usize> = scored[..fraction_to_count(total, coverage)].iter().map(|s| s.1).collect();
    keep.sort_unstable();
    Ok(keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageConfig {
    pub side: usize,
    pub kernel: KernelSpec,
    pub coverage: f64,
    pub noise_variance: f64,
    pub seed: u64,
}

impl Default for ImageConfig {
    fn default() -> Self {
        Self {
            side: 16,
            kernel: KernelSpec::squared_exponential(1.0, 0.2),
            coverage: 0.54,
            noise_variance: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageOutcome {
    pub truth: DMatrix<f64>,
    pub mask: Vec<usize>,
    pub posterior: PosteriorResult,
    pub nmse: f64,
}

impl ImageOutcome {
    pub fn side(&self) -> usize {
        self.truth.nrows()
    }

    /// A block of the posterior folded back into a `side x side` matrix.
    pub fn block_image(&self, block: Block, std: bool) -> DMatrix<f64> {
        let v = if std { self.posterior.block_std(block) } else { self.posterior.block_mean(block) };
        let side = self.side();
        DMatrix::from_column_slice(side, side, v.expect("all blocks requested").as_slice())
    }
}

/// Posterior over image and spectrum given observed 2D Fourier coefficients.
pub fn reconstruct_image(
    model: &JointGaussianModel<FourierOperator2D>,
    mask: &[usize],
    real: DVector<f64>,
    imag: DVector<f64>,
    noise_variance: f64,
) -> Result<PosteriorResult> {
    if mask.is_empty() {
        return Err(invalid!("no spectral observations in the mask"));
    }
    let n = model.len();
    let spectral = SpectralObservations::new(SelectionMatrix::new(n, mask.to_vec())?, real, imag, noise_variance)?;
    posterior(model, &ObservationSet::spectral_only(spectral, n), &Block::ALL)
}

pub fn run_image_reconstruction(cfg: &ImageConfig) -> Result<ImageOutcome> {
    let model = image_model(cfg.side, &cfg.kernel)?;
    let truth = synthetic_image(cfg.side, &cfg.kernel, cfg.seed)?;
    let x = DVector::from_column_slice(truth.as_slice());
    let pair = FourierPairSample { spectrum: model.operator().forward(&x)?, x };
    let mask = radial_mask(model.operator(), cfg.coverage, cfg.seed)?;
    let obs = corrupt(&pair, &[], &mask, 0.0, cfg.noise_variance, cfg.seed)?;
    let posterior = reconstruct_image(&model, &mask, obs.spectral.real, obs.spectral.imag, cfg.noise_variance)?;
    let nmse = nmse(&pair.x, &posterior.block_mean(Block::Time).expect("time block"))?;
    Ok(ImageOutcome { truth, mask, posterior, nmse })
}

/// A prior sample with random partial noisy observations in both domains.
#[derive(Debug, Clone)]
pub struct JointSetup {
    pub model: JointGaussianModel,
    pub truth: FourierPairSample,
    pub observations: ObservationSet,
}

impl JointSetup {
    /// Observes `floor(fraction · N)` (at least one) entries of each domain.
    ///
    /// Seed streams: 0 for the observation noise, 1 and 2 for the temporal and
    /// spectral indices; the prior draw uses stream 0 of `seed + 1`.
    pub fn generate(
        grid: &TimeGrid,
        spec: &KernelSpec,
        temporal_fraction: f64,
        spectral_fraction: f64,
        sigma2_t: f64,
        sigma2_f: f64,
        seed: u64,
    ) -> Result<Self> {
        let model = JointGaussianModel::from_kernel(grid, spec)?;
        let n = grid.len();
        let truth = model.sample_pair(seed.wrapping_add(1))?;
        let count = |f: f64| if f > 0.0 { fraction_to_count(n, f) } else { 0 };
        let t = random_indices(n, count(temporal_fraction), seed, 1);
        let f = random_indices(n, count(spectral_fraction), seed, 2);
        let observations = corrupt(&truth, &t, &f, sigma2_t, sigma2_f, seed)?;
        Ok(Self { model, truth, observations })
    }

    pub fn temporal(&self) -> &TemporalObservations {
        &self.observations.temporal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_sines_values() {
        assert_eq!(sum_of_sines(0.0), 10.0);
        assert!((sum_of_sines(0.25) - (10.0 * (PI / 4.0).cos() - 5.0)).abs() < 1e-12);
    }

    #[test]
    fn radial_mask_shape() {
        let op = FourierOperator2D::new(16).unwrap();
        let mask = radial_mask(&op, 0.54, 3).unwrap();
        assert_eq!(mask.len(), 138);
        assert!(mask.windows(2).all(|w| w[0] < w[1]));
        assert!(mask.contains(&0), "DC is always kept");
        assert_eq!(mask, radial_mask(&op, 0.54, 3).unwrap());
        assert!(radial_mask(&op, 0.0, 3).is_err());
        // the highest frequency pair is never kept at this coverage
        assert!(!mask.contains(&(8 + 16 * 8)));
    }

    #[test]
    fn image_model_is_separable() {
        let spec = KernelSpec::squared_exponential(2.0, 0.3);
        let m = image_model(4, &spec).unwrap();
        let k = build_covariance(&TimeGrid::index(4).unwrap(), &spec).unwrap();
        // pixel (r, c) sits at r + 4c
        let (r1, c1, r2, c2) = (1usize, 2usize, 3usize, 0usize);
        let got = m.sigma()[(r1 + 4 * c1, r2 + 4 * c2)];
        assert!((got - k[(r1, r2)] * k[(c1, c2)]).abs() < 1e-15);
        assert!(image_model(65, &spec).is_err());
    }

    #[test]
    fn full_spectrum_recovers_image() {
        let cfg = ImageConfig { coverage: 1.0, ..Default::default() };
        let out = run_image_reconstruction(&cfg).unwrap();
        let err = (out.block_image(Block::Time, false) - &out.truth).amax();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn joint_setup_counts() {
        let grid = TimeGrid::index(512).unwrap();
        let s =
            JointSetup::generate(&grid, &KernelSpec::squared_exponential(1.0, 0.001), 0.02, 0.02, 0.2, 0.2, 1).unwrap();
        assert_eq!(s.observations.temporal.selection.len(), 10);
        assert_eq!(s.observations.spectral.selection.len(), 10);
        let none =
            JointSetup::generate(&grid, &KernelSpec::squared_exponential(1.0, 0.001), 0.02, 0.0, 0.2, 0.2, 1).unwrap();
        assert!(none.observations.spectral.selection.is_empty());
    }

    #[test]
    fn linspace_endpoints() {
        let f = linspace(256, 0.0, 4.0 / PI);
        assert_eq!(f.len(), 256);
        assert_eq!(f[0], 0.0);
        assert!((f[255] - 4.0 / PI).abs() < 1e-15);
    }
}

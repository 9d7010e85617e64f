//! Which entries of the signal and spectrum are observed, and with what noise.
//!
//! Observations follow `y = Htᵀ x + ε`, `Yr = Hfᵀ Xr + εr`, `Yi = Hfᵀ Xi + εi`
//! with independent white noise. Stacked, `Y = H̄ᵀ W̄ᵀ x + ε` with the
//! diagonal noise covariance `Λ = diag(σt² I, σf² I, σf² I)`.
//!
//! Selection matrices are stored as index lists and applied by gathering.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::fourier::SpectralOperator;
use crate::model::{FourierPairSample, JointGaussianModel};
use crate::rng;

/// A 0/1 selection matrix `H` (`N x M`), stored as the observed indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMatrix {
    n: usize,
    indices: Vec<usize>,
}

impl SelectionMatrix {
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(invalid!("index {bad} out of range for length {n}"));
        }
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid!("observed indices must be sorted and unique"));
        }
        Ok(Self { n, indices })
    }

    pub fn full(n: usize) -> Self {
        Self { n, indices: (0..n).collect() }
    }

    pub fn empty(n: usize) -> Self {
        Self { n, indices: Vec::new() }
    }

    /// Latent dimension `N`.
    pub fn latent_len(&self) -> usize {
        self.n
    }

    /// Number of observations `M`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `Hᵀ v`.
    pub fn gather(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.indices.iter().map(|&i| v[i]))
    }

    /// Dense `N x M` matrix with `H[p, q] = 1` iff `p = indices[q]`.
    pub fn dense(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.len());
        for (q, &p) in self.indices.iter().enumerate() {
            h[(p, q)] = 1.0;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalObservations {
    pub selection: SelectionMatrix,
    pub values: DVector<f64>,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralObservations {
    pub selection: SelectionMatrix,
    pub real: DVector<f64>,
    pub imag: DVector<f64>,
    pub noise_variance: f64,
}

/// Temporal and spectral observations; either side may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub temporal: TemporalObservations,
    pub spectral: SpectralObservations,
}

impl TemporalObservations {
    pub fn new(selection: SelectionMatrix, values: DVector<f64>, noise_variance: f64) -> Result<Self> {
        if values.len() != selection.len() {
            return Err(invalid!("{} temporal values for {} indices", values.len(), selection.len()));
        }
        check_noise(noise_variance)?;
        Ok(Self { selection, values, noise_variance })
    }

    pub fn none(n: usize) -> Self {
        Self { selection: SelectionMatrix::empty(n), values: DVector::zeros(0), noise_variance: 0.0 }
    }
}

impl SpectralObservations {
    pub fn new(
        selection: SelectionMatrix,
        real: DVector<f64>,
        imag: DVector<f64>,
        noise_variance: f64,
    ) -> Result<Self> {
        if real.len() != selection.len() || imag.len() != selection.len() {
            return Err(invalid!(
                "spectral values ({}, {}) do not match {} indices",
                real.len(),
                imag.len(),
                selection.len()
            ));
        }
        check_noise(noise_variance)?;
        Ok(Self { selection, real, imag, noise_variance })
    }

    pub fn none(k: usize) -> Self {
        Self {
            selection: SelectionMatrix::empty(k),
            real: DVector::zeros(0),
            imag: DVector::zeros(0),
            noise_variance: 0.0,
        }
    }
}

fn check_noise(v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid!("noise variance must be finite and >= 0, got {v}"))
    }
}

impl ObservationSet {
    pub fn new(temporal: TemporalObservations, spectral: SpectralObservations) -> Self {
        Self { temporal, spectral }
    }

    /// Observations of the signal only; `k` is the spectrum length.
    pub fn temporal_only(temporal: TemporalObservations, k: usize) -> Self {
        Self { temporal, spectral: SpectralObservations::none(k) }
    }

    /// Observations of the spectrum only; `n` is the signal length.
    pub fn spectral_only(spectral: SpectralObservations, n: usize) -> Self {
        Self { temporal: TemporalObservations::none(n), spectral }
    }

    /// Length of the augmented observation, `Mt + 2 Mf`.
    pub fn total_len(&self) -> usize {
        self.temporal.selection.len() + 2 * self.spectral.selection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total_len() == 0
    }

    /// Stacked `[y; Yr; Yi]`.
    pub fn stacked_values(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.total_len());
        v.extend(self.temporal.values.iter());
        v.extend(self.spectral.real.iter());
        v.extend(self.spectral.imag.iter());
        DVector::from_vec(v)
    }

    /// Diagonal of `Λ`.
    pub fn noise_diagonal(&self) -> DVector<f64> {
        let (mt, mf) = (self.temporal.selection.len(), self.spectral.selection.len());
        let mut v = Vec::with_capacity(mt + 2 * mf);
        v.extend(std::iter::repeat_n(self.temporal.noise_variance, mt));
        v.extend(std::iter::repeat_n(self.spectral.noise_variance, 2 * mf));
        DVector::from_vec(v)
    }

    pub fn check_dims<O: SpectralOperator>(&self, op: &O) -> Result<()> {
        if self.temporal.selection.latent_len() != op.signal_len() {
            return Err(invalid!(
                "temporal selection has latent length {}, signal has {}",
                self.temporal.selection.latent_len(),
                op.signal_len()
            ));
        }
        if self.spectral.selection.latent_len() != op.spectrum_len() {
            return Err(invalid!(
                "spectral selection has latent length {}, spectrum has {}",
                self.spectral.selection.latent_len(),
                op.spectrum_len()
            ));
        }
        Ok(())
    }

    /// Noiseless `H̄ᵀ W̄ᵀ x`, computed by transforming and gathering.
    pub fn apply<O: SpectralOperator>(&self, op: &O, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dims(op)?;
        let s = op.forward(x)?;
        let mut v = Vec::with_capacity(self.total_len());
        v.extend(self.temporal.selection.gather(x).iter());
        v.extend(self.spectral.selection.gather(&s.real).iter());
        v.extend(self.spectral.selection.gather(&s.imag).iter());
        Ok(DVector::from_vec(v))
    }
}

/// The augmented linear-Gaussian observation system.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    /// `H̄ᵀ W̄ᵀ`: rows ordered temporal, spectral-real, spectral-imaginary.
    pub hw: DMatrix<f64>,
    /// Diagonal of `Λ`.
    pub noise: DVector<f64>,
    /// Stacked `[y; Yr; Yi]`.
    pub y: DVector<f64>,
}

impl AugmentedSystem {
    pub fn rows(&self) -> usize {
        self.hw.nrows()
    }

    /// Dense `Λ`.
    pub fn lambda(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.noise)
    }
}

pub fn assemble<O: SpectralOperator>(model: &JointGaussianModel<O>, obs: &ObservationSet) -> Result<AugmentedSystem> {
    let op = model.operator();
    obs.check_dims(op)?;
    Ok(AugmentedSystem { hw: observation_matrix(op, obs), noise: obs.noise_diagonal(), y: obs.stacked_values() })
}

/// `H̄ᵀ W̄ᵀ` built row by row from the selected indices.
pub(crate) fn observation_matrix<O: SpectralOperator>(op: &O, obs: &ObservationSet) -> DMatrix<f64> {
    let n = op.signal_len();
    let t = obs.temporal.selection.indices();
    let f = obs.spectral.selection.indices();
    let mut hw = DMatrix::zeros(t.len() + 2 * f.len(), n);
    for (row, &i) in t.iter().enumerate() {
        hw[(row, i)] = 1.0;
    }
    let off = t.len();
    for (q, &k) in f.iter().enumerate() {
        hw.row_mut(off + q).tr_copy_from(&op.real().column(k));
        hw.row_mut(off + f.len() + q).tr_copy_from(&op.imag().column(k));
    }
    hw
}

/// `floor(fraction * n)`, at least 1.
pub fn fraction_to_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).floor() as usize).clamp(1, n.max(1))
}

/// Uniformly chosen distinct indices, sorted.
pub fn random_indices(n: usize, count: usize, seed: u64, stream: u64) -> Vec<usize> {
    rng::sample_indices(&mut rng::stream(seed, stream), n, count)
}

/// Noisy observations of a known Fourier pair.
///
/// Noise for `y`, `Yr` and `Yi` is drawn in that order from stream 0 of `seed`.
pub fn corrupt(
    truth: &FourierPairSample,
    temporal_indices: &[usize],
    spectral_indices: &[usize],
    sigma2_t: f64,
    sigma2_f: f64,
    seed: u64,
) -> Result<ObservationSet> {
    check_noise(sigma2_t)?;
    check_noise(sigma2_f)?;
    let ht = SelectionMatrix::new(truth.x.len(), temporal_indices.to_vec())?;
    let hf = SelectionMatrix::new(truth.spectrum.len(), spectral_indices.to_vec())?;
    let mut rng = rng::stream(seed, 0);
    let mut noisy = |clean: DVector<f64>, var: f64| {
        let z = rng::standard_normals(&mut rng, clean.len());
        clean + DVector::from_vec(z) * var.sqrt()
    };
    let y = noisy(ht.gather(&truth.x), sigma2_t);
    let yr = noisy(hf.gather(&truth.spectrum.real), sigma2_f);
    let yi = noisy(hf.gather(&truth.spectrum.imag), sigma2_f);
    Ok(ObservationSet::new(
        TemporalObservations::new(ht, y, sigma2_t)?,
        SpectralObservations::new(hf, yr, yi, sigma2_f)?,
    ))
}

//! The joint Gaussian prior over a signal and its spectrum.
//!
//! With `x ~ N(m, Σ)` and `W̄ = [I, Wr, Wi]`, the stacked vector
//! `[x, Xr, Xi] = W̄ᵀ x` is Gaussian with mean `W̄ᵀ m` and covariance
//! `W̄ᵀ Σ W̄`. That covariance has the rank of `Σ`, so joint samples are
//! always drawn hierarchically: `x` from its marginal, then the spectrum as
//! the deterministic transform of `x`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::fourier::{FourierOperator, SpectralOperator, SpectrumPair};
use crate::kernels::{build_covariance, jittered_cholesky, symmetrize, KernelSpec, PriorMean, TimeGrid};
use crate::rng;

/// Power-spectrum Monte Carlo default sample count.
pub const DEFAULT_POWER_SAMPLES: usize = 1000;

#[derive(Debug, Clone)]
pub struct JointGaussianModel<O = FourierOperator> {
    mean: PriorMean,
    sigma: DMatrix<f64>,
    op: O,
}

impl JointGaussianModel<FourierOperator> {
    /// Zero-mean model with covariance from `spec` on `grid`.
    pub fn from_kernel(grid: &TimeGrid, spec: &KernelSpec) -> Result<Self> {
        let sigma = build_covariance(grid, spec)?;
        Self::new(PriorMean::zeros(grid.len()), sigma, FourierOperator::new(grid.len())?)
    }
}

impl<O: SpectralOperator> JointGaussianModel<O> {
    pub fn new(mean: PriorMean, sigma: DMatrix<f64>, op: O) -> Result<Self> {
        let n = op.signal_len();
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(invalid!("covariance is {}x{}, operator acts on length {n}", sigma.nrows(), sigma.ncols()));
        }
        if mean.len() != n {
            return Err(invalid!("prior mean has length {}, operator acts on length {n}", mean.len()));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("covariance contains non-finite entries"));
        }
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > 1e-12 * sigma.amax().max(1.0) {
            return Err(invalid!("covariance is not symmetric (max asymmetry {asym:.3e})"));
        }
        Ok(Self { mean, sigma, op })
    }

    pub fn with_mean(mut self, mean: PriorMean) -> Result<Self> {
        if mean.len() != self.len() {
            return Err(invalid!("prior mean has length {}, model has {}", mean.len(), self.len()));
        }
        self.mean = mean;
        Ok(self)
    }

    /// Signal length `N`.
    pub fn len(&self) -> usize {
        self.op.signal_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spectrum_len(&self) -> usize {
        self.op.spectrum_len()
    }

    pub fn mean(&self) -> &PriorMean {
        &self.mean
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn operator(&self) -> &O {
        &self.op
    }

    /// `W̄ = [I_N, Wr, Wi]`.
    pub fn wbar(&self) -> DMatrix<f64> {
        let (n, k) = (self.len(), self.spectrum_len());
        let mut w = DMatrix::zeros(n, n + 2 * k);
        w.view_mut((0, 0), (n, n)).fill_with_identity();
        w.view_mut((0, n), (n, k)).copy_from(self.op.real());
        w.view_mut((0, n + k), (n, k)).copy_from(self.op.imag());
        w
    }

    /// Mean and covariance of `[x, Xr, Xi]`, blocks in that order.
    pub fn joint_moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let w = self.wbar();
        let m = w.tr_mul(self.mean.values());
        let mut s = w.tr_mul(&(&self.sigma * &w));
        symmetrize(&mut s);
        (m, s)
    }

    pub fn covariance_blocks(&self) -> CovarianceBlocks {
        let ktr = &self.sigma * self.op.real();
        let kti = &self.sigma * self.op.imag();
        let mut kr = self.op.real().tr_mul(&ktr);
        let mut ki = self.op.imag().tr_mul(&kti);
        symmetrize(&mut kr);
        symmetrize(&mut ki);
        CovarianceBlocks { kr, ki, ktr, kti }
    }

    /// Marginal prior of the signal.
    pub fn time_prior(&self) -> Gaussian {
        Gaussian { mean: self.mean.values().clone(), cov: self.sigma.clone() }
    }

    pub fn sampler(&self) -> Result<PairSampler<'_, O>> {
        PairSampler::new(&self.time_prior(), &self.op)
    }

    /// One hierarchical draw, using stream 0 of `seed`.
    pub fn sample_pair(&self, seed: u64) -> Result<FourierPairSample> {
        self.sampler()?.sample(seed, 0)
    }
}

/// The four distinct blocks of the joint covariance.
#[derive(Debug, Clone)]
pub struct CovarianceBlocks {
    /// `Wrᵀ Σ Wr`
    pub kr: DMatrix<f64>,
    /// `Wiᵀ Σ Wi`
    pub ki: DMatrix<f64>,
    /// `Σ Wr`
    pub ktr: DMatrix<f64>,
    /// `Σ Wi`
    pub kti: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierPairSample {
    pub x: DVector<f64>,
    pub spectrum: SpectrumPair,
}

/// A multivariate normal given by its moments.
#[derive(Debug, Clone)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Gaussian {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Moments of `[Xr; Xi]` when `self` is the law of the signal.
    pub fn push_forward<O: SpectralOperator + ?Sized>(&self, op: &O) -> Result<Gaussian> {
        if self.dim() != op.signal_len() {
            return Err(invalid!("Gaussian has dim {}, operator expects {}", self.dim(), op.signal_len()));
        }
        let k = op.spectrum_len();
        let mut w = DMatrix::zeros(self.dim(), 2 * k);
        w.view_mut((0, 0), (self.dim(), k)).copy_from(op.real());
        w.view_mut((0, k), (self.dim(), k)).copy_from(op.imag());
        let mut cov = w.tr_mul(&(&self.cov * &w));
        symmetrize(&mut cov);
        Ok(Gaussian { mean: w.tr_mul(&self.mean), cov })
    }
}

/// Draws Fourier pairs by sampling the signal and transforming it.
///
/// Draw `i` for seed `s` uses stream `i` of the ChaCha8 generator keyed by `s`.
/// The covariance square root is a jittered Cholesky factor. Posterior
/// covariances that are numerically zero in some directions can defeat the
/// jitter ladder; those fall back to an eigendecomposition root with
/// roundoff-negative eigenvalues set to zero.
#[derive(Debug)]
pub struct PairSampler<'a, O> {
    mean: DVector<f64>,
    root: DMatrix<f64>,
    op: &'a O,
}

/// Eigenvalues below `-max(NEGATIVE_EIGEN_RTOL * λ_max, 1e-10)` mean the
/// matrix is not a covariance. The absolute part matches the clip applied to
/// posterior variances.
const NEGATIVE_EIGEN_RTOL: f64 = 1e-6;

/// `R` with `R Rᵀ = A` for a symmetric positive semi-definite `A`.
fn psd_root(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.amax();
    let low = eig.eigenvalues.min();
    if low < -(NEGATIVE_EIGEN_RTOL * top).max(-crate::inference::VARIANCE_CLIP) {
        return Err(Error::Numerical(format!("covariance has eigenvalue {low:.3e} (largest {top:.3e})")));
    }
    let mut root = eig.eigenvectors;
    for (mut col, &l) in root.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= l.max(0.0).sqrt();
    }
    Ok(root)
}

impl<'a, O: SpectralOperator> PairSampler<'a, O> {
    pub fn new(signal: &Gaussian, op: &'a O) -> Result<Self> {
        if signal.dim() != op.signal_len() {
            return Err(invalid!("Gaussian has dim {}, operator expects {}", signal.dim(), op.signal_len()));
        }
        let root = match jittered_cholesky(&signal.cov, 0.0) {
            Ok(f) => f.l().clone(),
            Err(Error::Numerical(_)) => psd_root(&signal.cov)?,
            Err(e) => return Err(e),
        };
        Ok(Self { mean: signal.mean.clone(), root, op })
    }

    /// `R` with `R Rᵀ` equal to the (regularised) signal covariance.
    pub fn root(&self) -> &DMatrix<f64> {
        &self.root
    }

    pub fn sample(&self, seed: u64, index: u64) -> Result<FourierPairSample> {
        let mut rng = rng::stream(seed, index);
        let z = DVector::from_vec(rng::standard_normals(&mut rng, self.mean.len()));
        let x = &self.mean + &self.root * z;
        let spectrum = self.op.forward(&x)?;
        Ok(FourierPairSample { x, spectrum })
    }
}

/// Power-spectrum Monte Carlo draws with pointwise summaries.
#[derive(Debug, Clone)]
pub struct PowerSamples {
    pub samples: Vec<DVector<f64>>,
    pub mean: DVector<f64>,
    /// Pointwise 2.5% empirical percentile.
    pub lower: DVector<f64>,
    /// Pointwise 97.5% empirical percentile.
    pub upper: DVector<f64>,
}

/// Samples `p_k = Xr_k^2 + Xi_k^2` by drawing signals from `signal` and
/// transforming them with `op`.
///
/// Works for the prior ([`JointGaussianModel::time_prior`]) and for a time
/// posterior alike: every spectral law here is the push-forward of a signal law.
pub fn power_spectrum_samples<O: SpectralOperator>(
    signal: &Gaussian,
    op: &O,
    count: usize,
    seed: u64,
) -> Result<PowerSamples> {
    if count == 0 {
        return Err(invalid!("power spectrum needs at least one sample"));
    }
    let sampler = PairSampler::new(signal, op)?;
    // Same draws as `sampler.sample(seed, i)`, batched into matrix products.
    let n = op.signal_len();
    let mut z = DMatrix::zeros(n, count);
    for (i, mut col) in z.column_iter_mut().enumerate() {
        let mut g = rng::stream(seed, i as u64);
        col.copy_from_slice(&rng::standard_normals(&mut g, n));
    }
    let mut x = &sampler.root * z;
    for mut col in x.column_iter_mut() {
        col += &sampler.mean;
    }
    let re = op.real().tr_mul(&x);
    let im = op.imag().tr_mul(&x);
    let samples: Vec<DVector<f64>> =
        (0..count).map(|i| re.column(i).map(|v| v * v) + im.column(i).map(|v| v * v)).collect();
    let k = op.spectrum_len();
    let mut mean = DVector::zeros(k);
    for s in &samples {
        mean += s;
    }
    mean /= count as f64;
    let mut lower = DVector::zeros(k);
    let mut upper = DVector::zeros(k);
    let mut column = vec![0.0; count];
    for j in 0..k {
        for (c, s) in column.iter_mut().zip(&samples) {
            *c = s[j];
        }
        column.sort_by(f64::total_cmp);
        lower[j] = percentile_sorted(&column, 0.025);
        upper[j] = percentile_sorted(&column, 0.975);
    }
    Ok(PowerSamples { samples, mean, lower, upper })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

//! Likelihood of the augmented observations and closed-form posteriors.
//!
//! Every posterior here is Gaussian conditioning of a latent block on the
//! stacked observation `Y` with
//!
//! ```text
//! mean = m_lat + Σ_lat,obs Σ_obs⁻¹ (Y − m_obs)
//! cov  = Σ_lat − Σ_lat,obs Σ_obs⁻¹ Σ_lat,obsᵀ
//! ```
//!
//! where `Σ_obs = HW Σ HWᵀ + Λ`. Noiseless observations make `Σ_obs`
//! singular whenever two observed rows are linearly dependent (a frequency
//! and its mirror, say). Posteriors therefore factor `Σ_obs` by Cholesky
//! without jitter and fall back to a spectral pseudo-inverse that drops
//! directions below `M · ε` of the largest eigenvalue. That keeps the
//! posterior variance at exactly observed entries at roundoff level instead
//! of at the size of a diagonal jitter.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::fourier::SpectralOperator;
use crate::kernels::{jittered_cholesky, symmetrize, CholeskyFactor};
use crate::model::{Gaussian, JointGaussianModel};
use crate::observation::{observation_matrix, ObservationSet, SpectralObservations, TemporalObservations};

/// Negative posterior variances down to this value are roundoff and read as 0.
pub const VARIANCE_CLIP: f64 = -1e-10;

/// One of the three latent blocks `x`, `Xr`, `Xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    Time,
    Real,
    Imag,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::Time, Block::Real, Block::Imag];
    pub const SPECTRAL: [Block; 2] = [Block::Real, Block::Imag];

    pub fn name(self) -> &'static str {
        match self {
            Block::Time => "time",
            Block::Real => "real",
            Block::Imag => "imag",
        }
    }

    fn rows<O: SpectralOperator>(self, op: &O) -> DMatrix<f64> {
        match self {
            Block::Time => DMatrix::identity(op.signal_len(), op.signal_len()),
            Block::Real => op.real().transpose(),
            Block::Imag => op.imag().transpose(),
        }
    }
}

/// `log N(Y; m_obs, Σ_obs)` together with the pieces used to compute it.
#[derive(Debug, Clone)]
pub struct LikelihoodEvaluation {
    pub log_likelihood: f64,
    pub m_obs: DVector<f64>,
    pub sigma_obs: DMatrix<f64>,
    pub factor: CholeskyFactor,
}

/// Log marginal likelihood of `obs` under `model`.
///
/// `Σ_obs` is factored with the jitter ladder, so zero noise variances are
/// tolerated here; training refuses them separately.
pub fn log_likelihood<O: SpectralOperator>(
    model: &JointGaussianModel<O>,
    obs: &ObservationSet,
) -> Result<LikelihoodEvaluation> {
    if obs.is_empty() {
        return Err(invalid!("likelihood of an empty observation set"));
    }
    obs.check_dims(model.operator())?;
    let hw = observation_matrix(model.operator(), obs);
    let m_obs = &hw * model.mean().values();
    let mut sigma_obs = &hw * model.sigma() * hw.transpose();
    for (i, v) in obs.noise_diagonal().iter().enumerate() {
        sigma_obs[(i, i)] += v;
    }
    symmetrize(&mut sigma_obs);
    let factor = jittered_cholesky(&sigma_obs, 0.0)?;
    let log_likelihood = gaussian_log_density(&factor, &(obs.stacked_values() - &m_obs))?;
    Ok(LikelihoodEvaluation { log_likelihood, m_obs, sigma_obs, factor })
}

/// `log N(r; 0, L Lᵀ)`.
pub(crate) fn gaussian_log_density(factor: &CholeskyFactor, r: &DVector<f64>) -> Result<f64> {
    let a = factor.solve_lower_vec(r)?;
    let m = r.len() as f64;
    let ll = -0.5 * (a.norm_squared() + factor.log_det() + m * (2.0 * PI).ln());
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(Error::Numerical("log-likelihood is not finite".into()))
    }
}

/// Posterior moments of the requested latent blocks, stacked in request order.
#[derive(Debug, Clone)]
pub struct PosteriorResult {
    blocks: Vec<Block>,
    sizes: Vec<usize>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub std: DVector<f64>,
}

impl PosteriorResult {
    fn new(blocks: Vec<Block>, sizes: Vec<usize>, mean: DVector<f64>, mut cov: DMatrix<f64>) -> Result<Self> {
        symmetrize(&mut cov);
        let std = marginal_std(&cov)?;
        Ok(Self { blocks, sizes, mean, cov, std })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    fn offset(&self, block: Block) -> Option<(usize, usize)> {
        let pos = self.blocks.iter().position(|&b| b == block)?;
        Some((self.sizes[..pos].iter().sum(), self.sizes[pos]))
    }

    pub fn block_mean(&self, block: Block) -> Option<DVector<f64>> {
        let (o, n) = self.offset(block)?;
        Some(self.mean.rows(o, n).into_owned())
    }

    pub fn block_std(&self, block: Block) -> Option<DVector<f64>> {
        let (o, n) = self.offset(block)?;
        Some(self.std.rows(o, n).into_owned())
    }

    pub fn block_cov(&self, block: Block) -> Option<DMatrix<f64>> {
        let (o, n) = self.offset(block)?;
        Some(self.cov.view((o, o), (n, n)).into_owned())
    }

    /// The time block as a Gaussian, e.g. for power-spectrum sampling.
    pub fn time_gaussian(&self) -> Option<Gaussian> {
        Some(Gaussian { mean: self.block_mean(Block::Time)?, cov: self.block_cov(Block::Time)? })
    }
}

fn marginal_std(cov: &DMatrix<f64>) -> Result<DVector<f64>> {
    let mut std = DVector::zeros(cov.nrows());
    for (i, s) in std.iter_mut().enumerate() {
        let v = cov[(i, i)];
        if v < VARIANCE_CLIP || !v.is_finite() {
            return Err(Error::Numerical(format!("posterior variance {v:.3e} at entry {i}")));
        }
        *s = v.max(0.0).sqrt();
    }
    Ok(std)
}

/// Solver for `Σ_obs`: Cholesky when well posed, pseudo-inverse otherwise.
enum ObsSolver {
    Cholesky(CholeskyFactor),
    Pseudo { vectors: DMatrix<f64>, inv_values: DVector<f64> },
}

/// Cholesky pivots below this fraction of the largest diagonal entry mean
/// `Σ_obs` is numerically singular.
const PIVOT_RTOL: f64 = 1e-12;

impl ObsSolver {
    fn new(sigma_obs: &DMatrix<f64>) -> Result<Self> {
        let scale = sigma_obs.diagonal().amax();
        if let Some(c) = sigma_obs.clone().cholesky() {
            let f = CholeskyFactor::from_lower(c.unpack());
            let min_pivot = f.l().diagonal().iter().fold(f64::INFINITY, |a, &d| a.min(d * d));
            if min_pivot > PIVOT_RTOL * scale {
                return Ok(ObsSolver::Cholesky(f));
            }
        }
        let eig = SymmetricEigen::new(sigma_obs.clone());
        let top = eig.eigenvalues.amax();
        if !top.is_finite() {
            return Err(Error::Numerical("observation covariance has non-finite spectrum".into()));
        }
        let cut = sigma_obs.nrows() as f64 * f64::EPSILON * top;
        let inv_values = eig.eigenvalues.map(|v| if v > cut { 1.0 / v } else { 0.0 });
        Ok(ObsSolver::Pseudo { vectors: eig.eigenvectors, inv_values })
    }

    fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            ObsSolver::Cholesky(f) => f.solve(b),
            ObsSolver::Pseudo { vectors, inv_values } => {
                let mut c = vectors.tr_mul(b);
                for (mut row, &s) in c.row_iter_mut().zip(inv_values.iter()) {
                    row *= s;
                }
                Ok(vectors * c)
            }
        }
    }
}

/// Gaussian conditioning of a latent vector on `Y`.
fn condition(
    m_lat: DVector<f64>,
    sigma_lat: DMatrix<f64>,
    sigma_lat_obs: &DMatrix<f64>,
    sigma_obs: &DMatrix<f64>,
    residual: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let solver = ObsSolver::new(sigma_obs)?;
    let gain_t = solver.solve(&sigma_lat_obs.transpose())?;
    let mean = m_lat + gain_t.tr_mul(residual);
    let cov = sigma_lat - sigma_lat_obs * gain_t;
    Ok((mean, cov))
}

fn check_blocks(blocks: &[Block]) -> Result<()> {
    if blocks.is_empty() {
        return Err(invalid!("no latent blocks requested"));
    }
    for (i, b) in blocks.iter().enumerate() {
        if blocks[..i].contains(b) {
            return Err(invalid!("block {} requested twice", b.name()));
        }
    }
    Ok(())
}

/// Posterior of the requested blocks given any mix of observations.
pub fn posterior<O: SpectralOperator>(
    model: &JointGaussianModel<O>,
    obs: &ObservationSet,
    blocks: &[Block],
) -> Result<PosteriorResult> {
    check_blocks(blocks)?;
    if obs.is_empty() {
        return Err(invalid!("posterior given an empty observation set"));
    }
    let op = model.operator();
    obs.check_dims(op)?;

    let mut a = DMatrix::zeros(0, model.len());
    let mut sizes = Vec::with_capacity(blocks.len());
    for b in blocks {
        let rows = b.rows(op);
        sizes.push(rows.nrows());
        let r0 = a.nrows();
        a = a.resize_vertically(r0 + rows.nrows(), 0.0);
        a.rows_mut(r0, rows.nrows()).copy_from(&rows);
    }
    let hw = observation_matrix(op, obs);
    let m = model.mean().values();
    let sigma = model.sigma();

    let s_hwt = sigma * hw.transpose();
    let mut sigma_obs = &hw * &s_hwt;
    for (i, v) in obs.noise_diagonal().iter().enumerate() {
        sigma_obs[(i, i)] += v;
    }
    symmetrize(&mut sigma_obs);
    let sigma_lat_obs = &a * &s_hwt;
    let sigma_lat = &a * sigma * a.transpose();
    let residual = obs.stacked_values() - &hw * m;
    let (mean, cov) = condition(&a * m, sigma_lat, &sigma_lat_obs, &sigma_obs, &residual)?;
    PosteriorResult::new(blocks.to_vec(), sizes, mean, cov)
}

/// `[Wrᵀ; Wiᵀ]` as a single `2K x N` matrix.
fn spectral_rows<O: SpectralOperator>(op: &O) -> DMatrix<f64> {
    let (n, k) = (op.signal_len(), op.spectrum_len());
    let mut w = DMatrix::zeros(2 * k, n);
    w.rows_mut(0, k).copy_from(&op.real().transpose());
    w.rows_mut(k, k).copy_from(&op.imag().transpose());
    w
}

fn check_temporal<O: SpectralOperator>(model: &JointGaussianModel<O>, t: &TemporalObservations) -> Result<()> {
    if t.selection.is_empty() {
        return Err(invalid!("no temporal observations"));
    }
    if t.selection.latent_len() != model.len() {
        return Err(invalid!(
            "temporal selection has latent length {}, model has {}",
            t.selection.latent_len(),
            model.len()
        ));
    }
    Ok(())
}

/// Spectral posterior given temporal observations, written out directly:
///
/// ```text
/// m_X|y = [Wrᵀ; Wiᵀ] (m + Σ Ht (HtᵀΣHt + σt² I)⁻¹ (y − Htᵀm))
/// Σ_X|y = [Wrᵀ; Wiᵀ] (Σ − Σ Ht (HtᵀΣHt + σt² I)⁻¹ HtᵀΣ) [Wr, Wi]
/// ```
///
/// The result has blocks `[Real, Imag]`.
pub fn spectral_posterior_given_time<O: SpectralOperator>(
    model: &JointGaussianModel<O>,
    temporal: &TemporalObservations,
) -> Result<PosteriorResult> {
    check_temporal(model, temporal)?;
    let idx = temporal.selection.indices();
    let sigma = model.sigma();
    let m = model.mean().values();
    let s_ht = sigma.select_columns(idx);
    let mut gram = s_ht.select_rows(idx);
    for i in 0..idx.len() {
        gram[(i, i)] += temporal.noise_variance;
    }
    symmetrize(&mut gram);
    let residual = &temporal.values - temporal.selection.gather(m);
    let (mx, cx) = condition(m.clone(), sigma.clone(), &s_ht, &gram, &residual)?;
    let w = spectral_rows(model.operator());
    let k = model.spectrum_len();
    PosteriorResult::new(Block::SPECTRAL.to_vec(), vec![k, k], &w * mx, &w * cx * w.transpose())
}

/// `Σ_X|y` through the information form `(Σ⁻¹ + Ht Htᵀ / σt²)⁻¹`.
///
/// Needs an invertible prior covariance and `σt² > 0`.
pub fn spectral_covariance_woodbury<O: SpectralOperator>(
    model: &JointGaussianModel<O>,
    temporal: &TemporalObservations,
) -> Result<DMatrix<f64>> {
    check_temporal(model, temporal)?;
    let s2 = temporal.noise_variance;
    if s2 <= 0.0 {
        return Err(invalid!("the information form needs a positive noise variance"));
    }
    let prior = model
        .sigma()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("prior covariance is not invertible".into()))?;
    let mut info = prior.inverse();
    for &i in temporal.selection.indices() {
        info[(i, i)] += 1.0 / s2;
    }
    symmetrize(&mut info);
    let post = info
        .cholesky()
        .ok_or_else(|| Error::Numerical("posterior information matrix is not positive definite".into()))?
        .inverse();
    let w = spectral_rows(model.operator());
    let mut cov = &w * post * w.transpose();
    symmetrize(&mut cov);
    Ok(cov)
}

/// Posterior of the signal given spectral observations only.
///
/// The analogue of [`spectral_posterior_given_time`] with the observation
/// operator `Wf = [Wr Hf, Wi Hf]`:
///
/// ```text
/// m_x|Y = m + Σ Wf (Wfᵀ Σ Wf + σf² I)⁻¹ (Y − Wfᵀ m)
/// ```
///
/// The result has the single block `Time`.
pub fn temporal_posterior_given_spectrum<O: SpectralOperator>(
    model: &JointGaussianModel<O>,
    spectral: &SpectralObservations,
) -> Result<PosteriorResult> {
    if spectral.selection.is_empty() {
        return Err(invalid!("no spectral observations"));
    }
    let op = model.operator();
    if spectral.selection.latent_len() != op.spectrum_len() {
        return Err(invalid!(
            "spectral selection has latent length {}, spectrum has {}",
            spectral.selection.latent_len(),
            op.spectrum_len()
        ));
    }
    let idx = spectral.selection.indices();
    let mf = idx.len();
    let mut wf = DMatrix::zeros(model.len(), 2 * mf);
    wf.columns_mut(0, mf).copy_from(&op.real().select_columns(idx));
    wf.columns_mut(mf, mf).copy_from(&op.imag().select_columns(idx));
    let sigma = model.sigma();
    let m = model.mean().values();
    let s_wf = sigma * &wf;
    let mut gram = wf.tr_mul(&s_wf);
    for i in 0..2 * mf {
        gram[(i, i)] += spectral.noise_variance;
    }
    symmetrize(&mut gram);
    let mut y = DVector::zeros(2 * mf);
    y.rows_mut(0, mf).copy_from(&spectral.real);
    y.rows_mut(mf, mf).copy_from(&spectral.imag);
    let residual = y - wf.tr_mul(m);
    let (mean, cov) = condition(m.clone(), sigma.clone(), &s_wf, &gram, &residual)?;
    PosteriorResult::new(vec![Block::Time], vec![model.len()], mean, cov)
}

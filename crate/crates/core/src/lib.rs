//! Joint Gaussian modelling of a discrete-time signal and its DFT spectrum.
//!
//! A multivariate normal prior over the signal `x` is pushed through the
//! (real/imaginary split) Fourier operator, giving a joint Gaussian over
//! `[x, Xr, Xi]`. Partial, noisy observations taken in either domain are then
//! conditioned on in closed form, reconstructing both representations with
//! uncertainty.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: time grids, covariance kernels and jittered Cholesky factors.
//! - [`fourier`]: dense DFT operators (1D, 2D Kronecker, arbitrary-frequency).
//! - [`model`]: the joint prior, its covariance blocks and hierarchical sampling.
//! - [`observation`]: selection matrices and the augmented observation system.
//! - [`inference`]: likelihood and closed-form posteriors.
//! - [`training`]: maximum-likelihood hyperparameter search.
//! - [`metrics`]: NMSE, the ℓ0.1 distance and KL divergence between PSDs.
//! - [`baseline`]: the classical Lomb-Scargle periodogram.
//! - [`experiments`]: synthetic study runners shared by the CLI and tests.
//!
//! ```
//! use brfp::observation::{corrupt, random_indices};
//! use brfp::{posterior, Block, JointGaussianModel, KernelSpec, TimeGrid};
//!
//! let grid = TimeGrid::index(256)?;
//! let model = JointGaussianModel::from_kernel(&grid, &KernelSpec::squared_exponential(1.0, 0.01))?;
//! let truth = model.sample_pair(7)?;
//!
//! // 20 noisy time samples and 10 noisy DFT coefficients
//! let obs = corrupt(&truth, &random_indices(256, 20, 7, 1), &random_indices(256, 10, 7, 2), 0.1, 0.1, 7)?;
//! let post = posterior(&model, &obs, &Block::ALL)?;
//! let std = post.block_std(Block::Real).unwrap();
//! assert!(std.iter().all(|s| s.is_finite()));
//! # Ok::<(), brfp::Error>(())
//! ```

pub mod baseline;
mod error;
pub mod experiments;
pub mod fourier;
pub mod inference;
pub mod kernels;
pub mod metrics;
pub mod model;
pub mod observation;
pub mod optim;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
pub use fourier::{DtftOperator, FourierOperator, FourierOperator2D, SpectralOperator, SpectrumPair};
pub use inference::{
    log_likelihood, posterior, spectral_posterior_given_time, temporal_posterior_given_spectrum, Block,
    LikelihoodEvaluation, PosteriorResult,
};
pub use kernels::{build_covariance, jittered_cholesky, CholeskyFactor, KernelFamily, KernelSpec, PriorMean, TimeGrid};
pub use model::{CovarianceBlocks, FourierPairSample, Gaussian, JointGaussianModel, PowerSamples};
pub use observation::{AugmentedSystem, ObservationSet, SelectionMatrix, SpectralObservations, TemporalObservations};
pub use training::{train, TrainConfig, TrainingReport};

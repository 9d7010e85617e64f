#![allow(dead_code)]

use brfp::observation::{corrupt, random_indices};
use brfp::{JointGaussianModel, KernelSpec, ObservationSet, TimeGrid};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn rel_norm(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn se_model(n: usize, sigma2: f64, alpha: f64) -> JointGaussianModel {
    JointGaussianModel::from_kernel(&TimeGrid::index(n).unwrap(), &KernelSpec::squared_exponential(sigma2, alpha))
        .unwrap()
}

/// A random SE or periodic kernel with moderate conditioning.
pub fn random_kernel(g: &mut brfp::rng::Rng) -> KernelSpec {
    let sigma2 = g.random_range(0.5..2.0);
    if g.random_bool(0.5) {
        KernelSpec::squared_exponential(sigma2, g.random_range(0.05..0.5))
    } else {
        KernelSpec::periodic(sigma2, g.random_range(0.5..2.0), g.random_range(0.2..0.6))
    }
}

/// Random temporal and spectral observation pattern on a prior sample.
pub fn random_observations(
    model: &JointGaussianModel,
    g: &mut brfp::rng::Rng,
    seed: u64,
    allow_spectral: bool,
) -> ObservationSet {
    let n = model.len();
    let truth = model.sample_pair(seed).unwrap();
    let mt = g.random_range(1..=n / 2);
    let mf = if allow_spectral { g.random_range(0..=n / 4) } else { 0 };
    let s2t = 10f64.powf(g.random_range(-2.0..0.0));
    let s2f = 10f64.powf(g.random_range(-2.0..0.0));
    corrupt(&truth, &random_indices(n, mt, seed, 1), &random_indices(n, mf, seed, 2), s2t, s2f, seed).unwrap()
}

/// Posterior moments of `[x; Xr; Xi]` by conditioning the explicitly
/// augmented Gaussian of `[W̄ᵀx; Y]`, with `Y = Hᵀ W̄ᵀ x + ε` built from
/// dense selection matrices.
pub fn brute_force_posterior(model: &JointGaussianModel, obs: &ObservationSet) -> (DVector<f64>, DMatrix<f64>) {
    let n = model.len();
    let wbar = model.wbar();
    let ht = obs.temporal.selection.dense();
    let hf = obs.spectral.selection.dense();
    let (mt, mf) = (ht.ncols(), hf.ncols());
    let m = mt + 2 * mf;
    // H̄ = blockdiag(Ht, Hf, Hf), (3N x M)
    let mut hbar = DMatrix::zeros(3 * n, m);
    hbar.view_mut((0, 0), (n, mt)).copy_from(&ht);
    hbar.view_mut((n, mt), (n, mf)).copy_from(&hf);
    hbar.view_mut((2 * n, mt + mf), (n, mf)).copy_from(&hf);
    let hw = hbar.transpose() * wbar.transpose();
    let mut b = DMatrix::zeros(3 * n + m, n);
    b.rows_mut(0, 3 * n).copy_from(&wbar.transpose());
    b.rows_mut(3 * n, m).copy_from(&hw);
    let mu = &b * model.mean().values();
    let mut cov = &b * model.sigma() * b.transpose();
    let mut lambda = vec![obs.temporal.noise_variance; mt];
    lambda.extend(std::iter::repeat_n(obs.spectral.noise_variance, 2 * mf));
    for (i, l) in lambda.iter().enumerate() {
        cov[(3 * n + i, 3 * n + i)] += l;
    }
    let s_lo = cov.view((0, 3 * n), (3 * n, m)).into_owned();
    let s_oo = cov.view((3 * n, 3 * n), (m, m)).into_owned();
    let s_ll = cov.view((0, 0), (3 * n, 3 * n)).into_owned();
    let inv = s_oo.try_inverse().expect("observation covariance invertible");
    let y = obs.stacked_values();
    let mean = mu.rows(0, 3 * n) + &s_lo * &inv * (y - mu.rows(3 * n, m));
    let post = s_ll - &s_lo * inv * s_lo.transpose();
    (mean, post)
}

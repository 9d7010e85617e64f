//! Time grids, covariance kernels and regularised Cholesky factors.
//!
//! Kernel hyperparameters are expressed in the units of the grid they are
//! evaluated on. An SE kernel with rate `a` on the index grid `0, 1, ..., N-1`
//! is the same kernel as rate `a * (N-1)^2` on `N` evenly spaced points of the
//! unit interval.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Ordered sample times shared by every operator built on top of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid!("time grid needs at least 2 points, got {}", points.len()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(invalid!("time grid contains non-finite values"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid!("time grid must be strictly increasing"));
        }
        Ok(Self { points })
    }

    /// `n` points evenly spaced on the closed interval `[start, end]`.
    pub fn linspace(n: usize, start: f64, end: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid!("time grid needs at least 2 points, got {n}"));
        }
        let step = (end - start) / (n - 1) as f64;
        Self::new((0..n).map(|i| start + step * i as f64).collect())
    }

    /// `n` points `start, start + step, ...` (half-open: `end` is not hit).
    pub fn regular(n: usize, start: f64, step: f64) -> Result<Self> {
        Self::new((0..n).map(|i| start + step * i as f64).collect())
    }

    /// The sample-index grid `0, 1, ..., n-1`.
    pub fn index(n: usize) -> Result<Self> {
        Self::regular(n, 0.0, 1.0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Sampling interval if the grid is evenly spaced (to 1e-9 relative).
    pub fn spacing(&self) -> Option<f64> {
        let step = self.points[1] - self.points[0];
        let even = self.points.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
        even.then_some(step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[serde(alias = "se")]
    SquaredExponential,
    Periodic,
}

/// A stationary covariance function with its hyperparameters.
///
/// - `SquaredExponential`: `sigma2 * exp(-alpha * (t - t')^2)`
/// - `Periodic`: `sigma2 * exp(-alpha * sin^2(beta * |t - t'|))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma2: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl KernelSpec {
    pub fn squared_exponential(sigma2: f64, alpha: f64) -> Self {
        Self { family: KernelFamily::SquaredExponential, sigma2, alpha, beta: None }
    }

    pub fn periodic(sigma2: f64, alpha: f64, beta: f64) -> Self {
        Self { family: KernelFamily::Periodic, sigma2, alpha, beta: Some(beta) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(invalid!("kernel sigma2 must be finite and >= 0, got {}", self.sigma2));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid!("kernel alpha must be finite and > 0, got {}", self.alpha));
        }
        if self.family == KernelFamily::Periodic {
            match self.beta {
                Some(b) if b.is_finite() && b > 0.0 => {}
                other => return Err(invalid!("periodic kernel needs beta > 0, got {other:?}")),
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let d = t - s;
        match self.family {
            KernelFamily::SquaredExponential => self.sigma2 * (-self.alpha * d * d).exp(),
            KernelFamily::Periodic => {
                let beta = self.beta.unwrap_or(1.0);
                let sn = (beta * d.abs()).sin();
                self.sigma2 * (-self.alpha * sn * sn).exp()
            }
        }
    }

    /// Number of free hyperparameters (`sigma2`, `alpha` and, if periodic, `beta`).
    pub fn n_params(&self) -> usize {
        match self.family {
            KernelFamily::SquaredExponential => 2,
            KernelFamily::Periodic => 3,
        }
    }

    /// Hyperparameters in log space, in the order `[sigma2, alpha, beta]`.
    pub fn log_params(&self) -> Vec<f64> {
        let mut p = vec![self.sigma2.ln(), self.alpha.ln()];
        if self.family == KernelFamily::Periodic {
            p.push(self.beta.unwrap_or(1.0).ln());
        }
        p
    }

    pub fn with_log_params(&self, p: &[f64]) -> Self {
        let mut out = *self;
        out.sigma2 = p[0].exp();
        out.alpha = p[1].exp();
        if self.family == KernelFamily::Periodic {
            out.beta = Some(p[2].exp());
        }
        out
    }
}

/// Prior mean `m` of the signal; defaults to zero and is never trained.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMean(DVector<f64>);

impl PriorMean {
    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn new(values: DVector<f64>, n: usize) -> Result<Self> {
        if values.len() != n {
            return Err(invalid!("prior mean has length {}, grid has {n}", values.len()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

/// Dense covariance `Sigma[i, j] = k(t_i, t_j)`.
pub fn build_covariance(grid: &TimeGrid, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let t = grid.points();
    let n = t.len();
    if n == 0 {
        return Err(invalid!("empty time grid"));
    }
    let mut sigma = DMatrix::zeros(n, n);
    for j in 0..n {
        sigma[(j, j)] = spec.sigma2;
        for i in (j + 1)..n {
            let v = spec.eval(t[i], t[j]);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    Ok(sigma)
}

/// Lower-triangular `L` with `L L^T = A + jitter * I`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: DMatrix<f64>,
    jitter: f64,
}

/// Jitter ladder relative to the mean diagonal: 1e-10, 1e-9, ..., 1e-4.
const LADDER_EXPONENTS: std::ops::RangeInclusive<i32> = -10..=-4;

impl CholeskyFactor {
    pub(crate) fn from_lower(l: DMatrix<f64>) -> Self {
        Self { l, jitter: 0.0 }
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Diagonal regularisation that was actually added.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    fn has_zero_pivot(&self) -> bool {
        self.l.diagonal().iter().any(|&d| d == 0.0)
    }

    /// Solves `L Y = B`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if self.has_zero_pivot() {
            return Err(Error::Numerical("solve with a singular factor".into()));
        }
        self.l.solve_lower_triangular(b).ok_or_else(|| Error::Numerical("triangular solve failed".into()))
    }

    pub fn solve_lower_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if self.has_zero_pivot() {
            return Err(Error::Numerical("solve with a singular factor".into()));
        }
        self.l.solve_lower_triangular(b).ok_or_else(|| Error::Numerical("triangular solve failed".into()))
    }

    /// Solves `(L L^T) X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let y = self.solve_lower(b)?;
        self.l.tr_solve_lower_triangular(&y).ok_or_else(|| Error::Numerical("triangular solve failed".into()))
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let y = self.solve_lower_vec(b)?;
        self.l.tr_solve_lower_triangular(&y).ok_or_else(|| Error::Numerical("triangular solve failed".into()))
    }

    /// `log det(L L^T)`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Explicit inverse of `L L^T`.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let mut inv = self.solve(&DMatrix::identity(self.dim(), self.dim()))?;
        symmetrize(&mut inv);
        Ok(inv)
    }
}

/// Cholesky factor of `A + jitter * I`, climbing a jitter ladder on failure.
///
/// The requested `jitter` is tried first. If that fails, jitters of
/// `10^e * s` for `e = -10, ..., -4` are tried in turn, where `s` is the mean
/// diagonal of `A` (the kernel variance for kernel matrices). An identically
/// zero `A + jitter * I` yields the zero factor, which is exact.
pub fn jittered_cholesky(a: &DMatrix<f64>, jitter: f64) -> Result<CholeskyFactor> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(invalid!("Cholesky needs a non-empty square matrix, got {}x{}", a.nrows(), a.ncols()));
    }
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(invalid!("jitter must be finite and >= 0, got {jitter}"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("matrix contains non-finite entries"));
    }
    if jitter == 0.0 && a.iter().all(|&v| v == 0.0) {
        return Ok(CholeskyFactor { l: DMatrix::zeros(n, n), jitter: 0.0 });
    }
    if let Some(l) = try_cholesky(a, jitter) {
        return Ok(CholeskyFactor { l, jitter });
    }
    let scale = a.diagonal().iter().map(|d| d.abs()).sum::<f64>() / n as f64;
    for e in LADDER_EXPONENTS {
        let j = scale * 10f64.powi(e);
        if j <= jitter {
            continue;
        }
        if let Some(l) = try_cholesky(a, j) {
            return Ok(CholeskyFactor { l, jitter: j });
        }
    }
    Err(Error::Numerical(format!("matrix is not positive definite even with jitter {:.3e}", scale * 1e-4)))
}

fn try_cholesky(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let mut m = a.clone();
    if jitter > 0.0 {
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
    }
    m.cholesky().map(|c| c.unpack())
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::new(vec![1.0, 0.0]).is_err());
        let g = TimeGrid::linspace(5, 0.0, 1.0).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.spacing(), Some(0.25));
        assert_eq!(TimeGrid::new(vec![0.0, 1.0, 3.0]).unwrap().spacing(), None);
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::squared_exponential(-1.0, 1.0).validate().is_err());
        assert!(KernelSpec::squared_exponential(1.0, 0.0).validate().is_err());
        assert!(KernelSpec::squared_exponential(0.0, 1.0).validate().is_ok());
        let mut p = KernelSpec::periodic(1.0, 1.0, 1.0);
        assert!(p.validate().is_ok());
        p.beta = None;
        assert!(p.validate().is_err());
    }

    #[test]
    fn se_diagonal_is_sigma2() {
        let g = TimeGrid::index(16).unwrap();
        let s = build_covariance(&g, &KernelSpec::squared_exponential(1.0, 0.3)).unwrap();
        assert!(s.diagonal().iter().all(|&d| d == 1.0));
        let s = build_covariance(&g, &KernelSpec::squared_exponential(2.5, 0.3)).unwrap();
        assert!(s.diagonal().iter().all(|&d| d == 2.5));
    }

    #[test]
    fn periodic_at_full_period_is_sigma2() {
        let k = KernelSpec::periodic(1.0, 2.0, PI);
        // exp(-2 sin^2(pi)) with sin(pi) at rounding level
        assert!((k.eval(0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn se_on_unit_interval_equals_rescaled_index_grid() {
        let n = 512;
        let unit = TimeGrid::linspace(n, 0.0, 1.0).unwrap();
        let idx = TimeGrid::index(n).unwrap();
        let scale = ((n - 1) * (n - 1)) as f64;
        let a = build_covariance(&unit, &KernelSpec::squared_exponential(1.0, 0.001 * scale)).unwrap();
        let b = build_covariance(&idx, &KernelSpec::squared_exponential(1.0, 0.001)).unwrap();
        assert!((a - &b).amax() < 1e-10);
        // banded, stationary structure: decays with |i - j| from 1 on the diagonal
        assert!(b[(0, 0)] == 1.0 && b[(0, 10)] > b[(0, 50)] && b[(0, 50)] > b[(0, 100)]);
        assert!(b[(0, 200)] < 1e-10);
    }

    #[test]
    fn se_on_even_grid_is_toeplitz() {
        let g = TimeGrid::regular(40, -3.0, 0.25).unwrap();
        let s = build_covariance(&g, &KernelSpec::squared_exponential(1.7, 0.8)).unwrap();
        for i in 0..40usize {
            for j in 0..40 {
                let d = i.abs_diff(j);
                assert_eq!(s[(i, j)], s[(d, 0)], "({i},{j})");
            }
        }
    }

    #[test]
    fn cholesky_of_identity() {
        let f = jittered_cholesky(&DMatrix::identity(4, 4), 0.0).unwrap();
        assert_eq!(f.jitter(), 0.0);
        assert_eq!(f.l(), &DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn cholesky_rank_one_with_jitter() {
        let a = DMatrix::from_element(2, 2, 1.0);
        let f = jittered_cholesky(&a, 1e-9).unwrap();
        let target = &a + DMatrix::identity(2, 2) * f.jitter();
        let err = (f.l() * f.l().transpose() - target).amax();
        assert!(err < 1e-8, "{err}");
        assert!(f.jitter() >= 1e-9);
    }

    #[test]
    fn cholesky_of_large_se_matrix() {
        let g = TimeGrid::index(512).unwrap();
        let s = build_covariance(&g, &KernelSpec::squared_exponential(1.0, 0.001)).unwrap();
        let f = jittered_cholesky(&s, 0.0).unwrap();
        assert!(f.jitter() > 0.0, "SE matrix should need regularisation");
        let target = &s + DMatrix::identity(512, 512) * f.jitter();
        let rel = (f.l() * f.l().transpose() - &target).norm() / target.norm();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn cholesky_zero_matrix_is_exact() {
        let f = jittered_cholesky(&DMatrix::zeros(3, 3), 0.0).unwrap();
        assert_eq!(f.l(), &DMatrix::<f64>::zeros(3, 3));
        assert!(f.solve_vec(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(jittered_cholesky(&a, 0.0), Err(Error::Numerical(_))));
        assert!(jittered_cholesky(&DMatrix::zeros(2, 3), 0.0).is_err());
    }

    #[test]
    fn factor_solves_and_log_det() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = jittered_cholesky(&a, 0.0).unwrap();
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = f.solve_vec(&b).unwrap();
        assert!((&a * x - b).amax() < 1e-12);
        assert!((f.log_det() - a.determinant().ln()).abs() < 1e-12);
        assert!((f.inverse().unwrap() * &a - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn log_params_roundtrip() {
        let k = KernelSpec::periodic(0.7, 3.0, 1.3);
        let back = k.with_log_params(&k.log_params());
        assert!((back.sigma2 - 0.7).abs() < 1e-15);
        assert!((back.alpha - 3.0).abs() < 1e-14);
        assert!((back.beta.unwrap() - 1.3).abs() < 1e-15);
        assert_eq!(KernelSpec::squared_exponential(1.0, 1.0).n_params(), 2);
    }

    fn spec_strategy() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            (0.01f64..10.0, 1e-3f64..5.0).prop_map(|(s, a)| KernelSpec::squared_exponential(s, a)),
            (0.01f64..10.0, 0.1f64..5.0, 0.05f64..3.0).prop_map(|(s, a, b)| KernelSpec::periodic(s, a, b)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn covariance_is_symmetric_psd(
            spec in spec_strategy(),
            gaps in proptest::collection::vec(0.05f64..2.0, 2..40),
        ) {
            let mut t = 0.0;
            let pts: Vec<f64> = gaps.iter().map(|g| { t += g; t }).collect();
            let grid = TimeGrid::new(pts).unwrap();
            let s = build_covariance(&grid, &spec).unwrap();
            prop_assert_eq!(&s, &s.transpose());
            let min_eig = SymmetricEigen::new(s).eigenvalues.min();
            prop_assert!(min_eig >= -1e-8 * spec.sigma2, "min eigenvalue {}", min_eig);
        }

        #[test]
        fn periodic_kernel_repeats(
            sigma2 in 0.1f64..5.0, alpha in 0.1f64..5.0, beta in 0.1f64..3.0,
            t in -5.0f64..5.0, s in -5.0f64..5.0, m in 1i32..4,
        ) {
            let k = KernelSpec::periodic(sigma2, alpha, beta);
            let period = PI / beta;
            let base = k.eval(t, s);
            prop_assert!((k.eval(t, s + period * m as f64) - base).abs() < 1e-12);
            prop_assert!((k.eval(t, s + period * 2.0 * m as f64) - base).abs() < 1e-12);
        }
    }
}

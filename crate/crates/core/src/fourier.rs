//! Dense real/imaginary DFT operators.
//!
//! With the symmetric `1/sqrt(N)` normalisation the Fourier matrix is
//! `[W]_{nk} = exp(-2πj nk/N) / sqrt(N)`, split into `Wr = Re W` and
//! `Wi = Im W`. The spectrum of a real signal is the pair `Xr = Wr^T x`,
//! `Xi = Wi^T x`. Columns follow standard DFT ordering; column `k > N/2`
//! stands for the negative frequency `k - N`.
//!
//! Everything is dense: posteriors need the explicit matrices and are O(N^3)
//! anyway, so an FFT would not change the asymptotics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::kernels::TimeGrid;

/// Largest image side accepted by [`FourierOperator2D`]; the vectorised
/// operator is `side^2 x side^2` and posteriors solve systems of that size.
pub const MAX_IMAGE_SIDE: usize = 64;

/// Real and imaginary parts of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPair {
    pub real: DVector<f64>,
    pub imag: DVector<f64>,
}

impl SpectrumPair {
    pub fn zeros(k: usize) -> Self {
        Self { real: DVector::zeros(k), imag: DVector::zeros(k) }
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    /// `Xr_k^2 + Xi_k^2`.
    pub fn power(&self) -> DVector<f64> {
        self.real.zip_map(&self.imag, |r, i| r * r + i * i)
    }
}

/// A real-linear map from a signal of length `signal_len` to a spectrum of
/// length `spectrum_len`, given as the pair of matrices `(R, I)` with
/// `Xr = R^T x` and `Xi = I^T x`.
pub trait SpectralOperator {
    fn real(&self) -> &DMatrix<f64>;
    fn imag(&self) -> &DMatrix<f64>;

    fn signal_len(&self) -> usize {
        self.real().nrows()
    }

    fn spectrum_len(&self) -> usize {
        self.real().ncols()
    }

    /// Index of the negated frequency, when the spectrum has one.
    fn mirror(&self, _k: usize) -> Option<usize> {
        None
    }

    fn forward(&self, x: &DVector<f64>) -> Result<SpectrumPair> {
        if x.len() != self.signal_len() {
            return Err(invalid!("signal has length {}, operator expects {}", x.len(), self.signal_len()));
        }
        Ok(SpectrumPair { real: self.real().tr_mul(x), imag: self.imag().tr_mul(x) })
    }
}

/// Inverse of a square, unitary operator: `x = R Xr + I Xi`.
///
/// For a spectrum that did not come from a real signal this returns the
/// projection onto real signals.
fn unitary_inverse<O: SpectralOperator + ?Sized>(op: &O, spectrum: &SpectrumPair) -> Result<DVector<f64>> {
    let k = op.spectrum_len();
    if spectrum.real.len() != k || spectrum.imag.len() != k {
        return Err(invalid!(
            "spectrum has lengths ({}, {}), operator expects {k}",
            spectrum.real.len(),
            spectrum.imag.len()
        ));
    }
    Ok(op.real() * &spectrum.real + op.imag() * &spectrum.imag)
}

/// One-dimensional DFT of length `N`.
#[derive(Debug, Clone)]
pub struct FourierOperator {
    wr: DMatrix<f64>,
    wi: DMatrix<f64>,
}

impl FourierOperator {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid!("transform length must be >= 2, got {n}"));
        }
        let norm = 1.0 / (n as f64).sqrt();
        let mut wr = DMatrix::zeros(n, n);
        let mut wi = DMatrix::zeros(n, n);
        for k in 0..n {
            for t in 0..n {
                // Reduce nk mod N before scaling so large products keep full precision.
                let phase = 2.0 * PI * ((t * k) % n) as f64 / n as f64;
                wr[(t, k)] = phase.cos() * norm;
                wi[(t, k)] = -phase.sin() * norm;
            }
        }
        Ok(Self { wr, wi })
    }

    pub fn len(&self) -> usize {
        self.wr.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signed frequency for column `k`, in `{-floor(N/2), ..., ceil(N/2) - 1}`.
    pub fn frequency_index(&self, k: usize) -> i64 {
        signed_frequency(self.len(), k)
    }

    /// Physical frequency of column `k` for a grid with sampling interval `dt`.
    pub fn frequency(&self, k: usize, dt: f64) -> f64 {
        self.frequency_index(k) as f64 / (self.len() as f64 * dt)
    }

    pub fn inverse(&self, spectrum: &SpectrumPair) -> Result<DVector<f64>> {
        unitary_inverse(self, spectrum)
    }
}

impl SpectralOperator for FourierOperator {
    fn real(&self) -> &DMatrix<f64> {
        &self.wr
    }

    fn imag(&self) -> &DMatrix<f64> {
        &self.wi
    }

    fn mirror(&self, k: usize) -> Option<usize> {
        Some(mirror_index(self.len(), k))
    }
}

pub fn signed_frequency(n: usize, k: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

pub fn mirror_index(n: usize, k: usize) -> usize {
    (n - k % n) % n
}

/// DFT of a `side x side` image acting on its column-major vectorisation.
///
/// `vec(Wᵀ i W) = (Wᵀ ⊗ Wᵀ) vec(i)`; the real and imaginary parts of the
/// Kronecker operator are `Wrᵀ⊗Wrᵀ - Wiᵀ⊗Wiᵀ` and `Wrᵀ⊗Wiᵀ + Wiᵀ⊗Wrᵀ`.
/// Both are symmetric, so they also serve as the `(R, I)` pair of
/// [`SpectralOperator`]. Pixel `(r, c)` sits at vector index `r + side * c`.
#[derive(Debug, Clone)]
pub struct FourierOperator2D {
    side: usize,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl FourierOperator2D {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(invalid!("image side must be >= 2, got {side}"));
        }
        if side > MAX_IMAGE_SIDE {
            return Err(Error::Resource(format!(
                "image side {side} exceeds the dense bound of {MAX_IMAGE_SIDE} \
                 (operator would be {0}x{0})",
                side.saturating_mul(side)
            )));
        }
        let op = FourierOperator::new(side)?;
        let (wrt, wit) = (op.wr.transpose(), op.wi.transpose());
        let re = wrt.kronecker(&wrt) - wit.kronecker(&wit);
        let im = wrt.kronecker(&wit) + wit.kronecker(&wrt);
        Ok(Self { side, re, im })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Signed `(row, column)` frequencies of vectorised index `k`.
    pub fn frequency_index(&self, k: usize) -> (i64, i64) {
        (signed_frequency(self.side, k % self.side), signed_frequency(self.side, k / self.side))
    }

    pub fn inverse(&self, spectrum: &SpectrumPair) -> Result<DVector<f64>> {
        unitary_inverse(self, spectrum)
    }

    /// Applies the operator to an image given as a matrix.
    pub fn forward_image(&self, image: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if image.nrows() != self.side || image.ncols() != self.side {
            return Err(invalid!("image is {}x{}, operator expects {1}x{1}", image.nrows(), self.side));
        }
        let x = DVector::from_column_slice(image.as_slice());
        let s = self.forward(&x)?;
        Ok((
            DMatrix::from_column_slice(self.side, self.side, s.real.as_slice()),
            DMatrix::from_column_slice(self.side, self.side, s.imag.as_slice()),
        ))
    }
}

impl SpectralOperator for FourierOperator2D {
    fn real(&self) -> &DMatrix<f64> {
        &self.re
    }

    fn imag(&self) -> &DMatrix<f64> {
        &self.im
    }

    fn mirror(&self, k: usize) -> Option<usize> {
        let (r, c) = (k % self.side, k / self.side);
        Some(mirror_index(self.side, r) + self.side * mirror_index(self.side, c))
    }
}

/// Fourier sums of a signal on a (possibly irregular) grid, evaluated at
/// arbitrary frequencies `f` in cycles per time unit:
/// `X(f) = N^{-1/2} Σ_n x_n exp(-2πj f t_n)`.
///
/// On an evenly spaced grid starting at 0 and at the DFT frequencies
/// `k / (N dt)` this coincides with [`FourierOperator`].
#[derive(Debug, Clone)]
pub struct DtftOperator {
    frequencies: Vec<f64>,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl DtftOperator {
    pub fn new(grid: &TimeGrid, frequencies: &[f64]) -> Result<Self> {
        if frequencies.is_empty() || frequencies.iter().any(|f| !f.is_finite()) {
            return Err(invalid!("frequency list must be non-empty and finite"));
        }
        let t = grid.points();
        let norm = 1.0 / (t.len() as f64).sqrt();
        let re = DMatrix::from_fn(t.len(), frequencies.len(), |n, k| (2.0 * PI * frequencies[k] * t[n]).cos() * norm);
        let im = DMatrix::from_fn(t.len(), frequencies.len(), |n, k| -(2.0 * PI * frequencies[k] * t[n]).sin() * norm);
        Ok(Self { frequencies: frequencies.to_vec(), re, im })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }
}

impl SpectralOperator for DtftOperator {
    fn real(&self) -> &DMatrix<f64> {
        &self.re
    }

    fn imag(&self) -> &DMatrix<f64> {
        &self.im
    }
}

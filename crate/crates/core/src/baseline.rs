//! The classical Lomb-Scargle periodogram for unevenly sampled series.
//!
//! For angular frequency `ω = 2πf` the delay `τ` solves
//! `tan(2ωτ) = Σ sin(2ωt) / Σ cos(2ωt)`, which makes the shifted sine and
//! cosine bases orthogonal on the sample times. With `y` mean-subtracted,
//!
//! ```text
//! P(f) = ½ [ (Σ y cos ω(t−τ))² / Σ cos² ω(t−τ) + (Σ y sin ω(t−τ))² / Σ sin² ω(t−τ) ]
//! ```
//!
//! The power is left unnormalised (no division by the sample variance).

use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Time-stamped real samples, at least four, with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct IrregularSamples {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl IrregularSamples {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid!("{} times but {} values", times.len(), values.len()));
        }
        if times.len() < 4 {
            return Err(invalid!("need at least 4 samples, got {}", times.len()));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(invalid!("samples must be finite"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid!("sample times must be strictly increasing"));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Lomb-Scargle power at each of `frequencies` (cycles per time unit, > 0).
pub fn lomb_scargle(samples: &IrregularSamples, frequencies: &[f64]) -> Result<DVector<f64>> {
    if let Some(f) = frequencies.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        return Err(invalid!("frequencies must be positive and finite, got {f}"));
    }
    let mean = samples.values.iter().sum::<f64>() / samples.len() as f64;
    let y: Vec<f64> = samples.values.iter().map(|v| v - mean).collect();
    let t = &samples.times;
    let power: Vec<f64> = frequencies
        .par_iter()
        .map(|&f| {
            let w = 2.0 * PI * f;
            let (s2, c2) = t.iter().fold((0.0, 0.0), |(s, c), &ti| {
                let (si, ci) = (2.0 * w * ti).sin_cos();
                (s + si, c + ci)
            });
            let tau = s2.atan2(c2) / (2.0 * w);
            let (mut yc, mut ys, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
            for (&ti, &yi) in t.iter().zip(&y) {
                let (s, c) = (w * (ti - tau)).sin_cos();
                yc += yi * c;
                ys += yi * s;
                cc += c * c;
                ss += s * s;
            }
            let term = |num: f64, den: f64| if den > 0.0 { num * num / den } else { 0.0 };
            0.5 * (term(yc, cc) + term(ys, ss))
        })
        .collect();
    Ok(DVector::from_vec(power))
}

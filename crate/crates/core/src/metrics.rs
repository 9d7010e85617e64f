//! Error metrics for signals, spectra and power spectral densities.

use nalgebra::DVector;

use crate::error::{invalid, Result};

fn same_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(invalid!("length mismatch: {} vs {}", a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(invalid!("empty input"));
    }
    Ok(())
}

/// Normalised mean square error `Σ(x − x̂)² / Σx²`.
pub fn nmse(truth: &DVector<f64>, estimate: &DVector<f64>) -> Result<f64> {
    same_len(truth, estimate)?;
    let denom = truth.norm_squared();
    if denom == 0.0 {
        return Err(invalid!("NMSE is undefined for an all-zero ground truth"));
    }
    Ok((truth - estimate).norm_squared() / denom)
}

/// `(1/N) (Σ |p_k − p̂_k|^0.1)^10`.
///
/// The `1/N` factor is applied after the tenth power. Averaging inside the
/// bracket instead would give a value `N^9` times smaller.
pub fn l01(p: &DVector<f64>, phat: &DVector<f64>) -> Result<f64> {
    same_len(p, phat)?;
    let s: f64 = p.iter().zip(phat.iter()).map(|(a, b)| (a - b).abs().powf(0.1)).sum();
    Ok(s.powi(10) / p.len() as f64)
}

fn normalise(p: &DVector<f64>, floor: f64, name: &str) -> Result<DVector<f64>> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid!("{name} must be finite and nonnegative"));
    }
    let q = p.map(|v| v.max(floor));
    let total = q.sum();
    if total == 0.0 {
        return Err(invalid!("{name} is identically zero"));
    }
    Ok(q / total)
}

/// `KL(p ‖ p̂) = Σ p_k ln(p_k / p̂_k)` after normalising both to unit sum.
///
/// Terms with `p_k = 0` contribute nothing; a `p_k > 0` facing `p̂_k = 0`
/// makes the divergence `+∞`.
pub fn kl_divergence(p: &DVector<f64>, phat: &DVector<f64>) -> Result<f64> {
    kl_divergence_floored(p, phat, 0.0)
}

/// KL divergence with every entry raised to at least `floor` before
/// normalising. `floor = 0` is [`kl_divergence`].
pub fn kl_divergence_floored(p: &DVector<f64>, phat: &DVector<f64>, floor: f64) -> Result<f64> {
    same_len(p, phat)?;
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(invalid!("floor must be finite and >= 0, got {floor}"));
    }
    let p = normalise(p, floor, "p")?;
    let q = normalise(phat, floor, "p-hat")?;
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(q.iter()) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += a * (a / b).ln();
    }
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn nmse_hand_cases() {
        let x = v(&[1.0, 2.0]);
        assert_eq!(nmse(&x, &x).unwrap(), 0.0);
        assert_eq!(nmse(&x, &v(&[0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(nmse(&x, &v(&[1.0, 0.0])).unwrap(), 0.8);
        assert!(nmse(&v(&[0.0, 0.0]), &x).is_err());
        assert!(nmse(&x, &v(&[1.0])).is_err());
    }

    #[test]
    fn l01_hand_cases() {
        assert_eq!(l01(&v(&[3.0, 1.0]), &v(&[3.0, 1.0])).unwrap(), 0.0);
        assert_eq!(l01(&v(&[1.0]), &v(&[0.0])).unwrap(), 1.0);
        assert_eq!(l01(&v(&[1.0, 1.0]), &v(&[0.0, 0.0])).unwrap(), 512.0);
        assert!(l01(&v(&[1.0, 1.0]), &v(&[0.0])).is_err());
    }

    #[test]
    fn kl_hand_cases() {
        let p = v(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert_eq!(kl_divergence(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), f64::INFINITY);
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        let got = kl_divergence(&p, &v(&[0.25, 0.75])).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.14384).abs() < 1e-5);
        // raw, unnormalised inputs
        assert!((kl_divergence(&v(&[3.0, 3.0]), &v(&[1.0, 3.0])).unwrap() - expected).abs() < 1e-15);
        assert!(kl_divergence(&v(&[0.0, 0.0]), &p).is_err());
        assert!(kl_divergence(&v(&[-1.0, 2.0]), &p).is_err());
    }

    #[test]
    fn kl_floor_makes_disjoint_support_finite() {
        let kl = kl_divergence_floored(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), 1e-12).unwrap();
        assert!(kl.is_finite() && kl > 20.0);
    }

    proptest! {
        #[test]
        fn kl_self_is_zero(p in prop::collection::vec(0.0f64..10.0, 1..40)) {
            prop_assume!(p.iter().any(|&x| x > 0.0));
            let p = DVector::from_vec(p);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        }

        #[test]
        fn kl_is_nonnegative(
            p in prop::collection::vec(0.01f64..10.0, 8),
            q in prop::collection::vec(0.01f64..10.0, 8),
        ) {
            prop_assert!(kl_divergence(&DVector::from_vec(p), &DVector::from_vec(q)).unwrap() >= 0.0);
        }

        #[test]
        fn nmse_scales_quadratically(
            x in prop::collection::vec(-5.0f64..5.0, 2..30),
            seed in 0u64..1000,
            c in -4.0f64..4.0,
        ) {
            prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
            let x = DVector::from_vec(x);
            let e = DVector::from_fn(x.len(), |i, _| ((i as u64 * 7 + seed) % 13) as f64 - 6.0);
            let base = nmse(&x, &(&x + &e)).unwrap();
            let scaled = nmse(&x, &(&x + &e * c)).unwrap();
            prop_assert!((scaled - c * c * base).abs() <= 1e-12 * (1.0 + c * c * base));
        }

        #[test]
        fn l01_zero_iff_equal(
            p in prop::collection::vec(0.0f64..10.0, 1..20),
            k in 0usize..20,
            d in 1e-6f64..1.0,
        ) {
            let p = DVector::from_vec(p);
            prop_assert_eq!(l01(&p, &p).unwrap(), 0.0);
            let mut q = p.clone();
            let k = k % q.len();
            q[k] += d;
            prop_assert!(l01(&p, &q).unwrap() > 0.0);
        }
    }
}

//! Scalar links used by the estimators: ramp, standard normal and logistic.

use libm::erfc;
use std::f64::consts::FRAC_1_SQRT_2;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Piecewise-linear ramp: 0 on (-inf, 0], identity on (0, 1), 1 on [1, inf).
#[inline]
pub fn ramp(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        z
    }
}

/// Derivative of [`ramp`] where it exists; kinks map to 0.
#[inline]
pub fn ramp_slope(z: f64) -> f64 {
    if in_unit_open(z) {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub fn in_unit_open(z: f64) -> bool {
    z > 0.0 && z < 1.0
}

/// CDF of Uniform(-a, a) evaluated at `z`.
pub fn ramp_a(z: f64, a: f64) -> crate::Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(crate::Error::NonPositiveA(a));
    }
    Ok(uniform_cdf(z, a))
}

#[inline]
pub(crate) fn uniform_cdf(z: f64, a: f64) -> f64 {
    if z < -a {
        0.0
    } else if z > a {
        1.0
    } else {
        (z + a) / (2.0 * a)
    }
}

#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF via erfc, accurate in both tails.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail 1 - Phi(z) without cancellation.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Inverse of the standard normal CDF for p in (0, 1).
///
/// Acklam's rational approximation followed by one Halley correction step.
pub fn norm_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley step; the residual uses whichever tail keeps full precision.
    let e = if x < 0.0 {
        norm_cdf(x) - p
    } else {
        (1.0 - p) - norm_sf(x)
    };
    let u = e / norm_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

#[inline]
pub fn logistic_cdf(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logistic_pdf(z: f64) -> f64 {
    let p = logistic_cdf(z);
    p * (1.0 - p)
}

/// log(1 + e^x) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_segments() {
        assert_eq!(ramp(0.5), 0.5);
        assert_eq!(ramp(-1.0), 0.0);
        assert_eq!(ramp(2.0), 1.0);
        assert_eq!(ramp(0.0), 0.0);
        assert_eq!(ramp(1.0), 1.0);
        assert_eq!(ramp_slope(0.0), 0.0);
        assert_eq!(ramp_slope(1.0), 0.0);
        assert_eq!(ramp_slope(0.3), 1.0);
    }

    #[test]
    fn ramp_a_values() {
        for a in [0.1, 0.5, 1.0, 7.0] {
            assert_eq!(ramp_a(0.0, a).unwrap(), 0.5);
            assert_eq!(ramp_a(a, a).unwrap(), 1.0);
            assert_eq!(ramp_a(-a, a).unwrap(), 0.0);
        }
        assert_eq!(ramp_a(0.25, 0.5).unwrap(), 0.75);
        assert!(matches!(
            ramp_a(0.1, 0.0),
            Err(crate::Error::NonPositiveA(_))
        ));
        assert!(matches!(
            ramp_a(0.1, -1.0),
            Err(crate::Error::NonPositiveA(_))
        ));
    }

    #[test]
    fn ramp_a_half_is_shifted_ramp() {
        for i in -20..=20 {
            let z = i as f64 * 0.07;
            assert_eq!(ramp_a(z, 0.5).unwrap(), ramp(z + 0.5));
        }
    }

    #[test]
    fn normal_reference_values() {
        // Reference values from the closed form erf tables.
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-14);
        assert!((norm_cdf(-1.0) - 0.15865525393145705).abs() < 1e-14);
        assert!((norm_sf(8.0) - 6.22096057427178e-16).abs() < 1e-28);
        assert!((norm_pdf(0.0) - INV_SQRT_2PI).abs() < 1e-16);
        for p in [1e-10, 0.001, 0.2, 0.5, 0.9, 0.999999] {
            assert!((norm_cdf(norm_quantile(p)) - p).abs() < 1e-14 * p.max(1e-2));
        }
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic_cdf(0.0), 0.5);
        assert!(logistic_cdf(-800.0) >= 0.0);
        assert_eq!(logistic_cdf(800.0), 1.0);
        assert!((logistic_cdf(2.0) + logistic_cdf(-2.0) - 1.0).abs() < 1e-15);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-12);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
    }
}

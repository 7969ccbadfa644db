use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{ensure_finite, Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF without input validation. Infinite arguments map to
/// 0 or 1; NaN propagates.
#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(x)` for finite `x`.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(phi(x))
}

/// `Φ⁻¹(p)` for `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    ensure_finite("p", p)?;
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "(0, 1)",
        });
    }
    Ok(phi_inv(p))
}

// Acklam's rational approximation (relative error ~1e-9) followed by one
// Halley step against the erfc-based CDF.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

/// Unchecked quantile; returns ±∞ at the endpoints.
pub(crate) fn phi_inv(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const P_LOW: f64 = 0.024_25;
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
    // Work in the smaller tail so the residual keeps its precision.
    let e = if p > 0.5 {
        (1.0 - p) - phi(-x)
    } else {
        phi(x) - p
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert!((std_normal_cdf(1.959964).unwrap() - 0.975).abs() < 1e-7);
        assert!((std_normal_cdf(-1.281552).unwrap() - 0.10).abs() < 1e-7);
        // Φ(-1.96) to 15 digits
        assert!((phi(-1.96) - 0.024_997_895_148_220_4).abs() < 1e-15);
        assert!((phi(-8.0) - 6.220_960_574_271_78e-16).abs() < 1e-25);
    }

    #[test]
    fn cdf_rejects_non_finite() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((std_normal_quantile(0.9).unwrap() - 1.281_551_565_544_601).abs() < 1e-12);
        assert!((std_normal_quantile(1e-10).unwrap() + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn quantile_rejects_endpoints() {
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        // Past x ~ 5 the spacing of doubles near 1 dominates: Φ(x) cannot be
        // represented closer than f64::EPSILON / 2, which moves the quantile by
        // EPSILON / φ(x).
        let mut x = -6.0;
        while x <= 6.0 {
            let back = std_normal_quantile(phi(x)).unwrap();
            let tol = f64::max(1e-9, 2.0 * f64::EPSILON / std_normal_pdf(x));
            assert!((back - x).abs() < tol, "x = {x}, back = {back}");
            x += 0.01;
        }
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            assert!((phi(phi_inv(p)) - p).abs() < 1e-10);
        }
    }

    #[test]
    fn cdf_is_monotone() {
        let mut prev = 0.0;
        for i in -4000..=4000 {
            let v = phi(i as f64 * 0.002);
            assert!(v >= prev);
            prev = v;
        }
    }
}

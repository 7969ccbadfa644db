//! Bivariate normal CDF by the Drezner–Wesolowsky/Genz method: Gauss–Legendre
//! quadrature of the Plackett identity for moderate `|ρ|`, and an expansion
//! of the complementary integral for `|ρ| ≥ 0.925`.

use std::f64::consts::PI;

use super::normal::phi;
use crate::error::{ensure_finite, Error, Result};

const TWO_PI: f64 = 2.0 * PI;

// (abscissa, weight) on [-1, 1]; only the negative half, the integrand is
// evaluated at both ±x.
const GL6: [(f64, f64); 3] = [
    (-0.932_469_514_203_152_0, 0.171_324_492_379_170_5),
    (-0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (-0.238_619_186_083_197_0, 0.467_913_934_572_691_0),
];
const GL12: [(f64, f64); 6] = [
    (-0.981_560_634_246_719_1, 0.047_175_336_386_511_83),
    (-0.904_117_256_370_475_0, 0.106_939_325_995_318_3),
    (-0.769_902_674_194_305_0, 0.160_078_328_543_346_4),
    (-0.587_317_954_286_617_1, 0.203_167_426_723_065_9),
    (-0.367_831_498_998_180_2, 0.233_492_536_538_354_7),
    (-0.125_233_408_511_469_0, 0.249_147_045_813_402_9),
];
const GL20: [(f64, f64); 10] = [
    (-0.993_128_599_185_094_9, 0.017_614_007_139_152_12),
    (-0.963_971_927_277_913_8, 0.040_601_429_800_386_94),
    (-0.912_234_428_251_325_9, 0.062_672_048_334_109_06),
    (-0.839_116_971_822_218_8, 0.083_276_741_576_704_75),
    (-0.746_331_906_460_150_8, 0.101_930_119_817_240_4),
    (-0.636_053_680_726_515_0, 0.118_194_531_961_518_4),
    (-0.510_867_001_950_827_1, 0.131_688_638_449_176_6),
    (-0.373_706_088_715_419_6, 0.142_096_109_318_382_1),
    (-0.227_785_851_141_645_1, 0.149_172_986_472_603_7),
    (-0.076_526_521_133_497_33, 0.152_753_387_130_725_9),
];

fn nodes(abs_rho: f64) -> &'static [(f64, f64)] {
    if abs_rho < 0.3 {
        &GL6
    } else if abs_rho < 0.75 {
        &GL12
    } else {
        &GL20
    }
}

/// Upper orthant `P(X > dh, Y > dk)` for standard bivariate normal with
/// correlation `r`, `|r| ≤ 1`.
fn bvn_upper(dh: f64, dk: f64, r: f64) -> f64 {
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let quad = nodes(r.abs());

    if r.abs() < 0.925 {
        let mut bvn = 0.0;
        if r != 0.0 {
            let hs = 0.5 * (h * h + k * k);
            let asr = r.asin();
            for &(x, w) in quad {
                for sign in [1.0, -1.0] {
                    let sn = (0.5 * asr * (sign * x + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * TWO_PI);
        }
        return bvn + phi(-h) * phi(-k);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let mut bvn = 0.0;
    if r.abs() < 1.0 {
        let a_sq = (1.0 - r) * (1.0 + r);
        let mut a = a_sq.sqrt();
        let b_sq = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-0.5 * (b_sq / a_sq + hk)).exp()
            * (1.0 - c * (b_sq - a_sq) * (1.0 - d * b_sq / 5.0) / 3.0 + c * d * a_sq * a_sq / 5.0);
        if hk > -160.0 {
            let b = b_sq.sqrt();
            bvn -= (-0.5 * hk).exp()
                * TWO_PI.sqrt()
                * phi(-b / a)
                * b
                * (1.0 - c * b_sq * (1.0 - d * b_sq / 5.0) / 3.0);
        }
        a *= 0.5;
        for &(x, w) in quad {
            for sign in [1.0, -1.0] {
                let xs = (a * (sign * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                bvn += a
                    * w
                    * ((-b_sq / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                        - (-0.5 * (b_sq / xs + hk)).exp() * (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / TWO_PI;
    }
    if r > 0.0 {
        bvn + phi(-h.max(k))
    } else {
        -bvn + (phi(-h) - phi(-k)).max(0.0)
    }
}

/// Unchecked lower orthant `P(X ≤ h, Y ≤ k)`; accepts infinite limits.
pub(crate) fn bvn_lower(h: f64, k: f64, rho: f64) -> f64 {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return phi(k);
    }
    if k == f64::INFINITY {
        return phi(h);
    }
    if rho >= 1.0 {
        return phi(h.min(k));
    }
    if rho <= -1.0 {
        return (phi(h) + phi(k) - 1.0).max(0.0);
    }
    bvn_upper(-h, -k, rho).clamp(0.0, 1.0)
}

/// `Φ₂(h, k; ρ) = P(X ≤ h, Y ≤ k)` for a standard bivariate normal pair with
/// correlation `rho`. `ρ = ±1` are evaluated as the degenerate limits.
pub fn bivariate_normal_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    ensure_finite("h", h)?;
    ensure_finite("k", k)?;
    ensure_finite("rho", rho)?;
    if rho.abs() > 1.0 {
        return Err(Error::OutOfRange {
            name: "rho",
            value: rho,
            range: "[-1, 1]",
        });
    }
    Ok(bvn_lower(h, k, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::integrate;
    use crate::numerics::std_normal_pdf;

    // P(X ≤ h, Y ≤ k) = ∫_{-∞}^{h} φ(x) Φ((k − ρx)/√(1−ρ²)) dx
    fn oracle(h: f64, k: f64, rho: f64) -> f64 {
        let s = (1.0 - rho * rho).sqrt();
        let lo = -12.0f64;
        if h <= lo {
            return 0.0;
        }
        integrate(
            |x| std_normal_pdf(x) * phi((k - rho * x) / s),
            lo,
            h,
            1e-14,
        )
        .0
    }

    #[test]
    fn reference_values() {
        assert!((bivariate_normal_cdf(0.0, 0.0, 0.0).unwrap() - 0.25).abs() < 1e-15);
        let sheppard = 0.25 + 0.5f64.asin() / (2.0 * PI);
        assert!((bivariate_normal_cdf(0.0, 0.0, 0.5).unwrap() - sheppard).abs() < 1e-14);
        assert!((sheppard - 1.0 / 3.0).abs() < 1e-15);
        let v = bivariate_normal_cdf(1.959964, 1.959964, 0.5).unwrap();
        assert!((v - 0.955).abs() < 0.0005, "{v}");
    }

    #[test]
    fn agrees_with_quadrature_oracle() {
        let grid = [-3.5, -2.0, -1.0, -0.3, 0.0, 0.4, 1.28, 1.96, 3.0];
        let rhos = [
            -0.999, -0.97, -0.93, -0.9, -0.6, -0.2, 0.0, 0.1, 0.29, 0.31, 0.5, 0.74, 0.76,
            0.92, 0.926, 0.95, 0.99, 0.9999,
        ];
        for &rho in &rhos {
            for &h in &grid {
                for &k in &grid {
                    let got = bivariate_normal_cdf(h, k, rho).unwrap();
                    let want = oracle(h, k, rho);
                    assert!(
                        (got - want).abs() < 1e-9,
                        "h={h} k={k} rho={rho}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_correlations() {
        assert!((bivariate_normal_cdf(0.3, 1.0, 1.0).unwrap() - phi(0.3)).abs() < 1e-15);
        let v = bivariate_normal_cdf(0.3, 1.0, -1.0).unwrap();
        assert!((v - (phi(0.3) + phi(1.0) - 1.0)).abs() < 1e-15);
        assert_eq!(bivariate_normal_cdf(-1.0, -1.0, -1.0).unwrap(), 0.0);
        assert!(bivariate_normal_cdf(0.0, 0.0, 1.0001).is_err());
        assert!(bivariate_normal_cdf(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn independence_factorises() {
        let mut h = -4.0;
        while h <= 4.0 {
            let mut k = -4.0;
            while k <= 4.0 {
                let v = bivariate_normal_cdf(h, k, 0.0).unwrap();
                assert!((v - phi(h) * phi(k)).abs() < 1e-9);
                k += 0.25;
            }
            h += 0.25;
        }
    }

    #[test]
    fn monotone_in_limits_and_correlation() {
        let rhos = [-0.95, -0.5, 0.0, 0.3, 0.8, 0.95];
        for &rho in &rhos {
            let mut prev = 0.0;
            for i in -40..=40 {
                let h = i as f64 * 0.1;
                let v = bivariate_normal_cdf(h, 0.7, rho).unwrap();
                assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
        for &h in &[0.0, 0.5, 1.0, 1.96, 3.0] {
            let mut prev = 0.0;
            for i in -99..=99 {
                let rho = i as f64 / 100.0;
                let v = bivariate_normal_cdf(h, h, rho).unwrap();
                assert!(v >= prev - 1e-15, "h={h} rho={rho}");
                prev = v;
            }
        }
    }

    #[test]
    fn symmetric_in_limits() {
        for &(h, k, r) in &[(0.3, -1.2, 0.4), (2.0, 0.1, -0.95), (-0.5, 1.5, 0.97)] {
            let a = bivariate_normal_cdf(h, k, r).unwrap();
            let b = bivariate_normal_cdf(k, h, r).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }
}

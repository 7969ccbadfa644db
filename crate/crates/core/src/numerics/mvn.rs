//! Multivariate normal lower-orthant probabilities `P(Z₁ ≤ c₁, …, Z_K ≤ c_K)`.
//!
//! Two routes: a one-dimensional integral when the correlation has the
//! one-factor form `ρᵢⱼ = λᵢλⱼ` (comparisons sharing a control arm), and a
//! randomized lattice rule over Genz's separation-of-variables transform for
//! arbitrary positive semi-definite correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bivariate::bvn_lower;
use super::normal::{phi, phi_inv, std_normal_pdf};
use super::quad::integrate;
use super::ErrorBound;
use crate::error::{ensure_finite, Error, Result};
use crate::matrix::CorrelationMatrix;

const FACTOR_TOL: f64 = 1e-9;
const QUAD_BOUND: f64 = 8.0;
const QUAD_TOL: f64 = 1e-12;

const RANDOMIZATIONS: usize = 10;
// Two-sided 99% Student-t quantile with RANDOMIZATIONS - 1 degrees of freedom.
const T_99_DF9: f64 = 3.249_835_5;
const MAX_LATTICE_POINTS: usize = 1 << 22;
const FIXED_LATTICE_POINTS: usize = 1 << 15;
const FIXED_LATTICE_SEED: u64 = 0x5eed_0f_d0_77e7;

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// `P(Z ≤ c)` where `Zₖ = λₖU + √(1−λₖ²)εₖ`, i.e. corr(Zᵢ, Zⱼ) = λᵢλⱼ.
pub fn mvn_orthant_product_corr(c: &[f64], lambda: &[f64]) -> Result<f64> {
    if c.len() != lambda.len() || c.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} limits, {} loadings",
            c.len(),
            lambda.len()
        )));
    }
    for &l in lambda {
        ensure_finite("lambda", l)?;
        if l.abs() >= 1.0 {
            return Err(Error::OutOfRange {
                name: "lambda",
                value: l,
                range: "(-1, 1)",
            });
        }
    }
    for &x in c {
        if x.is_nan() {
            return Err(Error::NonFinite { name: "c", value: x });
        }
    }
    Ok(product_corr_unchecked(c, lambda))
}

fn product_corr_unchecked(c: &[f64], lambda: &[f64]) -> f64 {
    if lambda.iter().all(|&l| l == 0.0) {
        return c.iter().map(|&x| phi(x)).product();
    }
    let scale: Vec<f64> = lambda.iter().map(|l| (1.0 - l * l).sqrt()).collect();
    let integrand = |u: f64| {
        let mut prod = std_normal_pdf(u);
        for ((&ck, &lk), &sk) in c.iter().zip(lambda).zip(&scale) {
            prod *= phi((ck - lk * u) / sk);
            if prod == 0.0 {
                break;
            }
        }
        prod
    };
    let (value, _) = integrate(integrand, -QUAD_BOUND, QUAD_BOUND, QUAD_TOL);
    value.clamp(0.0, 1.0)
}

/// Loadings `λ ∈ [0, 1)` with `ρᵢⱼ = λᵢλⱼ` (within 1e-9) when the matrix has
/// one-factor structure.
pub(crate) fn factor_loadings(corr: &CorrelationMatrix) -> Option<Vec<f64>> {
    let k = corr.dim();
    let mut lambda = vec![0.0; k];
    let active: Vec<usize> = (0..k)
        .filter(|&i| (0..k).any(|j| j != i && corr.get(i, j).abs() > 1e-12))
        .collect();
    match active.len() {
        0 => return Some(lambda),
        1 => return None,
        2 => {
            let r = corr.get(active[0], active[1]);
            if r <= 0.0 {
                return None;
            }
            lambda[active[0]] = r.sqrt();
            lambda[active[1]] = r.sqrt();
        }
        _ => {
            for &i in &active {
                let mut best: Option<(usize, usize, f64)> = None;
                for (a, &j) in active.iter().enumerate() {
                    for &l in &active[a + 1..] {
                        if j == i || l == i {
                            continue;
                        }
                        let r = corr.get(j, l);
                        if best.is_none_or(|(_, _, b)| r.abs() > b.abs()) {
                            best = Some((j, l, r));
                        }
                    }
                }
                let (j, l, r_jl) = best?;
                if r_jl.abs() < 1e-12 {
                    return None;
                }
                let sq = corr.get(i, j) * corr.get(i, l) / r_jl;
                if sq < 0.0 {
                    return None;
                }
                lambda[i] = sq.sqrt();
            }
        }
    }
    if lambda.iter().any(|&l| l >= 1.0) {
        return None;
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if (lambda[i] * lambda[j] - corr.get(i, j)).abs() > FACTOR_TOL {
                return None;
            }
        }
    }
    Some(lambda)
}

fn lattice_generator(dim: usize) -> Vec<f64> {
    PRIMES
        .iter()
        .cycle()
        .take(dim)
        .enumerate()
        .map(|(i, &p)| {
            // Past the table, perturb to keep the generator irrational-looking.
            let v = (p as f64 + i as f64 / PRIMES.len() as f64 * 0.5).sqrt();
            v.fract()
        })
        .collect()
}

/// One pass of the separation-of-variables integrand at point `w ∈ [0,1]^{K−1}`.
fn sov_integrand(c: &[f64], chol: &[f64], k: usize, w: &[f64], y: &mut [f64]) -> f64 {
    let mut f = 1.0;
    for i in 0..k {
        let mut s = 0.0;
        for j in 0..i {
            s += chol[i * k + j] * y[j];
        }
        let diag = chol[i * k + i];
        let e = if diag > 1e-12 {
            phi((c[i] - s) / diag)
        } else if c[i] - s >= 0.0 {
            1.0
        } else {
            0.0
        };
        f *= e;
        if f == 0.0 {
            return 0.0;
        }
        if i + 1 < k {
            let u = (w[i] * e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            y[i] = phi_inv(u);
        }
    }
    f
}

/// Mean over each random shift of an `n`-point rank-1 lattice; returns the
/// per-shift averages.
pub(crate) fn lattice_estimate(c: &[f64], corr: &CorrelationMatrix, n: usize, seed: u64) -> Vec<f64> {
    let k = corr.dim();
    let chol = corr.cholesky_lower();
    let gen = lattice_generator(k.saturating_sub(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<Vec<f64>> = (0..RANDOMIZATIONS)
        .map(|_| (0..gen.len()).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut w = vec![0.0; gen.len()];
    let mut y = vec![0.0; k];
    shifts
        .iter()
        .map(|shift| {
            let mut sum = 0.0;
            for i in 1..=n {
                for ((wj, &zj), &sj) in w.iter_mut().zip(&gen).zip(shift) {
                    let x = (i as f64 * zj + sj).fract();
                    // baker's (tent) transform
                    *wj = (2.0 * x - 1.0).abs();
                }
                sum += sov_integrand(c, &chol, k, &w, &mut y);
            }
            sum / n as f64
        })
        .collect()
}

fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, T_99_DF9 * (var / m).sqrt())
}

fn check_limits(c: &[f64], corr: &CorrelationMatrix) -> Result<()> {
    if c.len() != corr.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} limits for a {}x{} correlation matrix",
            c.len(),
            corr.dim(),
            corr.dim()
        )));
    }
    if let Some(&x) = c.iter().find(|x| x.is_nan()) {
        return Err(Error::NonFinite { name: "c", value: x });
    }
    Ok(())
}

/// Quasi-Monte Carlo estimate of `P(Z ≤ c)` for `Z ~ N(0, corr)`.
///
/// The lattice size doubles until the 99% half-width (from
/// `RANDOMIZATIONS` independent random shifts) drops to `eps`. Identical
/// `seed` gives an identical result.
pub fn mvn_cdf_qmc(c: &[f64], corr: &CorrelationMatrix, eps: f64, seed: u64) -> Result<ErrorBound> {
    check_limits(c, corr)?;
    if !(eps > 0.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, inf)",
        });
    }
    let mut n = 1024;
    let mut doublings = 0;
    loop {
        let (estimate, half_width) = mean_and_half_width(&lattice_estimate(c, corr, n, seed));
        if half_width <= eps {
            return Ok(ErrorBound {
                estimate: estimate.clamp(0.0, 1.0),
                half_width,
            });
        }
        if n >= MAX_LATTICE_POINTS {
            return Err(Error::NoConvergence {
                iterations: doublings,
                last_change: half_width,
            });
        }
        n *= 2;
        doublings += 1;
    }
}

/// `P(Z ≤ c)` choosing the route by structure: exact for `K ≤ 2`, the
/// one-factor integral when the matrix factorises, and a fixed-size
/// randomized lattice otherwise (deterministic and continuous in `c`).
pub fn orthant_probability(c: &[f64], corr: &CorrelationMatrix) -> Result<f64> {
    check_limits(c, corr)?;
    let value = match c.len() {
        0 => 1.0,
        1 => phi(c[0]),
        2 => bvn_lower(c[0], c[1], corr.get(0, 1)),
        _ => match factor_loadings(corr) {
            Some(lambda) => product_corr_unchecked(c, &lambda),
            None => {
                let (mean, _) = mean_and_half_width(&lattice_estimate(
                    c,
                    corr,
                    FIXED_LATTICE_POINTS,
                    FIXED_LATTICE_SEED,
                ));
                mean.clamp(0.0, 1.0)
            }
        },
    };
    Ok(value)
}

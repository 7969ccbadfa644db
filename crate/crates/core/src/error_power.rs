//! Familywise error rate and power of a set of one-sided comparisons.
//!
//! Every comparison rejects when its statistic, oriented so that benefit is
//! positive, exceeds `z_{1−α}`. Under the global null the statistics are
//! jointly standard normal with the comparison correlation matrix.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, ensure_probability_open, Error, Result};
use crate::matrix::CorrelationMatrix;
use crate::model::OutcomeSpec;
use crate::numerics::{orthant_probability, phi, phi_inv, Probability};
use crate::sim::events::expected_events;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwerMethod {
    Sidak,
    Bonferroni,
    Dunnett,
}

impl FwerMethod {
    pub const ALL: [FwerMethod; 3] = [FwerMethod::Sidak, FwerMethod::Bonferroni, FwerMethod::Dunnett];

    pub fn name(self) -> &'static str {
        match self {
            FwerMethod::Sidak => "sidak",
            FwerMethod::Bonferroni => "bonferroni",
            FwerMethod::Dunnett => "dunnett",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerResult {
    pub value: Probability,
    pub method: FwerMethod,
    pub corr_used: Option<CorrelationMatrix>,
}

fn check_levels(name: &'static str, levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::DimensionMismatch(format!("empty list of {name}")));
    }
    for &a in levels {
        ensure_probability_open(name, a)?;
    }
    Ok(())
}

fn check_dims(levels: &[f64], corr: &CorrelationMatrix) -> Result<()> {
    if levels.len() != corr.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} levels for a {}x{} correlation matrix",
            levels.len(),
            corr.dim(),
            corr.dim()
        )));
    }
    Ok(())
}

/// `1 − ∏(1 − αₖ)`: independent comparisons.
pub fn fwer_sidak(alphas: &[f64]) -> Result<f64> {
    check_levels("alphas", alphas)?;
    Ok(1.0 - alphas.iter().map(|a| 1.0 - a).product::<f64>())
}

/// `min(1, Σαₖ)`.
pub fn fwer_bonferroni(alphas: &[f64]) -> Result<f64> {
    check_levels("alphas", alphas)?;
    Ok(alphas.iter().sum::<f64>().min(1.0))
}

/// `1 − Φ_K(z_{1−α₁}, …, z_{1−α_K}; corr)`.
pub fn fwer_dunnett(alphas: &[f64], corr: &CorrelationMatrix) -> Result<f64> {
    check_levels("alphas", alphas)?;
    check_dims(alphas, corr)?;
    let c: Vec<f64> = alphas.iter().map(|&a| phi_inv(1.0 - a)).collect();
    Ok((1.0 - orthant_probability(&c, corr)?).clamp(0.0, 1.0))
}

pub fn fwer(method: FwerMethod, alphas: &[f64], corr: &CorrelationMatrix) -> Result<FwerResult> {
    let (value, corr_used) = match method {
        FwerMethod::Sidak => (fwer_sidak(alphas)?, None),
        FwerMethod::Bonferroni => (fwer_bonferroni(alphas)?, None),
        FwerMethod::Dunnett => (fwer_dunnett(alphas, corr)?, Some(corr.clone())),
    };
    Ok(FwerResult {
        value: Probability::clamped(value),
        method,
        corr_used,
    })
}

/// Probability of rejecting at least one null when every comparison has its
/// targeted effect: `1 − Φ_K(z_{1−ω₁}, …; corr)`.
pub fn disjunctive_power(omegas: &[f64], corr: &CorrelationMatrix) -> Result<f64> {
    check_levels("powers", omegas)?;
    check_dims(omegas, corr)?;
    let c: Vec<f64> = omegas.iter().map(|&w| phi_inv(1.0 - w)).collect();
    Ok((1.0 - orthant_probability(&c, corr)?).clamp(0.0, 1.0))
}

/// Probability of rejecting every null: `Φ_K(z_{ω₁}, …; corr)`.
pub fn conjunctive_power(omegas: &[f64], corr: &CorrelationMatrix) -> Result<f64> {
    check_levels("powers", omegas)?;
    check_dims(omegas, corr)?;
    let c: Vec<f64> = omegas.iter().map(|&w| phi_inv(w)).collect();
    Ok(orthant_probability(&c, corr)?.clamp(0.0, 1.0))
}

/// Power of a single comparison, `Φ(|θ|√V − z_{1−α})`.
pub fn pairwise_power(outcome: &OutcomeSpec, count: f64, a: f64, alpha: f64) -> Result<f64> {
    outcome.validate()?;
    ensure_probability_open("alpha", alpha)?;
    let nc = outcome.noncentrality(count, a)?.abs();
    Ok(phi(nc - phi_inv(1.0 - alpha)))
}

/// Total events `d = ⌈(z_{1−α} + z_ω)² (1+A)² / (A log²HR)⌉` giving pairwise
/// power `power` at one-sided level `alpha`.
pub fn required_events(alpha: f64, power: f64, hazard_ratio: f64, a: f64) -> Result<u64> {
    Ok(required_events_exact(alpha, power, hazard_ratio, a)?.ceil() as u64)
}

pub(crate) fn required_events_exact(alpha: f64, power: f64, hazard_ratio: f64, a: f64) -> Result<f64> {
    ensure_probability_open("alpha", alpha)?;
    ensure_probability_open("power", power)?;
    ensure_positive("hazard_ratio", hazard_ratio)?;
    ensure_positive("allocation_ratio", a)?;
    if (hazard_ratio - 1.0).abs() < 1e-12 {
        return Err(Error::OutOfRange {
            name: "hazard_ratio",
            value: hazard_ratio,
            range: "(0, 1) or (1, inf)",
        });
    }
    let z = phi_inv(1.0 - alpha) + phi_inv(power);
    let log_hr = hazard_ratio.ln();
    Ok(z * z * (1.0 + a).powi(2) / (a * log_hr * log_hr))
}

/// Basis for splitting total events into the control arm's share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "basis")]
pub enum ControlShare {
    /// Events split 1 : A as under the null (the split behind `V = d·A/(1+A)²`).
    Null,
    /// Expected split under the alternative when both arms accrue from time
    /// zero at `control_rate` and `A·control_rate` until the analysis.
    Alternative {
        control_rate: f64,
        control_hazard: f64,
        hazard_ratio: f64,
    },
}

/// Expected number of the `total_events` that occur in the control arm.
pub fn control_event_share(total_events: f64, a: f64, basis: ControlShare) -> Result<f64> {
    ensure_positive("total_events", total_events)?;
    ensure_positive("allocation_ratio", a)?;
    match basis {
        ControlShare::Null => Ok(total_events / (1.0 + a)),
        ControlShare::Alternative {
            control_rate,
            control_hazard,
            hazard_ratio,
        } => {
            ensure_positive("control_rate", control_rate)?;
            ensure_positive("control_hazard", control_hazard)?;
            ensure_positive("hazard_ratio", hazard_ratio)?;
            let control = |t: f64| expected_events(control_rate, control_hazard, (0.0, t), t);
            let experimental =
                |t: f64| expected_events(a * control_rate, control_hazard * hazard_ratio, (0.0, t), t);
            let mut hi = 1.0;
            while control(hi) + experimental(hi) < total_events {
                hi *= 2.0;
            }
            let t = crate::numerics::find_root_monotone(
                |t| control(t) + experimental(t) - total_events,
                0.0,
                hi,
                1e-10,
            )?;
            Ok(control(t))
        }
    }
}

/// Control patients `n₀` giving pairwise power `power` for a continuous or
/// binary outcome; for survival, the null-basis control share of
/// [`required_events`].
pub fn required_control_count(outcome: &OutcomeSpec, alpha: f64, power: f64, a: f64) -> Result<u64> {
    Ok(required_control_count_exact(outcome, alpha, power, a)?.ceil() as u64)
}

pub(crate) fn required_control_count_exact(
    outcome: &OutcomeSpec,
    alpha: f64,
    power: f64,
    a: f64,
) -> Result<f64> {
    outcome.validate()?;
    match *outcome {
        OutcomeSpec::Survival { hazard_ratio, .. } => {
            let d = required_events_exact(alpha, power, hazard_ratio, a)?;
            control_event_share(d, a, ControlShare::Null)
        }
        _ => {
            ensure_probability_open("alpha", alpha)?;
            ensure_probability_open("power", power)?;
            let theta = outcome.effect_theta();
            if theta == 0.0 {
                return Err(Error::InvalidDesign("null effect needs infinite sample size".into()));
            }
            // V is proportional to n₀
            let per_patient = outcome.fisher_information(1.0, a)?;
            let z = phi_inv(1.0 - alpha) + phi_inv(power);
            Ok(z * z / (theta * theta * per_patient))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn survival(hr: f64) -> OutcomeSpec {
        OutcomeSpec::Survival { lambda0: 0.693, hazard_ratio: hr }
    }

    #[test]
    fn sidak_values() {
        assert!((fwer_sidak(&[0.025, 0.025]).unwrap() - 0.049375).abs() < 1e-15);
        assert!((fwer_sidak(&[0.03]).unwrap() - 0.03).abs() < 1e-15);
        let v = fwer_sidak(&[0.0084; 3]).unwrap();
        assert!((v - (1.0 - 0.9916f64.powi(3))).abs() < 1e-15);
        assert!((v - 0.025).abs() < 2e-5);
        assert!(fwer_sidak(&[]).is_err());
    }

    #[test]
    fn bonferroni_values() {
        assert!((fwer_bonferroni(&[0.025, 0.025]).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(fwer_bonferroni(&[0.02]).unwrap(), 0.02);
        assert_eq!(fwer_bonferroni(&[0.6, 0.6]).unwrap(), 1.0);
        assert!(fwer_bonferroni(&[]).is_err());
    }

    #[test]
    fn dunnett_values() {
        let half = CorrelationMatrix::pair(0.5).unwrap();
        let v = fwer_dunnett(&[0.025, 0.025], &half).unwrap();
        assert!((v - 0.045).abs() < 0.0005, "{v}");
        let zero = CorrelationMatrix::identity(2);
        let v = fwer_dunnett(&[0.025, 0.025], &zero).unwrap();
        assert!((v - 0.049375).abs() < 1e-12);
        let two_thirds = CorrelationMatrix::pair(0.66).unwrap();
        let v = fwer_dunnett(&[0.025, 0.025], &two_thirds).unwrap();
        assert!((v - 0.043).abs() < 0.0005, "{v}");
        assert!(fwer_dunnett(&[0.025], &zero).is_err());
    }

    #[test]
    fn power_values() {
        let half = CorrelationMatrix::pair(0.5).unwrap();
        let zero = CorrelationMatrix::identity(2);
        let d = disjunctive_power(&[0.9, 0.9], &half).unwrap();
        assert!((d - 0.968).abs() < 0.0005, "{d}");
        let d0 = disjunctive_power(&[0.9, 0.9], &zero).unwrap();
        assert!((d0 - 0.99).abs() < 1e-12);
        let two_thirds = CorrelationMatrix::pair(0.66).unwrap();
        let d = disjunctive_power(&[0.9, 0.9], &two_thirds).unwrap();
        assert!((d - 0.956).abs() < 0.0006, "{d}");

        assert!((conjunctive_power(&[0.9, 0.9], &zero).unwrap() - 0.81).abs() < 1e-12);
        let c = conjunctive_power(&[0.9, 0.9], &half).unwrap();
        assert!((c - 0.8324).abs() < 1e-4, "{c}");
        let third = CorrelationMatrix::pair(0.33).unwrap();
        let c = conjunctive_power(&[0.9, 0.9], &third).unwrap();
        assert!((c - 0.823).abs() < 0.0005, "{c}");
    }

    #[test]
    fn pairwise_power_values() {
        // noncentrality exactly at the critical value
        let alpha = 0.025;
        let z = phi_inv(1.0 - alpha);
        let theta = 0.75f64.ln();
        let d = 4.0 * (z / theta).powi(2);
        let p = pairwise_power(&survival(0.75), d, 1.0, alpha).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let p = pairwise_power(&survival(0.75), 508.0, 1.0, 0.025).unwrap();
        assert!((p - 0.9).abs() < 0.002, "{p}");
        let p = pairwise_power(&survival(1.0), 508.0, 1.0, 0.025).unwrap();
        assert!((p - 0.025).abs() < 1e-12);
    }

    #[test]
    fn required_events_values() {
        assert_eq!(required_events(0.025, 0.9, 0.75, 1.0).unwrap(), 508);
        assert_eq!(required_events(0.025, 0.9, 0.75, 0.5).unwrap(), 572);
        assert!(required_events(0.025, 0.9, 1.0, 1.0).is_err());
        // 50% power: z_ω = 0
        let d = required_events_exact(0.025, 0.5, 0.75, 1.0).unwrap();
        let z = phi_inv(0.975);
        assert!((d - 4.0 * z * z / 0.75f64.ln().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn required_events_round_trip_power() {
        for &a in &[0.5, 1.0, 2.0] {
            for &hr in &[0.6, 0.75, 0.85] {
                let d = required_events(0.025, 0.9, hr, a).unwrap();
                let p = pairwise_power(&survival(hr), d as f64, a, 0.025).unwrap();
                assert!(p >= 0.9 && p < 0.902, "a={a} hr={hr} p={p}");
            }
        }
    }

    #[test]
    fn control_share_bases() {
        assert!((control_event_share(508.0, 1.0, ControlShare::Null).unwrap() - 254.0).abs() < 1e-12);
        let alt = control_event_share(
            508.0,
            1.0,
            ControlShare::Alternative { control_rate: 250.0, control_hazard: 0.693, hazard_ratio: 0.75 },
        )
        .unwrap();
        // fewer experimental events under benefit, so control's share grows
        assert!(alt > 254.0 && alt < 290.0, "{alt}");
    }

    #[test]
    fn continuous_sample_size_round_trip() {
        let o = OutcomeSpec::Continuous { mu0: 0.0, mu1: -0.25, sigma0: 1.0, sigma1: 1.0 };
        let n0 = required_control_count(&o, 0.025, 0.9, 1.0).unwrap();
        let p = pairwise_power(&o, n0 as f64, 1.0, 0.025).unwrap();
        assert!(p >= 0.9 && p < 0.901);
    }
}

//! Common significance level for a set of comparisons that achieves a target
//! familywise error rate.

use serde::{Deserialize, Serialize};

use crate::correlation::{build_correlation_matrix, OverlapNormalization};
use crate::error::{Error, Result};
use crate::error_power::{fwer_dunnett, required_control_count_exact};
use crate::matrix::CorrelationMatrix;
use crate::model::{ControlTarget, OverlapInfo, PlatformSchedule};
use crate::numerics::find_root_monotone;
use crate::sim::predict_timeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaAllocation {
    pub alphas: Vec<f64>,
    pub achieved_fwer: f64,
    pub iterations: usize,
}

impl AlphaAllocation {
    pub fn alpha(&self) -> f64 {
        self.alphas[0]
    }
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::OutOfRange { name: "target_fwer", value: target, range: "(0, 1)" });
    }
    Ok(())
}

/// Equal one-sided level for every comparison so that the Dunnett FWER
/// equals `target`. The root lies between the Bonferroni level `target/K`
/// and `target` itself.
pub fn solve_uniform_alpha(target: f64, corr: &CorrelationMatrix) -> Result<AlphaAllocation> {
    check_target(target)?;
    let k = corr.dim();
    if k == 0 {
        return Err(Error::DimensionMismatch("no comparisons".into()));
    }
    if k == 1 {
        return Ok(AlphaAllocation { alphas: vec![target], achieved_fwer: target, iterations: 1 });
    }
    let f = |a: f64| fwer_dunnett(&vec![a; k], corr).map(|v| v - target);
    let lo = target / k as f64;
    let hi = target;
    // evaluate once to surface numerical errors with their own message
    f(lo)?;
    f(hi)?;
    let alpha = find_root_monotone(|a| f(a).unwrap_or(f64::NAN), lo, hi, 1e-12)?;
    let achieved = fwer_dunnett(&vec![alpha; k], corr)?;
    Ok(AlphaAllocation { alphas: vec![alpha; k], achieved_fwer: achieved, iterations: 1 })
}

/// Re-solves the common level over the comparisons that remain after a
/// planned one is not added.
pub fn buyback_alpha(target: f64, remaining_corr: &CorrelationMatrix) -> Result<AlphaAllocation> {
    solve_uniform_alpha(target, remaining_corr)
}

/// Where the recursive procedure gets its control overlap from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapSource {
    /// Shared counts that do not depend on the event targets.
    Fixed(Vec<OverlapInfo>),
    /// Expected shared counts from the schedule's timeline.
    Predicted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursiveAdjustment {
    pub allocation: AlphaAllocation,
    /// Schedule with the final levels and control targets.
    pub schedule: PlatformSchedule,
    pub correlation: CorrelationMatrix,
}

pub const RECURSIVE_TOLERANCE: f64 = 1e-6;

/// Fixed-point iteration between levels, control targets and correlations:
/// solve a common level from the current correlation, recompute each
/// comparison's control target for that level, recompute the overlap, and
/// repeat until the level moves by less than `1e-6`.
pub fn recursive_alpha_adjust(
    schedule: &PlatformSchedule,
    target: f64,
    max_iter: usize,
    damping: f64,
    overlaps: &OverlapSource,
    normalization: OverlapNormalization,
) -> Result<RecursiveAdjustment> {
    check_target(target)?;
    schedule.validate()?;
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::OutOfRange { name: "damping", value: damping, range: "(0, 1]" });
    }
    if max_iter == 0 {
        return Err(Error::InvalidDesign("max_iter must be at least 1".into()));
    }
    let mut current = schedule.clone();
    let correlation_of = |s: &PlatformSchedule| -> Result<CorrelationMatrix> {
        match overlaps {
            OverlapSource::Fixed(o) => build_correlation_matrix(s, o, normalization),
            OverlapSource::Predicted => build_correlation_matrix(s, &predict_timeline(s)?.overlaps(), normalization),
        }
    };
    let mut corr = correlation_of(&current)?;
    let mut alpha: Option<f64> = None;
    let mut last_change = f64::INFINITY;

    for iteration in 1..=max_iter {
        let solved = solve_uniform_alpha(target, &corr)?.alpha();
        let next = match alpha {
            None => solved,
            Some(a) => a + damping * (solved - a),
        };
        last_change = alpha.map_or(f64::INFINITY, |a| (next - a).abs());
        alpha = Some(next);

        for c in current.comparisons.iter_mut() {
            c.alpha = next;
            let n = required_control_count_exact(&c.outcome, next, c.power, c.allocation_ratio)?.ceil() as u64;
            c.target = match c.target {
                ControlTarget::Events(_) => ControlTarget::Events(n.max(1)),
                ControlTarget::Patients(_) => ControlTarget::Patients(n.max(1)),
            };
        }
        let new_corr = correlation_of(&current)?;
        let corr_moved = new_corr
            .rows()
            .iter()
            .flatten()
            .zip(corr.rows().iter().flatten())
            .any(|(a, b)| (a - b).abs() > 1e-12);
        corr = new_corr;
        if !corr_moved || last_change < RECURSIVE_TOLERANCE {
            let k = current.len();
            let achieved = fwer_dunnett(&vec![next; k], &corr)?;
            return Ok(RecursiveAdjustment {
                allocation: AlphaAllocation { alphas: vec![next; k], achieved_fwer: achieved, iterations: iteration },
                schedule: current,
                correlation: corr,
            });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, last_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AccrualModel, ComparisonSpec, OutcomeSpec};

    #[test]
    fn independent_pair_matches_sidak() {
        let a = solve_uniform_alpha(0.05, &CorrelationMatrix::identity(2)).unwrap();
        assert!((a.alpha() - (1.0 - 0.95f64.sqrt())).abs() < 1e-9);
        assert!((a.achieved_fwer - 0.05).abs() < 1e-9);
    }

    #[test]
    fn single_comparison_keeps_target() {
        let a = solve_uniform_alpha(0.025, &CorrelationMatrix::identity(1)).unwrap();
        assert_eq!(a.alphas, vec![0.025]);
    }

    #[test]
    fn infeasible_targets() {
        let c = CorrelationMatrix::identity(2);
        assert!(solve_uniform_alpha(0.0, &c).is_err());
        assert!(solve_uniform_alpha(1.0, &c).is_err());
    }

    #[test]
    fn buyback_independent_pair() {
        let a = buyback_alpha(0.025, &CorrelationMatrix::identity(2)).unwrap();
        assert!((a.alpha() - (1.0 - 0.975f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn correlation_raises_level() {
        let zero = solve_uniform_alpha(0.025, &CorrelationMatrix::identity(2)).unwrap().alpha();
        let half = solve_uniform_alpha(0.025, &CorrelationMatrix::pair(0.5).unwrap()).unwrap().alpha();
        assert!(half > zero);
    }

    fn survival(id: &str, open: f64, e0: u64) -> ComparisonSpec {
        ComparisonSpec {
            id: id.into(),
            alpha: 0.025,
            power: 0.9,
            allocation_ratio: 1.0,
            outcome: OutcomeSpec::Survival { lambda0: 0.693, hazard_ratio: 0.75 },
            open_time: open,
            target: ControlTarget::Events(e0),
            accrual_duration: None,
        }
    }

    #[test]
    fn fixed_overlap_converges_in_one_iteration() {
        let s = PlatformSchedule::new(500.0, AccrualModel::PerComparison, vec![survival("E1", 0.0, 264), survival("E2", 0.0, 264)])
            .unwrap();
        let overlaps = OverlapSource::Fixed(vec![OverlapInfo::new(0, 1, 264.0, 264.0, 264.0).unwrap()]);
        let r = recursive_alpha_adjust(&s, 0.025, 20, 1.0, &overlaps, OverlapNormalization::default()).unwrap();
        assert_eq!(r.allocation.iterations, 1);
        let direct = solve_uniform_alpha(0.025, &CorrelationMatrix::pair(0.5).unwrap()).unwrap();
        assert!((r.allocation.alpha() - direct.alpha()).abs() < 1e-12);
    }

    #[test]
    fn predicted_overlap_converges() {
        let s = PlatformSchedule::new(
            500.0,
            AccrualModel::PerComparison,
            vec![survival("E1", 0.0, 264), survival("E2", 0.0, 264), survival("E3", 1.0, 264)],
        )
        .unwrap();
        let r = recursive_alpha_adjust(&s, 0.025, 50, 1.0, &OverlapSource::Predicted, OverlapNormalization::default())
            .unwrap();
        assert!((r.allocation.achieved_fwer - 0.025).abs() < 1e-4);
        // stricter levels need more events
        assert!(r.schedule.comparisons.iter().all(|c| c.target.count() > 264));
    }

    #[test]
    fn non_convergence_is_reported() {
        let s = PlatformSchedule::new(
            500.0,
            AccrualModel::PerComparison,
            vec![survival("E1", 0.0, 264), survival("E2", 0.5, 264), survival("E3", 1.0, 264)],
        )
        .unwrap();
        let r = recursive_alpha_adjust(&s, 0.025, 1, 1.0, &OverlapSource::Predicted, OverlapNormalization::default());
        assert!(matches!(r, Err(Error::NoConvergence { iterations: 1, .. })));
    }
}

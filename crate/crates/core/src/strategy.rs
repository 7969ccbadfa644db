//! Choosing how to control type I error when arms are added.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CorrelationMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyThresholds {
    /// Correlations below this are treated as negligible.
    pub correlation: f64,
    /// Control overlap fraction (equal allocation) considered large.
    pub overlap_fraction: f64,
}

impl Default for StrategyThresholds {
    fn default() -> Self {
        Self {
            correlation: 0.30,
            overlap_fraction: 0.60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyContext {
    pub fwer_control_required: bool,
    pub questions_related: bool,
    /// Arm added after the others started, with overlap depending on its own
    /// event targets.
    pub post_hoc_addition: bool,
    pub allocation_ratios: Vec<f64>,
    pub correlation: CorrelationMatrix,
    /// Control overlap fractions between pairs, when known.
    #[serde(default)]
    pub overlap_fractions: Vec<f64>,
    #[serde(default)]
    pub thresholds: StrategyThresholds,
}

impl StrategyContext {
    pub fn comparisons(&self) -> usize {
        self.correlation.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ControlPwerOnly,
    SplitSidakOrBonferroni,
    SplitDunnett,
    RecursiveAdjust,
}

impl Strategy {
    pub fn code(self) -> &'static str {
        match self {
            Strategy::ControlPwerOnly => "control_PWER_only",
            Strategy::SplitSidakOrBonferroni => "split_sidak_or_bonferroni",
            Strategy::SplitDunnett => "split_dunnett",
            Strategy::RecursiveAdjust => "recursive_adjust",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Strategy::ControlPwerOnly => {
                "Comparisons answer distinct questions: control each pairwise error rate at its own level."
            }
            Strategy::SplitSidakOrBonferroni => {
                "Correlations are small: split the familywise level K ways with Sidak (or Bonferroni)."
            }
            Strategy::SplitDunnett => {
                "Correlations are material: solve a common level from the multivariate normal (Dunnett)."
            }
            Strategy::RecursiveAdjust => {
                "Added arm changes the overlap: iterate levels, event targets and correlations to a fixed point."
            }
        }
    }
}

pub fn strategy_recommend(ctx: &StrategyContext) -> Result<Strategy> {
    if ctx.comparisons() == 0 {
        return Err(Error::InvalidDesign("strategy needs at least one comparison".into()));
    }
    if !ctx.allocation_ratios.is_empty() && ctx.allocation_ratios.len() != ctx.comparisons() {
        return Err(Error::DimensionMismatch(format!(
            "{} allocation ratios for {} comparisons",
            ctx.allocation_ratios.len(),
            ctx.comparisons()
        )));
    }
    if !(ctx.fwer_control_required || ctx.questions_related) {
        return Ok(Strategy::ControlPwerOnly);
    }
    if ctx.post_hoc_addition {
        return Ok(Strategy::RecursiveAdjust);
    }
    let t = ctx.thresholds;
    let large_overlap = ctx.allocation_ratios.windows(2).all(|w| w[0] == w[1])
        && ctx.overlap_fractions.iter().any(|&f| f >= t.overlap_fraction);
    if ctx.correlation.max_off_diagonal() >= t.correlation || large_overlap {
        Ok(Strategy::SplitDunnett)
    } else {
        Ok(Strategy::SplitSidakOrBonferroni)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(required: bool, related: bool, corr: CorrelationMatrix) -> StrategyContext {
        StrategyContext {
            fwer_control_required: required,
            questions_related: related,
            post_hoc_addition: false,
            allocation_ratios: vec![1.0; corr.dim()],
            correlation: corr,
            overlap_fractions: vec![],
            thresholds: StrategyThresholds::default(),
        }
    }

    #[test]
    fn distinct_questions_control_pairwise_only() {
        let c = ctx(false, false, CorrelationMatrix::pair(0.5).unwrap());
        assert_eq!(strategy_recommend(&c).unwrap(), Strategy::ControlPwerOnly);
    }

    #[test]
    fn small_correlations_split() {
        let m = CorrelationMatrix::from_pairs(3, &[(0, 1, 0.12), (0, 2, 0.01), (1, 2, 0.17)]).unwrap();
        let c = ctx(true, true, m);
        assert_eq!(strategy_recommend(&c).unwrap(), Strategy::SplitSidakOrBonferroni);
    }

    #[test]
    fn large_correlation_uses_dunnett() {
        let c = ctx(true, false, CorrelationMatrix::pair(0.5).unwrap());
        assert_eq!(strategy_recommend(&c).unwrap(), Strategy::SplitDunnett);
    }

    #[test]
    fn large_overlap_alone_uses_dunnett() {
        let mut c = ctx(true, true, CorrelationMatrix::pair(0.2).unwrap());
        c.overlap_fractions = vec![0.65];
        assert_eq!(strategy_recommend(&c).unwrap(), Strategy::SplitDunnett);
    }

    #[test]
    fn post_hoc_addition_recurses() {
        let mut c = ctx(true, true, CorrelationMatrix::pair(0.1).unwrap());
        c.post_hoc_addition = true;
        assert_eq!(strategy_recommend(&c).unwrap(), Strategy::RecursiveAdjust);
    }

    #[test]
    fn threshold_is_configurable() {
        let mut c = ctx(true, true, CorrelationMatrix::pair(0.25).unwrap());
        assert_eq!(strategy_recommend(&c).unwrap(), Strategy::SplitSidakOrBonferroni);
        c.thresholds.correlation = 0.2;
        assert_eq!(strategy_recommend(&c).unwrap(), Strategy::SplitDunnett);
    }
}

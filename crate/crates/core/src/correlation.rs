//! Correlation between comparison Z statistics induced by a shared control
//! arm.
//!
//! Each shared control observation (or event) enters both statistics with
//! weight `Aᵢ/(1+Aᵢ)` and `Aⱼ/(1+Aⱼ)`, giving
//!
//! ```text
//! ρᵢⱼ = √(Aᵢ/(1+Aᵢ)) · √(Aⱼ/(1+Aⱼ)) · shared / √(totalᵢ · totalⱼ)
//! ```
//!
//! which is `A/(A+1) · shared/total` for equal ratios and totals.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::matrix::CorrelationMatrix;
use crate::model::{OverlapInfo, PlatformSchedule};

/// Fraction of a comparison's control information that is shared.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct OverlapFraction(f64);

impl OverlapFraction {
    pub fn new(shared: f64, total: f64) -> Result<Self> {
        ensure_positive("total", total)?;
        if !(0.0..=total).contains(&shared) {
            return Err(Error::InvalidDesign(format!(
                "shared count {shared} outside [0, {total}]"
            )));
        }
        Ok(Self(shared / total))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// How the shared count is normalised when the two control totals differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapNormalization {
    /// `shared / √(totalᵢ·totalⱼ)`; the covariance of the two score
    /// statistics. Verified against simulation.
    #[default]
    GeometricMean,
    /// `shared / min(totalᵢ, totalⱼ)`; reproduces the 0.12 reported for
    /// STAMPEDE's sixth arm but overstates the simulated correlation.
    SmallerTotal,
}

fn allocation_weight(a: f64) -> Result<f64> {
    ensure_positive("allocation_ratio", a)?;
    Ok(a / (1.0 + a))
}

/// Correlation when the two comparisons share their whole control group.
pub fn full_overlap_correlation(a_i: f64, a_j: f64) -> Result<f64> {
    let (wi, wj) = (allocation_weight(a_i)?, allocation_weight(a_j)?);
    if a_i == a_j {
        return Ok(wi);
    }
    Ok((wi * wj).sqrt())
}

/// `A/(A+1) · shared/total`; `total` counts observations for continuous and
/// binary outcomes and control events for survival.
pub fn partial_overlap_correlation(a: f64, shared: f64, total: f64) -> Result<f64> {
    let w = allocation_weight(a)?;
    Ok(w * OverlapFraction::new(shared, total)?.value())
}

/// Correlation for arbitrary allocation ratios and control totals.
pub fn general_pairwise_correlation(
    overlap: &OverlapInfo,
    a_i: f64,
    a_j: f64,
    normalization: OverlapNormalization,
) -> Result<f64> {
    overlap.validate()?;
    let (wi, wj) = (allocation_weight(a_i)?, allocation_weight(a_j)?);
    let weight = if a_i == a_j { wi } else { (wi * wj).sqrt() };
    let denom = if overlap.total_i == overlap.total_j {
        overlap.total_i
    } else {
        match normalization {
            OverlapNormalization::GeometricMean => (overlap.total_i * overlap.total_j).sqrt(),
            OverlapNormalization::SmallerTotal => overlap.total_i.min(overlap.total_j),
        }
    };
    Ok(weight * (overlap.shared / denom).min(1.0))
}

/// Assembles the full matrix from pairwise overlaps; pairs without an entry
/// are independent. An inconsistent set of overlaps that is not PSD is an
/// error.
pub fn build_correlation_matrix(
    schedule: &PlatformSchedule,
    overlaps: &[OverlapInfo],
    normalization: OverlapNormalization,
) -> Result<CorrelationMatrix> {
    let k = schedule.len();
    let mut pairs = Vec::with_capacity(overlaps.len());
    for o in overlaps {
        if o.i >= k || o.j >= k || o.i == o.j {
            return Err(Error::DimensionMismatch(format!(
                "overlap ({}, {}) for {k} comparisons",
                o.i, o.j
            )));
        }
        let r = general_pairwise_correlation(
            o,
            schedule.comparisons[o.i].allocation_ratio,
            schedule.comparisons[o.j].allocation_ratio,
            normalization,
        )?;
        pairs.push((o.i, o.j, r));
    }
    CorrelationMatrix::from_pairs(k, &pairs)
}

/// Rounds a correlation to the two decimals used in printed tables.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

//! Outcomes, comparisons and platform schedules, with the expected Fisher
//! information for each outcome family.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, ensure_probability_open, Error, Result};

/// Effect scale for binary outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryScale {
    RiskDifference,
    LogOddsRatio,
    LogRiskRatio,
}

/// Primary outcome of a comparison and the parameters that determine its
/// effect `θ` and information `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutcomeSpec {
    Continuous {
        mu0: f64,
        mu1: f64,
        sigma0: f64,
        sigma1: f64,
    },
    Binary {
        p0: f64,
        p1: f64,
        scale: BinaryScale,
    },
    /// Exponential survival: `lambda0` is the control hazard per time unit.
    Survival { lambda0: f64, hazard_ratio: f64 },
}

impl OutcomeSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OutcomeSpec::Continuous {
                mu0,
                mu1,
                sigma0,
                sigma1,
            } => {
                ensure_finite("mu0", mu0)?;
                ensure_finite("mu1", mu1)?;
                ensure_positive("sigma0", sigma0)?;
                ensure_positive("sigma1", sigma1)?;
            }
            OutcomeSpec::Binary { p0, p1, .. } => {
                ensure_probability_open("p0", p0)?;
                ensure_probability_open("p1", p1)?;
            }
            OutcomeSpec::Survival {
                lambda0,
                hazard_ratio,
            } => {
                ensure_positive("lambda0", lambda0)?;
                ensure_positive("hazard_ratio", hazard_ratio)?;
            }
        }
        Ok(())
    }

    /// Survival outcomes are tracked by events, the others by patients.
    pub fn is_event_based(&self) -> bool {
        matches!(self, OutcomeSpec::Survival { .. })
    }

    /// Treatment effect `θ`: mean difference, the binary contrast on its
    /// scale, or `log HR`. Negative values favour the experimental arm for
    /// survival and for "smaller is better" continuous outcomes.
    pub fn effect_theta(&self) -> f64 {
        match *self {
            OutcomeSpec::Continuous { mu0, mu1, .. } => mu1 - mu0,
            OutcomeSpec::Binary { p0, p1, scale } => match scale {
                BinaryScale::RiskDifference => p1 - p0,
                BinaryScale::LogOddsRatio => ((p1 * (1.0 - p0)) / (p0 * (1.0 - p1))).ln(),
                BinaryScale::LogRiskRatio => (p1 / p0).ln(),
            },
            OutcomeSpec::Survival { hazard_ratio, .. } => hazard_ratio.ln(),
        }
    }

    /// Expected information `V` about `θ` with `count` control patients
    /// (continuous/binary) or `count` total events (survival) and allocation
    /// ratio `a` (experimental : control).
    ///
    /// Survival uses `V = d·A/(1+A)²`, the null variance of the logrank score.
    pub fn fisher_information(&self, count: f64, a: f64) -> Result<f64> {
        ensure_positive("count", count)?;
        ensure_positive("allocation_ratio", a)?;
        let n0 = count;
        let n1 = a * count;
        let v = match *self {
            OutcomeSpec::Continuous { sigma0, sigma1, .. } => {
                1.0 / (sigma0 * sigma0 / n0 + sigma1 * sigma1 / n1)
            }
            OutcomeSpec::Binary { p0, p1, scale } => {
                let (q0, q1) = (1.0 - p0, 1.0 - p1);
                match scale {
                    BinaryScale::RiskDifference => 1.0 / (p0 * q0 / n0 + p1 * q1 / n1),
                    BinaryScale::LogOddsRatio => 1.0 / (1.0 / (n0 * p0 * q0) + 1.0 / (n1 * p1 * q1)),
                    BinaryScale::LogRiskRatio => 1.0 / (q0 / (n0 * p0) + q1 / (n1 * p1)),
                }
            }
            OutcomeSpec::Survival { .. } => count * a / ((1.0 + a) * (1.0 + a)),
        };
        Ok(v)
    }

    /// Mean of the Z statistic under the targeted effect, `θ√V`.
    pub fn noncentrality(&self, count: f64, a: f64) -> Result<f64> {
        Ok(self.effect_theta() * self.fisher_information(count, a)?.sqrt())
    }
}

/// Size of a comparison's concurrent control group at its final analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlTarget {
    /// Control-arm events `e₀` (survival).
    Events(u64),
    /// Control-arm patients `n₀` (continuous and binary).
    Patients(u64),
}

impl ControlTarget {
    pub fn count(&self) -> u64 {
        match *self {
            ControlTarget::Events(n) | ControlTarget::Patients(n) => n,
        }
    }
}

/// One experimental-versus-control comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    pub id: String,
    /// One-sided significance level.
    pub alpha: f64,
    /// Pairwise power under the targeted effect.
    pub power: f64,
    /// Experimental : control allocation ratio `A`.
    pub allocation_ratio: f64,
    pub outcome: OutcomeSpec,
    /// Platform time at which the experimental arm opens.
    pub open_time: f64,
    pub target: ControlTarget,
    /// Fixed accrual window; `None` accrues until the final analysis.
    pub accrual_duration: Option<f64>,
}

impl ComparisonSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDesign(format!("comparison {}: {msg}", self.id)));
        if self.id.is_empty() {
            return Err(Error::InvalidDesign("comparison id is empty".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad(format!("alpha {} outside (0, 0.5)", self.alpha));
        }
        if !(self.power > 0.5 && self.power < 1.0) {
            return bad(format!("power {} outside (0.5, 1)", self.power));
        }
        if !(self.allocation_ratio > 0.0 && self.allocation_ratio.is_finite()) {
            return bad(format!("allocation ratio {} must be positive", self.allocation_ratio));
        }
        if !(self.open_time >= 0.0 && self.open_time.is_finite()) {
            return bad(format!("open time {} must be >= 0", self.open_time));
        }
        if let Some(d) = self.accrual_duration {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("accrual duration {d} must be positive"));
            }
        }
        if self.target.count() == 0 {
            return bad("control target must be at least 1".into());
        }
        match (self.outcome.is_event_based(), self.target) {
            (true, ControlTarget::Events(_)) | (false, ControlTarget::Patients(_)) => {}
            (true, _) => return bad("survival comparisons need an e0 event target".into()),
            (false, _) => return bad("continuous and binary comparisons need an n0 target".into()),
        }
        self.outcome
            .validate()
            .map_err(|e| Error::InvalidDesign(format!("comparison {}: {e}", self.id)))
    }
}

/// How the accrual rate is shared between arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccrualModel {
    /// Each comparison randomises at `accrual_rate` patients per time unit:
    /// the control arm accrues at `accrual_rate / (1 + A)` (A of the first
    /// comparison) and experimental arm `k` at `A_k` times that, whatever the
    /// number of open arms.
    #[default]
    PerComparison,
    /// The whole platform randomises at `accrual_rate`, split over the open
    /// arms with weights 1 (control) and `A_k`.
    Platform,
}

/// Accrual rate plus the comparisons sharing one control arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSchedule {
    pub accrual_rate: f64,
    #[serde(default)]
    pub accrual_model: AccrualModel,
    pub comparisons: Vec<ComparisonSpec>,
}

impl PlatformSchedule {
    pub fn new(accrual_rate: f64, accrual_model: AccrualModel, comparisons: Vec<ComparisonSpec>) -> Result<Self> {
        let s = Self {
            accrual_rate,
            accrual_model,
            comparisons,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.accrual_rate > 0.0 && self.accrual_rate.is_finite()) {
            return Err(Error::InvalidDesign(format!(
                "accrual rate {} must be positive",
                self.accrual_rate
            )));
        }
        if self.comparisons.is_empty() {
            return Err(Error::InvalidDesign("at least one comparison is required".into()));
        }
        if self.comparisons.len() > 64 {
            return Err(Error::InvalidDesign("at most 64 comparisons are supported".into()));
        }
        for (i, c) in self.comparisons.iter().enumerate() {
            c.validate()?;
            if self.comparisons[..i].iter().any(|o| o.id == c.id) {
                return Err(Error::InvalidDesign(format!("duplicate comparison id {}", c.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.comparisons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comparisons.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.comparisons.iter().position(|c| c.id == id)
    }

    /// Index of the earliest-opening comparison (first listed on ties).
    pub fn first_comparison(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.comparisons.iter().enumerate() {
            if c.open_time < self.comparisons[best].open_time {
                best = i;
            }
        }
        best
    }

    /// Control-arm accrual rate when the arms in `open` are recruiting.
    pub fn control_rate(&self, open: impl Iterator<Item = usize>) -> f64 {
        match self.accrual_model {
            AccrualModel::PerComparison => {
                let a = self.comparisons[self.first_comparison()].allocation_ratio;
                self.accrual_rate / (1.0 + a)
            }
            AccrualModel::Platform => {
                let weights: f64 = open.map(|k| self.comparisons[k].allocation_ratio).sum();
                self.accrual_rate / (1.0 + weights)
            }
        }
    }

    /// Common control hazard of the survival comparisons.
    pub fn control_hazard(&self) -> Result<f64> {
        let mut hazard = None;
        for c in &self.comparisons {
            match c.outcome {
                OutcomeSpec::Survival { lambda0, .. } => match hazard {
                    None => hazard = Some(lambda0),
                    Some(h) if (h - lambda0).abs() > 1e-12 => {
                        return Err(Error::InvalidDesign(format!(
                            "comparisons disagree on the control hazard ({h} vs {lambda0})"
                        )))
                    }
                    Some(_) => {}
                },
                _ => {
                    return Err(Error::InvalidDesign(format!(
                        "comparison {} is not a survival comparison",
                        c.id
                    )))
                }
            }
        }
        hazard.ok_or_else(|| Error::InvalidDesign("no survival comparisons".into()))
    }
}

/// Control-arm overlap between comparisons `i` and `j`: shared observations
/// (or events) and each comparison's control total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapInfo {
    pub i: usize,
    pub j: usize,
    pub shared: f64,
    pub total_i: f64,
    pub total_j: f64,
}

impl OverlapInfo {
    pub fn new(i: usize, j: usize, shared: f64, total_i: f64, total_j: f64) -> Result<Self> {
        let o = Self {
            i,
            j,
            shared,
            total_i,
            total_j,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_i >= 1.0 && self.total_j >= 1.0) {
            return Err(Error::InvalidDesign(format!(
                "control totals ({}, {}) must be at least 1",
                self.total_i, self.total_j
            )));
        }
        if !(self.shared >= 0.0 && self.shared <= self.total_i.min(self.total_j) + 1e-9) {
            return Err(Error::InvalidDesign(format!(
                "shared count {} outside [0, min({}, {})]",
                self.shared, self.total_i, self.total_j
            )));
        }
        Ok(())
    }
}

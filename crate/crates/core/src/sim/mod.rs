//! Monte Carlo simulation of platform trials with a shared control arm and
//! exponential survival.

pub mod engine;
pub mod events;
pub mod logrank;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CorrelationMatrix;
use crate::model::{OutcomeSpec, PlatformSchedule};
use crate::numerics::phi_inv;

pub use engine::{
    replicate_rng, run_single_replicate, simulate_trial, Arm, PatientRecord, ReplicateResult, Trial,
};
pub use events::{expected_events, predict_timeline, Timeline};
pub use logrank::{logrank_score, LogrankScore, SurvivalRecord};

/// Treatment effect used to generate an experimental arm's data.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    #[default]
    Null,
    /// The hazard ratio the comparison was designed for.
    Alternative,
    HazardRatio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalProcess {
    /// Evenly spaced arrivals at the current rate.
    #[default]
    Uniform,
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub schedule: PlatformSchedule,
    pub truth: Vec<Truth>,
    pub replications: usize,
    pub seed: u64,
    pub arrivals: ArrivalProcess,
    /// `z_{1−αₖ}` per comparison.
    critical_values: Vec<f64>,
}

pub const DEFAULT_REPLICATIONS: usize = 10_000;

impl SimConfig {
    pub fn new(schedule: PlatformSchedule, truth: Vec<Truth>, replications: usize, seed: u64) -> Result<Self> {
        schedule.validate()?;
        if truth.len() != schedule.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} truths for {} comparisons",
                truth.len(),
                schedule.len()
            )));
        }
        if replications == 0 {
            return Err(Error::InvalidDesign("at least one replication is required".into()));
        }
        for c in &schedule.comparisons {
            if !matches!(c.outcome, OutcomeSpec::Survival { .. }) {
                return Err(Error::InvalidDesign(format!(
                    "comparison {}: only survival outcomes are simulated",
                    c.id
                )));
            }
        }
        schedule.control_hazard()?;
        for t in &truth {
            if let Truth::HazardRatio(hr) = *t {
                crate::error::ensure_positive("hazard_ratio", hr)?;
            }
        }
        let critical_values = schedule.comparisons.iter().map(|c| phi_inv(1.0 - c.alpha)).collect();
        Ok(Self { schedule, truth, replications, seed, arrivals: ArrivalProcess::Uniform, critical_values })
    }

    /// Same truth for every comparison.
    pub fn uniform(schedule: PlatformSchedule, truth: Truth, replications: usize, seed: u64) -> Result<Self> {
        let n = schedule.len();
        Self::new(schedule, vec![truth; n], replications, seed)
    }

    pub fn with_arrivals(mut self, arrivals: ArrivalProcess) -> Self {
        self.arrivals = arrivals;
        self
    }

    /// Hazard ratio generating comparison `k`'s experimental arm.
    pub fn true_hazard_ratio(&self, k: usize) -> f64 {
        match self.truth[k] {
            Truth::Null => 1.0,
            Truth::Alternative => match self.schedule.comparisons[k].outcome {
                OutcomeSpec::Survival { hazard_ratio, .. } => hazard_ratio,
                _ => 1.0,
            },
            Truth::HazardRatio(hr) => hr,
        }
    }

    pub fn is_null(&self, k: usize) -> bool {
        self.true_hazard_ratio(k) == 1.0
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn proportion(successes: usize, n: usize) -> Self {
        let p = successes as f64 / n as f64;
        Self { value: p, se: (p * (1.0 - p) / n as f64).sqrt() }
    }

    pub fn mean(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let m = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { value: m, se: (var / n).sqrt() }
    }

    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.value - target).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub id: String,
    pub null: bool,
    pub rejection_rate: Estimate,
    pub mean_z: f64,
    pub sd_z: f64,
    pub mean_analysis_time: f64,
    pub mean_total_events: f64,
    pub control_events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub i: usize,
    pub j: usize,
    pub correlation: Estimate,
    pub shared_events: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub replications: usize,
    pub seed: u64,
    pub comparisons: Vec<ComparisonSummary>,
    /// Any null comparison rejected; `None` without null comparisons.
    pub fwer: Option<Estimate>,
    /// Any non-null comparison rejected.
    pub disjunctive_power: Option<Estimate>,
    /// Every non-null comparison rejected.
    pub conjunctive_power: Option<Estimate>,
    pub pairs: Vec<PairSummary>,
}

impl SimSummary {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairSummary> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }

    /// Empirical correlation matrix; may fail the PSD check for small runs.
    pub fn correlation_matrix(&self) -> Result<CorrelationMatrix> {
        let pairs: Vec<_> = self.pairs.iter().map(|p| (p.i, p.j, p.correlation.value)).collect();
        CorrelationMatrix::from_pairs(self.comparisons.len(), &pairs)
    }
}

/// Pearson correlation.
pub fn empirical_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::DimensionMismatch("need at least two pairs".into()));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance("constant input to correlation"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Shared control events between comparisons `i` and `j` in one replicate;
/// `i == j` gives the comparison's own control events.
pub fn shared_control_events(rep: &ReplicateResult, i: usize, j: usize) -> u64 {
    if i == j {
        return rep.control_events[i];
    }
    rep.shared[ReplicateResult::pair_index(rep.z.len(), i, j)]
}

/// Indices of the control patients concurrent with comparison `k`.
pub fn concurrent_control_set(trial: &Trial, k: usize) -> Vec<usize> {
    trial
        .patients
        .iter()
        .enumerate()
        .filter(|(_, p)| trial.is_concurrent_control(p, k))
        .map(|(i, _)| i)
        .collect()
}

/// Runs every replicate, in parallel on the current rayon pool. Replicate
/// `r` draws from its own substream, so results do not depend on scheduling.
pub fn simulate_replicates(config: &SimConfig) -> Result<Vec<ReplicateResult>> {
    let results: Vec<Result<ReplicateResult>> = (0..config.replications)
        .into_par_iter()
        .map(|r| run_single_replicate(config, &mut replicate_rng(config.seed, r)))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|e| Error::Replicate { index, source: Box::new(e) }))
        .collect()
}

/// Reduces replicate results, in replicate order.
pub fn summarize(config: &SimConfig, reps: &[ReplicateResult]) -> Result<SimSummary> {
    let k = config.schedule.len();
    let n = reps.len();
    if n == 0 {
        return Err(Error::InvalidDesign("no replicates to summarise".into()));
    }
    let z: Vec<Vec<f64>> = (0..k).map(|i| reps.iter().map(|r| r.z[i]).collect()).collect();
    let comparisons = (0..k)
        .map(|i| {
            let zi = Estimate::mean(&z[i]);
            ComparisonSummary {
                id: config.schedule.comparisons[i].id.clone(),
                null: config.is_null(i),
                rejection_rate: Estimate::proportion(reps.iter().filter(|r| r.rejected[i]).count(), n),
                mean_z: zi.value,
                sd_z: zi.se * (n as f64).sqrt(),
                mean_analysis_time: reps.iter().map(|r| r.analysis_times[i]).sum::<f64>() / n as f64,
                mean_total_events: reps.iter().map(|r| r.total_events[i] as f64).sum::<f64>() / n as f64,
                control_events: config.schedule.comparisons[i].target.count(),
            }
        })
        .collect();

    let nulls: Vec<usize> = (0..k).filter(|&i| config.is_null(i)).collect();
    let alts: Vec<usize> = (0..k).filter(|&i| !config.is_null(i)).collect();
    let rate = |set: &[usize], all: bool| -> Option<Estimate> {
        if set.is_empty() {
            return None;
        }
        let hits = reps
            .iter()
            .filter(|r| if all { set.iter().all(|&i| r.rejected[i]) } else { set.iter().any(|&i| r.rejected[i]) })
            .count();
        Some(Estimate::proportion(hits, n))
    };

    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let r = if n >= 2 { empirical_correlation(&z[i], &z[j]).unwrap_or(0.0) } else { 0.0 };
            let shared: Vec<f64> = reps.iter().map(|rep| shared_control_events(rep, i, j) as f64).collect();
            pairs.push(PairSummary {
                i,
                j,
                correlation: Estimate { value: r, se: (1.0 - r * r) / ((n as f64 - 1.0).max(1.0)).sqrt() },
                shared_events: Estimate::mean(&shared),
            });
        }
    }

    Ok(SimSummary {
        replications: n,
        seed: config.seed,
        comparisons,
        fwer: rate(&nulls, false),
        disjunctive_power: rate(&alts, false),
        conjunctive_power: rate(&alts, true),
        pairs,
    })
}

pub fn simulate_platform(config: &SimConfig) -> Result<SimSummary> {
    let reps = simulate_replicates(config)?;
    summarize(config, &reps)
}

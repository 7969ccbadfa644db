//! Expected event counts and the deterministic timeline they imply.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OverlapInfo, PlatformSchedule};
use crate::numerics::find_root_monotone;

/// Expected events by time `t` among patients entering at rate `r` during
/// `window`, each with an exponential event time of hazard `lambda`:
/// `r ∫ (1 − e^{−λ(t−s)}) ds` over entry times `s ∈ [a₀, min(a₁, t)]`.
pub fn expected_events(rate: f64, lambda: f64, window: (f64, f64), t: f64) -> f64 {
    let (a0, a1) = window;
    let u = a1.min(t);
    if !(u > a0) || rate <= 0.0 {
        return 0.0;
    }
    if lambda.is_infinite() {
        return rate * (u - a0);
    }
    // e^{−λ(t−u)} − e^{−λ(t−a0)} = e^{−λ(t−u)} (1 − e^{−λ(u−a0)})
    let decay = (-lambda * (t - u)).exp() * -(-lambda * (u - a0)).exp_m1();
    rate * ((u - a0) - decay / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Segment {
    start: f64,
    end: f64,
    rate: f64,
}

/// Predicted analysis times and control-arm counts for a schedule, with
/// patients replaced by their expected flow.
///
/// Survival comparisons count control events; continuous and binary ones
/// count control patients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    /// `None` when counting patients.
    hazard: Option<f64>,
    segments: Vec<Segment>,
    pub open_times: Vec<f64>,
    /// End of each comparison's concurrent-control window.
    pub close_times: Vec<f64>,
    pub analysis_times: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Timeline {
    fn lambda(&self) -> f64 {
        self.hazard.unwrap_or(f64::INFINITY)
    }

    fn count_in(&self, window: (f64, f64), t: f64) -> f64 {
        let lambda = self.lambda();
        self.segments
            .iter()
            .map(|s| expected_events(s.rate, lambda, (window.0.max(s.start), window.1.min(s.end)), t))
            .sum()
    }

    /// Expected concurrent-control count of comparison `k` by time `t`,
    /// frozen at its analysis.
    pub fn control_count_at(&self, k: usize, t: f64) -> f64 {
        let t = t.min(self.analysis_times[k]);
        self.count_in((self.open_times[k], self.close_times[k]), t)
    }

    /// Expected control events (or patients) counted by both `i` and `j` by
    /// time `t`.
    pub fn shared_at(&self, i: usize, j: usize, t: f64) -> f64 {
        let t = t.min(self.analysis_times[i]).min(self.analysis_times[j]);
        let lo = self.open_times[i].max(self.open_times[j]);
        let hi = self.close_times[i].min(self.close_times[j]);
        self.count_in((lo, hi), t)
    }

    pub fn shared(&self, i: usize, j: usize) -> f64 {
        self.shared_at(i, j, f64::INFINITY)
    }

    /// Latest analysis time.
    pub fn duration(&self) -> f64 {
        self.analysis_times.iter().copied().fold(0.0, f64::max)
    }

    /// Pairwise overlaps with expected shared counts, for every pair.
    pub fn overlaps(&self) -> Vec<OverlapInfo> {
        let k = self.analysis_times.len();
        let mut out = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let shared = self.shared(i, j).min(self.targets[i]).min(self.targets[j]);
                out.push(OverlapInfo {
                    i,
                    j,
                    shared,
                    total_i: self.targets[i],
                    total_j: self.targets[j],
                });
            }
        }
        out
    }
}

/// Steps through the schedule, finding each analysis as the moment the
/// expected concurrent-control count reaches the comparison's target.
pub fn predict_timeline(schedule: &PlatformSchedule) -> Result<Timeline> {
    schedule.validate()?;
    let k = schedule.len();
    let event_based = schedule.comparisons[0].outcome.is_event_based();
    if schedule.comparisons.iter().any(|c| c.outcome.is_event_based() != event_based) {
        return Err(Error::InvalidDesign(
            "timeline prediction needs all comparisons to share an outcome family".into(),
        ));
    }
    let hazard = if event_based { Some(schedule.control_hazard()?) } else { None };

    let mut tl = Timeline {
        hazard,
        segments: Vec::new(),
        open_times: schedule.comparisons.iter().map(|c| c.open_time).collect(),
        close_times: vec![f64::INFINITY; k],
        analysis_times: vec![f64::INFINITY; k],
        targets: schedule.comparisons.iter().map(|c| c.target.count() as f64).collect(),
    };
    let accrual_end: Vec<f64> = schedule
        .comparisons
        .iter()
        .map(|c| c.accrual_duration.map_or(f64::INFINITY, |d| c.open_time + d))
        .collect();

    let mut now = tl.open_times.iter().copied().fold(f64::INFINITY, f64::min);
    let mut analysed = vec![false; k];
    let mut closed = vec![false; k];

    while analysed.iter().any(|a| !a) {
        let open: Vec<usize> = (0..k).filter(|&i| tl.open_times[i] <= now && !closed[i]).collect();
        let rate = if open.is_empty() { 0.0 } else { schedule.control_rate(open.iter().copied()) };
        if let Some(last) = tl.segments.last_mut() {
            last.end = now;
        }
        tl.segments.push(Segment { start: now, end: f64::INFINITY, rate });

        let next_boundary = (0..k)
            .filter_map(|i| {
                if tl.open_times[i] > now {
                    Some(tl.open_times[i])
                } else if !closed[i] && accrual_end[i] > now {
                    Some(accrual_end[i])
                } else {
                    None
                }
            })
            .fold(f64::INFINITY, f64::min);

        // earliest analysis reachable before the schedule changes
        let mut next_analysis: Option<(usize, f64)> = None;
        for i in (0..k).filter(|&i| !analysed[i] && tl.open_times[i] <= now) {
            let window = (tl.open_times[i], tl.close_times[i].min(accrual_end[i]));
            let target = tl.targets[i];
            let f = |t: f64| tl.count_in(window, t) - target;
            let hi = if next_boundary.is_finite() {
                if f(next_boundary) < 0.0 {
                    continue;
                }
                next_boundary
            } else {
                let limit = if window.1.is_finite() || rate == 0.0 {
                    // no further entrants: the count tends to the number accrued
                    tl.count_in((window.0, window.1.min(now)), f64::INFINITY)
                } else {
                    f64::INFINITY
                };
                if limit < target {
                    return Err(Error::UnreachableTarget {
                        id: schedule.comparisons[i].id.clone(),
                        target: target as u64,
                    });
                }
                let mut step = 1.0;
                while f(now + step) < 0.0 {
                    step *= 2.0;
                    if step > 1e12 {
                        return Err(Error::UnreachableTarget {
                            id: schedule.comparisons[i].id.clone(),
                            target: target as u64,
                        });
                    }
                }
                now + step
            };
            let t = if f(now) >= 0.0 { now } else { find_root_monotone(f, now, hi, 1e-12)? };
            if next_analysis.is_none_or(|(_, best)| t < best) {
                next_analysis = Some((i, t));
            }
        }

        match next_analysis {
            Some((i, t)) if t <= next_boundary => {
                now = t;
                analysed[i] = true;
                tl.analysis_times[i] = t;
                if !closed[i] {
                    closed[i] = true;
                    tl.close_times[i] = t;
                }
            }
            _ if next_boundary.is_finite() => {
                now = next_boundary;
                for i in 0..k {
                    if !closed[i] && tl.open_times[i] <= now && accrual_end[i] <= now {
                        closed[i] = true;
                        tl.close_times[i] = accrual_end[i];
                    }
                }
            }
            _ => {
                let i = (0..k).find(|&i| !analysed[i]).unwrap_or(0);
                return Err(Error::UnreachableTarget {
                    id: schedule.comparisons[i].id.clone(),
                    target: tl.targets[i] as u64,
                });
            }
        }
    }
    if let Some(last) = tl.segments.last_mut() {
        last.end = now;
    }
    Ok(tl)
}

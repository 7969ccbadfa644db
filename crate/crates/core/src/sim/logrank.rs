//! Two-sample logrank statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One patient in a two-arm comparison, on the platform clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub experimental: bool,
    pub entry_time: f64,
    /// Latent event time on the platform clock (entry plus survival time).
    pub event_time: f64,
}

impl SurvivalRecord {
    /// Follow-up time and event indicator under administrative censoring
    /// at `cutoff`. `None` if the patient had not entered by then.
    pub fn observed(&self, cutoff: f64) -> Option<(f64, bool)> {
        if self.entry_time >= cutoff {
            return None;
        }
        let event = self.event_time <= cutoff;
        let end = if event { self.event_time } else { cutoff };
        Some((end - self.entry_time, event))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogrankScore {
    /// Observed minus expected events in the experimental arm.
    pub s: f64,
    /// Hypergeometric variance of `s`.
    pub v: f64,
    /// `−s/√v`: positive values favour the experimental arm.
    pub z: f64,
    pub events: u64,
}

/// Logrank score for the records, censored at `cutoff`. `scratch` is reused
/// across calls to avoid reallocating.
pub fn logrank_score_with(
    records: &[SurvivalRecord],
    cutoff: f64,
    scratch: &mut Vec<(f64, bool, bool)>,
) -> Result<LogrankScore> {
    scratch.clear();
    let (mut n0, mut n1) = (0.0f64, 0.0f64);
    for r in records {
        if let Some((time, event)) = r.observed(cutoff) {
            scratch.push((time, !event, r.experimental));
            if r.experimental {
                n1 += 1.0;
            } else {
                n0 += 1.0;
            }
        }
    }
    // deaths sort before censorings at the same time
    scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let (mut s, mut v, mut events) = (0.0, 0.0, 0u64);
    let mut i = 0;
    while i < scratch.len() {
        let t = scratch[i].0;
        let (mut d0, mut d1) = (0.0, 0.0);
        let mut j = i;
        while j < scratch.len() && scratch[j].0 == t && !scratch[j].1 {
            if scratch[j].2 {
                d1 += 1.0;
            } else {
                d0 += 1.0;
            }
            j += 1;
        }
        let d = d0 + d1;
        if d > 0.0 {
            let n = n0 + n1;
            s += d1 - d * n1 / n;
            if n > 1.0 {
                v += d * (n1 / n) * (n0 / n) * (n - d) / (n - 1.0);
            }
            events += d as u64;
            n0 -= d0;
            n1 -= d1;
        }
        while j < scratch.len() && scratch[j].0 == t {
            if scratch[j].2 {
                n1 -= 1.0;
            } else {
                n0 -= 1.0;
            }
            j += 1;
        }
        i = j;
    }
    if events == 0 {
        return Err(Error::ZeroVariance("no events before the cutoff"));
    }
    if v <= 0.0 {
        return Err(Error::ZeroVariance("events occurred in one arm only"));
    }
    Ok(LogrankScore { s, v, z: -s / v.sqrt(), events })
}

pub fn logrank_score(records: &[SurvivalRecord], cutoff: f64) -> Result<LogrankScore> {
    logrank_score_with(records, cutoff, &mut Vec::new())
}

//! Patient-level simulation of one platform trial.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::logrank::{logrank_score_with, SurvivalRecord};
use super::{ArrivalProcess, SimConfig};
use crate::error::{Error, Result};

/// Arm a patient was randomised to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arm {
    Control,
    /// Experimental arm of comparison `k`.
    Experimental(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub arm: Arm,
    pub entry_time: f64,
    /// Latent event time on the platform clock.
    pub event_time: f64,
}

/// Everything that happened in one simulated trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub patients: Vec<PatientRecord>,
    pub open_times: Vec<f64>,
    /// End of each comparison's concurrent-control window.
    pub close_times: Vec<f64>,
    pub analysis_times: Vec<f64>,
}

impl Trial {
    /// Whether control patient `p` is a concurrent control for comparison `k`.
    pub fn is_concurrent_control(&self, p: &PatientRecord, k: usize) -> bool {
        p.arm == Arm::Control && p.entry_time >= self.open_times[k] && p.entry_time < self.close_times[k]
    }

    /// Records entering comparison `k`'s analysis: its experimental arm plus
    /// its concurrent controls.
    pub fn comparison_records(&self, k: usize) -> Vec<SurvivalRecord> {
        let mut out = Vec::new();
        self.comparison_records_into(k, &mut out);
        out
    }

    fn comparison_records_into(&self, k: usize, out: &mut Vec<SurvivalRecord>) {
        out.clear();
        out.extend(
            self.patients
                .iter()
                .filter(|p| p.arm == Arm::Experimental(k) || self.is_concurrent_control(p, k))
                .map(|p| SurvivalRecord {
                    experimental: p.arm != Arm::Control,
                    entry_time: p.entry_time,
                    event_time: p.event_time,
                }),
        );
    }

    /// Sorted event times of comparison `k`'s concurrent controls.
    pub fn control_event_times(&self, k: usize) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .patients
            .iter()
            .filter(|p| self.is_concurrent_control(p, k))
            .map(|p| p.event_time)
            .collect();
        t.sort_unstable_by(f64::total_cmp);
        t
    }

    /// Control events counted by both comparisons: shared concurrent controls
    /// with events before both analyses.
    pub fn shared_events(&self, i: usize, j: usize) -> u64 {
        let cutoff = self.analysis_times[i].min(self.analysis_times[j]);
        self.patients
            .iter()
            .filter(|p| {
                p.event_time <= cutoff && self.is_concurrent_control(p, i) && self.is_concurrent_control(p, j)
            })
            .count() as u64
    }
}

#[derive(Debug, Clone, Copy)]
struct PendingEvent {
    time: f64,
    members: u64,
}

impl PartialEq for PendingEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for PendingEvent {}
impl PartialOrd for PendingEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PendingEvent {
    // min-heap on time
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.members.cmp(&self.members))
    }
}

/// Arrival clock on the cumulative-intensity scale, so rate changes between
/// arrivals are handled exactly.
struct Arrivals {
    process: ArrivalProcess,
    clock: f64,
    intensity: f64,
    rate: f64,
    next: f64,
}

impl Arrivals {
    fn new(process: ArrivalProcess, rng: &mut ChaCha8Rng) -> Self {
        let next = match process {
            ArrivalProcess::Uniform => 0.5,
            ArrivalProcess::Poisson => rng.sample(Exp1),
        };
        Self { process, clock: 0.0, intensity: 0.0, rate: 0.0, next }
    }

    fn set_rate(&mut self, now: f64, rate: f64) {
        self.intensity += self.rate * (now - self.clock);
        self.clock = now;
        self.rate = rate;
    }

    fn next_time(&self) -> f64 {
        if self.rate > 0.0 {
            self.clock + (self.next - self.intensity) / self.rate
        } else {
            f64::INFINITY
        }
    }

    fn advance(&mut self, now: f64, rng: &mut ChaCha8Rng) {
        self.intensity = self.next;
        self.clock = now;
        self.next += match self.process {
            ArrivalProcess::Uniform => 1.0,
            ArrivalProcess::Poisson => rng.sample::<f64, _>(Exp1),
        };
    }
}

/// Substream for replicate `index`.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Simulates patients until every comparison reaches its control-event target.
pub fn simulate_trial(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let schedule = &config.schedule;
    let k = schedule.len();
    let lambda0 = schedule.control_hazard()?;
    let hazards: Vec<f64> = (0..k).map(|i| lambda0 * config.true_hazard_ratio(i)).collect();
    let targets: Vec<u64> = schedule.comparisons.iter().map(|c| c.target.count()).collect();
    let ratios: Vec<f64> = schedule.comparisons.iter().map(|c| c.allocation_ratio).collect();
    let open_times: Vec<f64> = schedule.comparisons.iter().map(|c| c.open_time).collect();
    let accrual_end: Vec<f64> = schedule
        .comparisons
        .iter()
        .map(|c| c.accrual_duration.map_or(f64::INFINITY, |d| c.open_time + d))
        .collect();

    let mut boundaries: Vec<f64> = open_times.iter().chain(accrual_end.iter()).copied().filter(|t| t.is_finite()).collect();
    boundaries.sort_unstable_by(f64::total_cmp);
    boundaries.dedup();
    let mut next_boundary = 0;

    let mut open: u64 = 0;
    let mut closed = vec![false; k];
    let mut close_times = vec![f64::INFINITY; k];
    let mut analysis_times = vec![f64::INFINITY; k];
    let mut counts = vec![0u64; k];
    let mut remaining = k;

    let mut heap = BinaryHeap::new();
    let mut patients = Vec::new();
    let mut arrivals = Arrivals::new(config.arrivals, rng);

    let total_rate = |open: u64| -> f64 {
        if open == 0 {
            return 0.0;
        }
        let members = (0..k).filter(|&i| open >> i & 1 == 1);
        let weights: f64 = members.clone().map(|i| ratios[i]).sum();
        schedule.control_rate(members) * (1.0 + weights)
    };

    while remaining > 0 {
        let tb = boundaries.get(next_boundary).copied().unwrap_or(f64::INFINITY);
        let te = heap.peek().map_or(f64::INFINITY, |e: &PendingEvent| e.time);
        let ta = arrivals.next_time();
        let now = tb.min(te).min(ta);
        if now.is_infinite() {
            let i = analysis_times.iter().position(|t| t.is_infinite()).unwrap_or(0);
            return Err(Error::UnreachableTarget { id: schedule.comparisons[i].id.clone(), target: targets[i] });
        }
        if tb <= now {
            next_boundary += 1;
            for i in 0..k {
                if open_times[i] == now && !closed[i] {
                    open |= 1 << i;
                }
                if accrual_end[i] == now && !closed[i] {
                    open &= !(1 << i);
                    closed[i] = true;
                    close_times[i] = now;
                }
            }
            arrivals.set_rate(now, total_rate(open));
        } else if te <= now {
            let ev = heap.pop().expect("peeked");
            let mut changed = false;
            let mut members = ev.members;
            while members != 0 {
                let i = members.trailing_zeros() as usize;
                members &= members - 1;
                if analysis_times[i].is_finite() {
                    continue;
                }
                counts[i] += 1;
                if counts[i] == targets[i] {
                    analysis_times[i] = now;
                    remaining -= 1;
                    if !closed[i] {
                        closed[i] = true;
                        close_times[i] = now;
                        open &= !(1 << i);
                        changed = true;
                    }
                }
            }
            if changed {
                arrivals.set_rate(now, total_rate(open));
            }
        } else {
            arrivals.advance(now, rng);
            // control weight 1, open experimental arm i weight A_i
            let weights: f64 = 1.0 + (0..k).filter(|&i| open >> i & 1 == 1).map(|i| ratios[i]).sum::<f64>();
            let mut u = rng.random::<f64>() * weights;
            let mut arm = Arm::Control;
            if u >= 1.0 {
                u -= 1.0;
                let mut last = None;
                for i in (0..k).filter(|&i| open >> i & 1 == 1) {
                    last = Some(i);
                    if u < ratios[i] {
                        break;
                    }
                    u -= ratios[i];
                }
                arm = Arm::Experimental(last.expect("an arm is open"));
            }
            let hazard = match arm {
                Arm::Control => lambda0,
                Arm::Experimental(i) => hazards[i],
            };
            let survival: f64 = rng.sample::<f64, _>(Exp1) / hazard;
            let event_time = now + survival;
            if arm == Arm::Control {
                heap.push(PendingEvent { time: event_time, members: open });
            }
            patients.push(PatientRecord { arm, entry_time: now, event_time });
        }
    }

    Ok(Trial { patients, open_times, close_times, analysis_times })
}

/// Summary of one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    /// Logrank Z per comparison, positive favouring the experimental arm.
    pub z: Vec<f64>,
    pub rejected: Vec<bool>,
    pub analysis_times: Vec<f64>,
    pub total_events: Vec<u64>,
    pub control_events: Vec<u64>,
    /// Shared control events for pairs `(0,1), (0,2), …, (1,2), …`.
    pub shared: Vec<u64>,
}

impl ReplicateResult {
    pub fn pair_index(k: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * k - i - 1) / 2 + (j - i - 1)
    }
}

pub fn run_single_replicate(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<ReplicateResult> {
    let trial = simulate_trial(config, rng)?;
    let k = config.schedule.len();
    let mut z = Vec::with_capacity(k);
    let mut rejected = Vec::with_capacity(k);
    let mut total_events = Vec::with_capacity(k);
    let mut control_events = Vec::with_capacity(k);
    let mut records = Vec::new();
    let mut scratch = Vec::new();
    for i in 0..k {
        trial.comparison_records_into(i, &mut records);
        let lr = logrank_score_with(&records, trial.analysis_times[i], &mut scratch)?;
        z.push(lr.z);
        rejected.push(lr.z > config.critical_values[i]);
        total_events.push(lr.events);
        control_events.push(config.schedule.comparisons[i].target.count());
    }
    let mut shared = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            shared.push(trial.shared_events(i, j));
        }
    }
    Ok(ReplicateResult { z, rejected, analysis_times: trial.analysis_times, total_events, control_events, shared })
}

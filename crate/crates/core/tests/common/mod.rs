//! Published three-arm design values shared by the integration tests.
#![allow(dead_code)]

use trialkit_core::{
    AccrualModel, ComparisonSpec, ControlTarget, OutcomeSpec, PlatformSchedule, SimConfig, Truth,
};

pub const RATIOS: [f64; 3] = [0.5, 1.0, 2.0];
pub const CONTROL_EVENTS: [u64; 3] = [401, 264, 196];
pub const OFFSETS: [f64; 11] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0];

/// Shared control events by ratio, then offset.
pub const SHARED: [[f64; 11]; 3] = [
    [401.0, 349.0, 298.0, 249.0, 204.0, 161.0, 122.0, 88.0, 57.0, 33.0, 14.0],
    [264.0, 226.0, 190.0, 155.0, 123.0, 94.0, 68.0, 45.0, 26.0, 12.0, 3.0],
    [196.0, 170.0, 144.0, 121.0, 98.0, 77.0, 57.0, 41.0, 26.0, 15.0, 6.0],
];

/// Correlation printed next to the shared counts.
pub const RHO: [[f64; 11]; 3] = [
    [0.33, 0.29, 0.25, 0.20, 0.17, 0.13, 0.10, 0.07, 0.05, 0.03, 0.01],
    [0.50, 0.43, 0.36, 0.29, 0.23, 0.18, 0.13, 0.09, 0.05, 0.02, 0.00],
    [0.66, 0.57, 0.49, 0.41, 0.33, 0.26, 0.19, 0.14, 0.09, 0.05, 0.02],
];

pub const FWER: [[f64; 11]; 3] = [
    [0.047, 0.048, 0.048, 0.048, 0.049, 0.049, 0.049, 0.049, 0.049, 0.049, 0.050],
    [0.045, 0.046, 0.047, 0.048, 0.048, 0.049, 0.049, 0.049, 0.049, 0.049, 0.050],
    [0.043, 0.044, 0.045, 0.046, 0.047, 0.048, 0.049, 0.049, 0.049, 0.049, 0.049],
];

pub const DISJUNCTIVE: [[f64; 11]; 3] = [
    [0.977, 0.979, 0.980, 0.983, 0.984, 0.986, 0.987, 0.988, 0.988, 0.989, 0.990],
    [0.968, 0.972, 0.975, 0.979, 0.982, 0.984, 0.986, 0.987, 0.988, 0.989, 0.990],
    [0.956, 0.963, 0.968, 0.972, 0.977, 0.980, 0.983, 0.985, 0.987, 0.988, 0.989],
];

pub const CONJUNCTIVE: [[f64; 11]; 3] = [
    [0.823, 0.821, 0.819, 0.817, 0.816, 0.815, 0.813, 0.812, 0.812, 0.811, 0.810],
    [0.833, 0.828, 0.825, 0.821, 0.819, 0.817, 0.815, 0.813, 0.812, 0.810, 0.810],
    [0.844, 0.837, 0.832, 0.827, 0.823, 0.820, 0.817, 0.815, 0.813, 0.812, 0.810],
];

pub const LAMBDA0: f64 = 0.693;
pub const HAZARD_RATIO: f64 = 0.75;
pub const ACCRUAL_RATE: f64 = 500.0;

pub fn survival_comparison(id: &str, a: f64, open: f64, e0: u64) -> ComparisonSpec {
    ComparisonSpec {
        id: id.into(),
        alpha: 0.025,
        power: 0.9,
        allocation_ratio: a,
        outcome: OutcomeSpec::Survival { lambda0: LAMBDA0, hazard_ratio: HAZARD_RATIO },
        open_time: open,
        target: ControlTarget::Events(e0),
        accrual_duration: None,
    }
}

/// Second arm opening `offset` after the first, both at ratio index `r`.
pub fn two_arm_schedule(r: usize, offset: f64) -> PlatformSchedule {
    PlatformSchedule::new(
        ACCRUAL_RATE,
        AccrualModel::PerComparison,
        vec![
            survival_comparison("E1", RATIOS[r], 0.0, CONTROL_EVENTS[r]),
            survival_comparison("E2", RATIOS[r], offset, CONTROL_EVENTS[r]),
        ],
    )
    .unwrap()
}

pub fn two_arm_config(r: usize, offset: f64, truth: Truth, reps: usize, seed: u64) -> SimConfig {
    SimConfig::uniform(two_arm_schedule(r, offset), truth, reps, seed).unwrap()
}

/// Equal-ratio correlation from the printed shared counts.
pub fn table_rho(r: usize, o: usize) -> f64 {
    trialkit_core::partial_overlap_correlation(RATIOS[r], SHARED[r][o], CONTROL_EVENTS[r] as f64).unwrap()
}

//! Familywise error, power and test-statistic correlation for multi-arm
//! platform trials whose experimental arms share a control arm, with a
//! patient-level simulator to check them.

pub mod alpha_solver;
pub mod correlation;
pub mod error;
pub mod error_power;
pub mod matrix;
pub mod model;
pub mod numerics;
pub mod scenario;
pub mod sim;
pub mod strategy;

pub use alpha_solver::{
    buyback_alpha, recursive_alpha_adjust, solve_uniform_alpha, AlphaAllocation, OverlapSource, RecursiveAdjustment,
};
pub use correlation::{
    build_correlation_matrix, full_overlap_correlation, general_pairwise_correlation, partial_overlap_correlation,
    round2, OverlapFraction, OverlapNormalization,
};
pub use error::{Error, Result};
pub use error_power::{
    conjunctive_power, control_event_share, disjunctive_power, fwer, fwer_bonferroni, fwer_dunnett, fwer_sidak,
    pairwise_power, required_control_count, required_events, ControlShare, FwerMethod, FwerResult,
};
pub use matrix::CorrelationMatrix;
pub use model::{
    AccrualModel, BinaryScale, ComparisonSpec, ControlTarget, OutcomeSpec, OverlapInfo, PlatformSchedule,
};
pub use numerics::{
    bivariate_normal_cdf, find_root_monotone, mvn_cdf_qmc, mvn_orthant_product_corr, orthant_probability,
    std_normal_cdf, std_normal_pdf, std_normal_quantile, ErrorBound, Probability,
};
pub use scenario::{Scenario, ScenarioError};
pub use sim::{
    empirical_correlation, expected_events, predict_timeline, simulate_platform, ArrivalProcess, Estimate, SimConfig,
    SimSummary, Timeline, Truth,
};
pub use strategy::{strategy_recommend, Strategy, StrategyContext, StrategyThresholds};

//! Post-processing of simulated traces and equilibrium analytics.

pub mod bne;
pub mod convergence;
pub mod drift;
pub mod events;
pub mod regret;

pub use bne::{
    best_response_grid, bne_expected_payoff, bob_best_response_grid, equilibrium_grid, mixture,
    BestResponse, ConsistentStrategy, StrategyError, DEFAULT_GRID_STEP,
};
pub use convergence::{converge_proportion, convergence_round, ConvergenceReport};
pub use drift::{conditional_drift, AnalysisError, DriftCondition, DriftEstimate};
pub use events::{classify, event_timeline, EventConfig, EventState, EventTimeline};
pub use regret::{final_regret, regret, RegretReport, RegretSummary};

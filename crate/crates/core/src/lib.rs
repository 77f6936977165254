//! Simulator for two learning agents repeatedly paid by the sequential
//! correlated-agreement peer-prediction rule.
//!
//! Signals are drawn iid from a positively correlated joint law, each agent
//! picks one of four pure strategies from its own cumulative counterfactual
//! rewards, and the analysis side measures convergence to truthful play,
//! regret, drift and the one-shot equilibrium structure.

pub mod agents;
pub mod analysis;
pub mod engine;
pub mod ledger;
pub mod mechanism;
pub mod rng;
pub mod signal;

pub use agents::{AgentPolicy, CollusionScript, CustomUpdate, UpdateFunction};
pub use engine::{
    run_replications, run_simulation, verify_records, EngineError, RoundRecord, RunTrace,
    SimulationConfig, TraceDetail,
};
pub use ledger::{LedgerError, RewardLedger};
pub use mechanism::{ca_payment, counterfactual_vector, CounterfactualVector, Role, Strategy};
pub use signal::{DriftConstants, SignalDistribution, SignalError};

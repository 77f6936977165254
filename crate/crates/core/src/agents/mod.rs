//! Learning agents: update functions, policies, and assumption checks.

pub mod certify;
pub mod policy;
pub mod update;

pub use certify::{
    adversarial_necessity_run, certify, check_exchangeability, check_full_exploitation,
    check_order_preservation, necessity_mean_regret, AssumptionReport, CheckOptions, CheckOutcome,
    ExploitationCurve, ExploitationOutcome, Verdict,
};
pub use policy::{epsilon, Agent, AgentPolicy, CollusionScript, PolicyError};
pub use update::{CustomUpdate, EvalOptions, Evaluation, UpdateError, UpdateFunction};

use rand::Rng;
use thiserror::Error;

use super::update::{argmax_set, sample_categorical, UpdateError, UpdateFunction};
use crate::ledger::RewardLedger;
use crate::mechanism::Strategy;
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error("fixed mixture {0:?} is not a probability vector")]
    BadMixture([f64; 4]),
}

/// How a colluding agent picks between the two uninformative strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollusionScript {
    /// A fresh fair coin every round.
    IidCoin,
    /// One fair coin per run, then that strategy for every round.
    Committed,
}

#[derive(Debug, Clone)]
pub enum AgentPolicy {
    RewardBased(UpdateFunction),
    /// Uniform exploration with probability `1/(t+1)^2`, otherwise uniform
    /// over the ledger's argmax. Depends on `t`, so it has no update function.
    EpsilonGreedy,
    /// Ignores signals and rewards; plays Opt3/Opt4 by a fixed coin script.
    Collusion(CollusionScript),
    /// Signal-agnostic draw from a fixed mixture over the four strategies.
    Fixed([f64; 4]),
}

impl AgentPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        match self {
            AgentPolicy::RewardBased(f) => Ok(f.validate()?),
            AgentPolicy::Fixed(p) => {
                let total: f64 = p.iter().sum();
                if p.iter().any(|v| v.is_nan() || *v < 0.0) || (total - 1.0).abs() > 1e-12 {
                    Err(PolicyError::BadMixture(*p))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            AgentPolicy::RewardBased(f) => f.label(),
            AgentPolicy::EpsilonGreedy => "eps_greedy".into(),
            AgentPolicy::Collusion(CollusionScript::IidCoin) => "collude(iid)".into(),
            AgentPolicy::Collusion(CollusionScript::Committed) => "collude".into(),
            AgentPolicy::Fixed(p) => format!("fixed({},{},{},{})", p[0], p[1], p[2], p[3]),
        }
    }

    /// Exact strategy distribution at ledger state `ledger` before round `t`
    /// (1-indexed). FPL is integrated exactly. A committed colluder is
    /// reported by its law over runs.
    pub fn probabilities(&self, ledger: &RewardLedger, t: u32) -> [f64; 4] {
        match self {
            AgentPolicy::RewardBased(f) => f.exact(ledger.totals()),
            AgentPolicy::EpsilonGreedy => {
                let eps = epsilon(t);
                let leaders = argmax_set(ledger.totals());
                let exploit = (1.0 - eps) / leaders.len() as f64;
                let mut p = [eps / 4.0; 4];
                for s in leaders {
                    p[s.index()] += exploit;
                }
                p
            }
            AgentPolicy::Collusion(_) => [0.0, 0.0, 0.5, 0.5],
            AgentPolicy::Fixed(p) => *p,
        }
    }
}

/// Exploration rate of the epsilon-greedy policy at round `t >= 1`.
pub fn epsilon(t: u32) -> f64 {
    let d = f64::from(t) + 1.0;
    1.0 / (d * d)
}

fn coin<R: Rng + ?Sized>(rng: &mut R) -> Strategy {
    if rng.random::<bool>() {
        Strategy::AlwaysOne
    } else {
        Strategy::AlwaysZero
    }
}

/// A policy together with the random streams it consumes.
#[derive(Debug, Clone)]
pub struct Agent {
    policy: AgentPolicy,
    decisions: RandomStream,
    script: RandomStream,
    committed: Option<Strategy>,
}

impl Agent {
    pub fn new(policy: AgentPolicy, decisions: RandomStream, mut script: RandomStream) -> Self {
        let committed = match policy {
            AgentPolicy::Collusion(CollusionScript::Committed) => Some(coin(&mut script)),
            _ => None,
        };
        Self {
            policy,
            decisions,
            script,
            committed,
        }
    }

    pub fn policy(&self) -> &AgentPolicy {
        &self.policy
    }

    /// Strategy for round `t` (1-indexed) given the agent's own ledger after
    /// `t - 1` rounds. Never sees the current signal.
    pub fn choose(&mut self, ledger: &RewardLedger, t: u32) -> Strategy {
        let rng = &mut self.decisions;
        match &self.policy {
            AgentPolicy::RewardBased(f) => f.sample(ledger.totals(), rng),
            AgentPolicy::EpsilonGreedy => {
                if rng.random::<f64>() < epsilon(t) {
                    Strategy::ALL[rng.random_range(0..4)]
                } else {
                    let leaders = argmax_set(ledger.totals());
                    leaders[rng.random_range(0..leaders.len())]
                }
            }
            AgentPolicy::Collusion(CollusionScript::IidCoin) => coin(&mut self.script),
            AgentPolicy::Collusion(CollusionScript::Committed) => {
                self.committed.expect("set at construction")
            }
            AgentPolicy::Fixed(p) => sample_categorical(p, rng),
        }
    }
}

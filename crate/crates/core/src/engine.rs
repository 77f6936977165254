//! Round loop and replication batches.

use rayon::prelude::*;
use thiserror::Error;

use crate::agents::{Agent, AgentPolicy, PolicyError};
use crate::ledger::{LedgerError, RewardLedger};
use crate::mechanism::{
    ca_payment, counterfactual_vector, CounterfactualVector, Role, RoundPayment, Strategy,
    BOUNDARY_REPORT,
};
use crate::rng::{stream, Lane, RandomStream};
use crate::signal::SignalDistribution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("agent {role:?}: {source}")]
    Policy { role: Role, source: PolicyError },
    #[error("run {run}: {source}")]
    Invariant { run: u64, source: LedgerError },
    #[error("run {run} round {round}: {detail}")]
    Inconsistent {
        run: u64,
        round: u32,
        detail: String,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl EngineError {
    /// True for errors raised by the exact-law checks.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            EngineError::Invariant { .. } | EngineError::Inconsistent { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceDetail {
    /// Strategy pairs, regret series and final ledgers only.
    #[default]
    Summary,
    /// Additionally every [`RoundRecord`].
    Full,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub distribution: SignalDistribution,
    pub policy_a: AgentPolicy,
    pub policy_b: AgentPolicy,
    pub rounds: u32,
    pub runs: u32,
    pub master_seed: u64,
    pub trace_detail: TraceDetail,
    pub invariant_checks: bool,
}

impl SimulationConfig {
    /// 800 rounds, 400 runs, seed 0, summary traces, checks on.
    pub fn new(
        distribution: SignalDistribution,
        policy_a: AgentPolicy,
        policy_b: AgentPolicy,
    ) -> Self {
        Self {
            distribution,
            policy_a,
            policy_b,
            rounds: 800,
            runs: 400,
            master_seed: 0,
            trace_detail: TraceDetail::Summary,
            invariant_checks: true,
        }
    }

    /// Both agents use the same policy.
    pub fn symmetric(distribution: SignalDistribution, policy: AgentPolicy) -> Self {
        Self::new(distribution, policy.clone(), policy)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.rounds == 0 {
            return Err(EngineError::InvalidConfig(
                "rounds must be at least 1".into(),
            ));
        }
        if self.runs == 0 {
            return Err(EngineError::InvalidConfig("runs must be at least 1".into()));
        }
        for (role, p) in [(Role::Alice, &self.policy_a), (Role::Bob, &self.policy_b)] {
            p.validate()
                .map_err(|source| EngineError::Policy { role, source })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub t: u32,
    pub x: u8,
    pub y: u8,
    pub strat_a: Strategy,
    pub strat_b: Strategy,
    pub xhat: u8,
    pub yhat: u8,
    pub payment: RoundPayment,
    pub cf_a: CounterfactualVector,
    pub cf_b: CounterfactualVector,
    /// Alice's ledger after this round.
    pub ledger_a: [i32; 4],
    /// Bob's ledger after this round.
    pub ledger_b: [i32; 4],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub master_seed: u64,
    pub run: u64,
    /// `(strat_a, strat_b)` for rounds `1..=T`.
    pub strategies: Vec<(Strategy, Strategy)>,
    /// `Reg(t)` for Alice, rounds `1..=T`.
    pub regret_a: Vec<i32>,
    /// `Reg(t)` for Bob, rounds `1..=T`.
    pub regret_b: Vec<i32>,
    pub final_a: RewardLedger,
    pub final_b: RewardLedger,
    pub records: Option<Vec<RoundRecord>>,
}

impl RunTrace {
    pub fn rounds(&self) -> usize {
        self.strategies.len()
    }
}

/// State of one replication between rounds.
#[derive(Debug, Clone)]
pub struct Simulation {
    run: u64,
    distribution: SignalDistribution,
    checks: bool,
    signals: RandomStream,
    agent_a: Agent,
    agent_b: Agent,
    ledger_a: RewardLedger,
    ledger_b: RewardLedger,
    prev_xhat: u8,
    prev_yhat: u8,
    paid_a: i32,
    paid_b: i32,
    t: u32,
}

impl Simulation {
    pub fn new(config: &SimulationConfig, run_index: u64) -> Self {
        let seed = config.master_seed;
        Self {
            run: run_index,
            distribution: config.distribution,
            checks: config.invariant_checks,
            signals: stream(seed, run_index, Lane::Signals),
            agent_a: Agent::new(
                config.policy_a.clone(),
                stream(seed, run_index, Lane::AgentA),
                stream(seed, run_index, Lane::ScriptA),
            ),
            agent_b: Agent::new(
                config.policy_b.clone(),
                stream(seed, run_index, Lane::AgentB),
                stream(seed, run_index, Lane::ScriptB),
            ),
            ledger_a: RewardLedger::new(),
            ledger_b: RewardLedger::new(),
            prev_xhat: BOUNDARY_REPORT,
            prev_yhat: BOUNDARY_REPORT,
            paid_a: 0,
            paid_b: 0,
            t: 0,
        }
    }

    pub fn ledgers(&self) -> (&RewardLedger, &RewardLedger) {
        (&self.ledger_a, &self.ledger_b)
    }

    /// Cumulative realized payments `(sum r, sum s)`.
    pub fn realized(&self) -> (i32, i32) {
        (self.paid_a, self.paid_b)
    }

    /// Play one round.
    pub fn step(&mut self) -> Result<RoundRecord, EngineError> {
        let t = self.t + 1;
        let (x, y) = self.distribution.sample(&mut self.signals);
        let strat_a = self.agent_a.choose(&self.ledger_a, t);
        let strat_b = self.agent_b.choose(&self.ledger_b, t);
        let (xhat, yhat) = (strat_a.apply(x), strat_b.apply(y));
        let payment = ca_payment(xhat, yhat, self.prev_xhat, self.prev_yhat);
        let cf_a = counterfactual_vector(Role::Alice, x, yhat, self.prev_yhat);
        let cf_b = counterfactual_vector(Role::Bob, y, xhat, self.prev_xhat);

        if self.checks {
            let run = self.run;
            if payment.r != cf_a.get(strat_a) || payment.s != cf_b.get(strat_b) {
                return Err(EngineError::Inconsistent {
                    run,
                    round: t,
                    detail: format!(
                        "payment {payment:?} disagrees with counterfactuals {cf_a:?}/{cf_b:?}"
                    ),
                });
            }
            self.ledger_a
                .update(cf_a)
                .map_err(|source| EngineError::Invariant { run, source })?;
            self.ledger_b
                .update(cf_b)
                .map_err(|source| EngineError::Invariant { run, source })?;
        } else {
            self.ledger_a.apply(cf_a);
            self.ledger_b.apply(cf_b);
        }

        self.paid_a += i32::from(payment.r);
        self.paid_b += i32::from(payment.s);
        self.prev_xhat = xhat;
        self.prev_yhat = yhat;
        self.t = t;
        Ok(RoundRecord {
            t,
            x,
            y,
            strat_a,
            strat_b,
            xhat,
            yhat,
            payment,
            cf_a,
            cf_b,
            ledger_a: self.ledger_a.totals(),
            ledger_b: self.ledger_b.totals(),
        })
    }
}

fn max_entry(l: &RewardLedger) -> i32 {
    *l.totals().iter().max().expect("four entries")
}

/// Play replication `run_index` to completion.
pub fn run_simulation(config: &SimulationConfig, run_index: u64) -> Result<RunTrace, EngineError> {
    let rounds = config.rounds as usize;
    let mut sim = Simulation::new(config, run_index);
    let mut strategies = Vec::with_capacity(rounds);
    let mut regret_a = Vec::with_capacity(rounds);
    let mut regret_b = Vec::with_capacity(rounds);
    let mut records = match config.trace_detail {
        TraceDetail::Full => Some(Vec::with_capacity(rounds)),
        TraceDetail::Summary => None,
    };
    for _ in 0..rounds {
        let rec = sim.step()?;
        strategies.push((rec.strat_a, rec.strat_b));
        let (paid_a, paid_b) = sim.realized();
        regret_a.push(max_entry(&sim.ledger_a) - paid_a);
        regret_b.push(max_entry(&sim.ledger_b) - paid_b);
        if let Some(r) = records.as_mut() {
            r.push(rec);
        }
    }
    Ok(RunTrace {
        master_seed: config.master_seed,
        run: run_index,
        strategies,
        regret_a,
        regret_b,
        final_a: sim.ledger_a,
        final_b: sim.ledger_b,
        records,
    })
}

/// Run every replication, in parallel on `threads` workers (0 means one per
/// core). Traces come back in run-index order whatever the schedule.
pub fn run_replications(
    config: &SimulationConfig,
    threads: usize,
) -> Result<Vec<RunTrace>, EngineError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EngineError::ThreadPool(e.to_string()))?;
    pool.install(|| {
        (0..u64::from(config.runs))
            .into_par_iter()
            .map(|run| run_simulation(config, run))
            .collect()
    })
}

/// Re-derive every recorded round from its signals and strategies and
/// re-check the ledger laws. Used on traces read back from disk.
pub fn verify_records(run: u64, records: &[RoundRecord]) -> Result<(), EngineError> {
    let mut ledger_a = RewardLedger::new();
    let mut ledger_b = RewardLedger::new();
    let (mut px, mut py) = (BOUNDARY_REPORT, BOUNDARY_REPORT);
    for r in records {
        let fail = |detail: String| EngineError::Inconsistent {
            run,
            round: r.t,
            detail,
        };
        if r.xhat != r.strat_a.apply(r.x) || r.yhat != r.strat_b.apply(r.y) {
            return Err(fail("report does not match strategy and signal".into()));
        }
        if r.payment != ca_payment(r.xhat, r.yhat, px, py) {
            return Err(fail(format!(
                "payment {:?} does not match reports",
                r.payment
            )));
        }
        let cf_a = counterfactual_vector(Role::Alice, r.x, r.yhat, py);
        let cf_b = counterfactual_vector(Role::Bob, r.y, r.xhat, px);
        if cf_a != r.cf_a || cf_b != r.cf_b {
            return Err(fail("counterfactual vector does not match reports".into()));
        }
        if r.payment.r != cf_a.get(r.strat_a) || r.payment.s != cf_b.get(r.strat_b) {
            return Err(fail(
                "payment differs from the chosen counterfactual entry".into(),
            ));
        }
        ledger_a
            .update(cf_a)
            .map_err(|source| EngineError::Invariant { run, source })?;
        ledger_b
            .update(cf_b)
            .map_err(|source| EngineError::Invariant { run, source })?;
        if ledger_a.totals() != r.ledger_a || ledger_b.totals() != r.ledger_b {
            return Err(fail(
                "ledger does not match accumulated counterfactuals".into(),
            ));
        }
        px = r.xhat;
        py = r.yhat;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::UpdateFunction;

    fn truthful() -> AgentPolicy {
        AgentPolicy::Fixed([1.0, 0.0, 0.0, 0.0])
    }

    fn config(policy: AgentPolicy) -> SimulationConfig {
        let mut c = SimulationConfig::symmetric(SignalDistribution::default_preset(), policy);
        c.rounds = 200;
        c.runs = 6;
        c.master_seed = 42;
        c.trace_detail = TraceDetail::Full;
        c
    }

    #[test]
    fn first_round_uses_boundary_reports() {
        let c = config(truthful());
        // Find a run whose first signals are (1, 1).
        let rec = (0..64)
            .map(|run| Simulation::new(&c, run).step().unwrap())
            .find(|r| (r.x, r.y) == (1, 1))
            .expect("a (1,1) first round within 64 runs");
        assert_eq!(rec.payment, RoundPayment { r: 1, s: 1 });
    }

    #[test]
    fn constant_one_reports() {
        let c = config(AgentPolicy::Fixed([0.0, 0.0, 1.0, 0.0]));
        let trace = run_simulation(&c, 0).unwrap();
        for r in trace.records.unwrap() {
            assert_eq!((r.xhat, r.yhat), (1, 1));
        }
    }

    #[test]
    fn records_are_internally_consistent() {
        let c = config(AgentPolicy::RewardBased(UpdateFunction::Hedge2 {
            beta: 1.0,
        }));
        let trace = run_simulation(&c, 1).unwrap();
        let records = trace.records.unwrap();
        assert_eq!(records.len(), 200);
        let (mut px, mut py) = (BOUNDARY_REPORT, BOUNDARY_REPORT);
        for r in &records {
            assert_eq!(r.xhat, r.strat_a.apply(r.x));
            assert_eq!(r.yhat, r.strat_b.apply(r.y));
            assert_eq!(r.payment, ca_payment(r.xhat, r.yhat, px, py));
            assert_eq!(r.payment.r, r.cf_a.get(r.strat_a));
            assert_eq!(r.payment.s, r.cf_b.get(r.strat_b));
            px = r.xhat;
            py = r.yhat;
        }
        assert_eq!(records.last().unwrap().ledger_a, trace.final_a.totals());
    }

    #[test]
    fn verify_accepts_engine_output_and_rejects_tampering() {
        let c = config(AgentPolicy::RewardBased(UpdateFunction::Hedge1));
        let trace = run_simulation(&c, 2).unwrap();
        let mut records = trace.records.unwrap();
        verify_records(2, &records).unwrap();
        records[10].payment.r = -records[10].payment.r;
        records[10].payment.r += if records[10].payment.r == 0 { 1 } else { 0 };
        assert!(verify_records(2, &records)
            .unwrap_err()
            .is_invariant_violation());
    }

    #[test]
    fn same_seed_same_records() {
        let c = config(AgentPolicy::RewardBased(UpdateFunction::Fpl {
            noise_max: 4.0,
        }));
        assert_eq!(
            run_simulation(&c, 3).unwrap(),
            run_simulation(&c, 3).unwrap()
        );
    }

    #[test]
    fn thread_count_does_not_change_traces() {
        let c = config(AgentPolicy::EpsilonGreedy);
        let serial = run_replications(&c, 1).unwrap();
        let parallel = run_replications(&c, 4).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.len(), 6);
        for (i, t) in serial.iter().enumerate() {
            assert_eq!(t.run, i as u64);
            assert_eq!(*t, run_simulation(&c, i as u64).unwrap());
        }
    }

    #[test]
    fn single_run_batch() {
        let mut c = config(truthful());
        c.runs = 1;
        assert_eq!(run_replications(&c, 2).unwrap().len(), 1);
    }

    #[test]
    fn zero_rounds_rejected() {
        let mut c = config(truthful());
        c.rounds = 0;
        assert!(matches!(c.validate(), Err(EngineError::InvalidConfig(_))));
    }

    #[test]
    fn disabling_checks_leaves_results_unchanged() {
        let mut c = config(AgentPolicy::RewardBased(UpdateFunction::Hedge1));
        let checked = run_simulation(&c, 0).unwrap();
        c.invariant_checks = false;
        assert_eq!(checked, run_simulation(&c, 0).unwrap());
    }
}

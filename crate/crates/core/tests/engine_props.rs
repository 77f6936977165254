//! Engine-level properties over random distributions, policies and seeds.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use peerpred_core::analysis::{converge_proportion, regret};
use peerpred_core::signal::random_distribution;
use peerpred_core::{
    run_replications, verify_records, AgentPolicy, CollusionScript, CounterfactualVector, Role,
    SimulationConfig, TraceDetail, UpdateFunction,
};

fn policy(k: u8) -> AgentPolicy {
    match k % 9 {
        0 => AgentPolicy::RewardBased(UpdateFunction::Hedge1),
        1 => AgentPolicy::RewardBased(UpdateFunction::Hedge2 { beta: 0.5 }),
        2 => AgentPolicy::RewardBased(UpdateFunction::Fpl { noise_max: 3.0 }),
        3 => AgentPolicy::RewardBased(UpdateFunction::Ftl),
        4 => AgentPolicy::RewardBased(UpdateFunction::Replicator { ratio: 5.0 }),
        5 => AgentPolicy::EpsilonGreedy,
        6 => AgentPolicy::Collusion(CollusionScript::IidCoin),
        7 => AgentPolicy::Collusion(CollusionScript::Committed),
        _ => AgentPolicy::Fixed([0.1, 0.2, 0.3, 0.4]),
    }
}

fn config(dist_seed: u64, a: u8, b: u8, seed: u64, rounds: u32) -> SimulationConfig {
    let dist = random_distribution(&mut ChaCha8Rng::seed_from_u64(dist_seed));
    let mut c = SimulationConfig::new(dist, policy(a), policy(b));
    c.rounds = rounds;
    c.runs = 3;
    c.master_seed = seed;
    c.trace_detail = TraceDetail::Full;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ledger_laws_hold_at_every_round(
        dist_seed in any::<u64>(), a in 0u8..9, b in 0u8..9, seed in any::<u64>(), rounds in 1u32..150,
    ) {
        let traces = run_replications(&config(dist_seed, a, b, seed, rounds), 1).unwrap();
        for tr in &traces {
            let records = tr.records.as_ref().unwrap();
            prop_assert_eq!(records.len(), rounds as usize);
            prop_assert!(verify_records(tr.run, records).is_ok());
            for r in records {
                for (cf, l) in [(r.cf_a, r.ledger_a), (r.cf_b, r.ledger_b)] {
                    prop_assert!(CounterfactualVector::ADMISSIBLE.contains(&cf.0));
                    prop_assert_eq!(l[0] + l[1], 0);
                    prop_assert_eq!(l[2] + l[3], 0);
                    prop_assert!(l[2].abs() <= 1 && l[3].abs() <= 1);
                }
                // The realized payment is the chosen strategy's entry.
                prop_assert_eq!(r.payment.r, r.cf_a.get(r.strat_a));
                prop_assert_eq!(r.payment.s, r.cf_b.get(r.strat_b));
            }
            prop_assert_eq!(&regret(records, Role::Alice), &tr.regret_a);
            prop_assert_eq!(&regret(records, Role::Bob), &tr.regret_b);
            prop_assert_eq!(tr.final_a.totals(), records[records.len() - 1].ledger_a);
        }
    }

    #[test]
    fn output_is_independent_of_thread_count(
        dist_seed in any::<u64>(), a in 0u8..9, b in 0u8..9, seed in any::<u64>(),
    ) {
        let c = config(dist_seed, a, b, seed, 40);
        let one = run_replications(&c, 1).unwrap();
        let many = run_replications(&c, 3).unwrap();
        prop_assert_eq!(one, many);
    }

    #[test]
    fn colluders_never_converge(dist_seed in any::<u64>(), seed in any::<u64>(), committed in any::<bool>()) {
        let k = if committed { 7 } else { 6 };
        let traces = run_replications(&config(dist_seed, k, k, seed, 60), 1).unwrap();
        prop_assert!(converge_proportion(&traces).proportion.iter().all(|p| *p == 0.0));
    }
}

#[test]
fn converged_runs_settle_in_the_matching_good_region() {
    use peerpred_core::analysis::{convergence_round, event_timeline, EventConfig, EventState};
    use peerpred_core::{SignalDistribution, Strategy};

    let mut c = SimulationConfig::symmetric(
        SignalDistribution::default_preset(),
        AgentPolicy::RewardBased(UpdateFunction::Hedge2 { beta: 1.0 }),
    );
    c.rounds = 1_500;
    c.runs = 20;
    c.master_seed = 3;
    c.trace_detail = TraceDetail::Full;
    for tr in run_replications(&c, 0).unwrap() {
        let records = tr.records.as_ref().unwrap();
        let timeline = event_timeline(records, EventConfig::default());
        assert_eq!(timeline.states.len(), 1_500);
        if convergence_round(&tr.strategies).is_some_and(|t| t <= 500) {
            // Both truthful or both flipping.
            let want = match tr.strategies.last().unwrap().0 {
                Strategy::Truthful => EventState::Good11,
                _ => EventState::Good22,
            };
            assert_eq!(timeline.final_state(), Some(want), "run {}", tr.run);
            assert!(timeline.final_dwell() >= 500, "run {}", tr.run);
        }
    }
}

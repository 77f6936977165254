use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use peerpred_core::{
    run_simulation, AgentPolicy, SignalDistribution, SimulationConfig, UpdateFunction,
};

fn roster() -> Vec<(&'static str, AgentPolicy)> {
    vec![
        ("ftl", AgentPolicy::RewardBased(UpdateFunction::Ftl)),
        (
            "fpl4",
            AgentPolicy::RewardBased(UpdateFunction::Fpl { noise_max: 4.0 }),
        ),
        ("hedge1", AgentPolicy::RewardBased(UpdateFunction::Hedge1)),
        (
            "hedge2",
            AgentPolicy::RewardBased(UpdateFunction::Hedge2 { beta: 1.0 }),
        ),
        ("eps_greedy", AgentPolicy::EpsilonGreedy),
    ]
}

fn single_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_800_rounds");
    group.throughput(Throughput::Elements(800));
    for (name, policy) in roster() {
        let mut cfg = SimulationConfig::symmetric(SignalDistribution::default_preset(), policy);
        cfg.runs = 1;
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            let mut run = 0u64;
            b.iter(|| {
                run += 1;
                black_box(run_simulation(cfg, run).unwrap())
            })
        });
    }
    group.finish();
}

fn update_functions(c: &mut Criterion) {
    let mut group = c.benchmark_group("update_sample");
    let ledger = [7, -7, 1, -1];
    for (name, policy) in roster() {
        let AgentPolicy::RewardBased(f) = policy else {
            continue;
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        group.bench_function(name, |b| {
            b.iter(|| black_box(f.sample(black_box(ledger), &mut rng)))
        });
    }
    let fpl = UpdateFunction::Fpl { noise_max: 8.0 };
    group.bench_function("fpl8_exact", |b| {
        b.iter(|| black_box(fpl.exact(black_box(ledger))))
    });
    group.finish();
}

criterion_group!(benches, single_run, update_functions);
criterion_main!(benches);

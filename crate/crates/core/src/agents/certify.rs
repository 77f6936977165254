//! Empirical checks of the three structural assumptions on update functions
//! (exchangeability, order preservation, full exploitation) and the
//! fixed-reward environment showing why full exploitation is needed.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::update::{EvalOptions, Evaluation, UpdateFunction};
use crate::rng::{stream, Lane};

/// Tolerance for closed-form comparisons.
pub const EXACT_TOLERANCE: f64 = 1e-9;
/// Probability `f1` must reach by the largest probed gap.
pub const EXPLOITATION_TARGET: f64 = 1.0 - 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub trials: usize,
    /// Random reward entries are drawn from `[-max_abs_reward, max_abs_reward]`.
    pub max_abs_reward: i32,
    /// Monte-Carlo sample count per FPL evaluation.
    pub fpl_samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            max_abs_reward: 12,
            fpl_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rewards: [i32; 4],
    pub detail: String,
    /// Amount by which the discrepancy exceeded its tolerance.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub trials: usize,
    pub violations: usize,
    pub worst: Option<Violation>,
}

impl CheckOutcome {
    fn new(trials: usize) -> Self {
        Self {
            trials,
            violations: 0,
            worst: None,
        }
    }

    fn record(&mut self, v: Violation) {
        self.violations += 1;
        if self.worst.as_ref().is_none_or(|w| v.excess > w.excess) {
            self.worst = Some(v);
        }
    }

    pub fn verdict(&self) -> Verdict {
        if self.violations == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

struct Evaluator<'a> {
    f: &'a UpdateFunction,
    samples: usize,
}

impl Evaluator<'_> {
    fn eval<R: Rng + ?Sized>(&self, r: [i32; 4], rng: &mut R) -> Evaluation {
        self.f.evaluate(
            r,
            &EvalOptions {
                fpl_samples: self.samples,
                seed: rng.random(),
            },
        )
    }

    /// Allowed gap between entry `i` of `a` and entry `j` of `b`: four
    /// combined standard errors for Monte-Carlo estimates, each floored at
    /// one count so that empirical zeros still carry uncertainty.
    fn tolerance(&self, a: &Evaluation, i: usize, b: &Evaluation, j: usize) -> f64 {
        match (a.std_err, b.std_err) {
            (Some(sa), Some(sb)) => {
                let floor = 1.0 / self.samples as f64;
                let (x, y) = (sa[i].max(floor), sb[j].max(floor));
                4.0 * (x * x + y * y).sqrt()
            }
            _ => EXACT_TOLERANCE,
        }
    }
}

fn random_rewards<R: Rng + ?Sized>(max: i32, rng: &mut R) -> [i32; 4] {
    std::array::from_fn(|_| rng.random_range(-max..=max))
}

/// Permuting the rewards permutes the probabilities the same way.
pub fn check_exchangeability<R: Rng + ?Sized>(
    f: &UpdateFunction,
    opts: &CheckOptions,
    rng: &mut R,
) -> CheckOutcome {
    let ev = Evaluator {
        f,
        samples: opts.fpl_samples,
    };
    let mut out = CheckOutcome::new(opts.trials);
    for _ in 0..opts.trials {
        let r = random_rewards(opts.max_abs_reward, rng);
        let mut perm = [0usize, 1, 2, 3];
        perm.shuffle(rng);
        let permuted = perm.map(|k| r[k]);
        let base = ev.eval(r, rng);
        let moved = ev.eval(permuted, rng);
        let mut worst: Option<Violation> = None;
        for (j, &k) in perm.iter().enumerate() {
            let diff = (moved.probs[j] - base.probs[k]).abs();
            let excess = diff - ev.tolerance(&moved, j, &base, k);
            if excess > 0.0 && worst.as_ref().is_none_or(|w| excess > w.excess) {
                worst = Some(Violation {
                    rewards: r,
                    detail: format!(
                        "permutation {perm:?}: f_{j}(permuted) = {} vs f_{k}(R) = {}",
                        moved.probs[j], base.probs[k]
                    ),
                    excess,
                });
            }
        }
        if let Some(v) = worst {
            out.record(v);
        }
    }
    out
}

/// `R_a >= R_b` implies `f_a >= f_b` (equality when rewards tie).
pub fn check_order_preservation<R: Rng + ?Sized>(
    f: &UpdateFunction,
    opts: &CheckOptions,
    rng: &mut R,
) -> CheckOutcome {
    let ev = Evaluator {
        f,
        samples: opts.fpl_samples,
    };
    let mut out = CheckOutcome::new(opts.trials);
    for trial in 0..opts.trials {
        // Every other trial uses a narrow range so that ties are common.
        let max = if trial % 2 == 0 {
            opts.max_abs_reward
        } else {
            2
        };
        let r = random_rewards(max, rng);
        let e = ev.eval(r, rng);
        let mut worst: Option<Violation> = None;
        for a in 0..4 {
            for b in 0..4 {
                if a == b || r[a] < r[b] {
                    continue;
                }
                let excess = e.probs[b] - e.probs[a] - ev.tolerance(&e, a, &e, b);
                if excess > 0.0 && worst.as_ref().is_none_or(|w| excess > w.excess) {
                    worst = Some(Violation {
                        rewards: r,
                        detail: format!(
                            "R_{a} = {} >= R_{b} = {} but f_{a} = {} < f_{b} = {}",
                            r[a], r[b], e.probs[a], e.probs[b]
                        ),
                        excess,
                    });
                }
            }
        }
        if let Some(v) = worst {
            out.record(v);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExploitationPoint {
    pub gap: i32,
    pub f1: f64,
    pub std_err: Option<f64>,
}

/// `f1` along the ray `R = (g, n2, n3, n4)` for fixed nonpositive fillers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExploitationCurve {
    pub fillers: [i32; 3],
    pub points: Vec<ExploitationPoint>,
    pub nondecreasing: bool,
    pub reaches_target: bool,
}

impl ExploitationCurve {
    pub fn verdict(&self) -> Verdict {
        if self.nondecreasing && self.reaches_target {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploitationOutcome {
    pub curves: Vec<ExploitationCurve>,
}

impl ExploitationOutcome {
    pub fn verdict(&self) -> Verdict {
        if self.curves.iter().all(|c| c.verdict() == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Gaps probed by default.
pub const DEFAULT_GAPS: [i32; 9] = [1, 2, 4, 8, 12, 16, 20, 30, 40];

/// The zero ray plus `count` random filler vectors with entries in `[-5, 0]`.
pub fn default_fillers<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<[i32; 3]> {
    let mut out = vec![[0, 0, 0]];
    out.extend((0..count).map(|_| std::array::from_fn(|_| rng.random_range(-5..=0))));
    out
}

/// Evaluate `f1` at increasing gaps, once per filler direction.
pub fn check_full_exploitation<R: Rng + ?Sized>(
    f: &UpdateFunction,
    gaps: &[i32],
    fillers: &[[i32; 3]],
    opts: &CheckOptions,
    rng: &mut R,
) -> ExploitationOutcome {
    let ev = Evaluator {
        f,
        samples: opts.fpl_samples,
    };
    let curves = fillers
        .iter()
        .map(|&fill| {
            let evals: Vec<(i32, Evaluation)> = gaps
                .iter()
                .map(|&g| (g, ev.eval([g, fill[0], fill[1], fill[2]], rng)))
                .collect();
            let nondecreasing = evals
                .windows(2)
                .all(|w| w[1].1.probs[0] >= w[0].1.probs[0] - ev.tolerance(&w[1].1, 0, &w[0].1, 0));
            let reaches_target = evals
                .last()
                .is_some_and(|(_, e)| e.probs[0] >= EXPLOITATION_TARGET);
            ExploitationCurve {
                fillers: fill,
                points: evals
                    .iter()
                    .map(|(g, e)| ExploitationPoint {
                        gap: *g,
                        f1: e.probs[0],
                        std_err: e.std_err.map(|s| s[0]),
                    })
                    .collect(),
                nondecreasing,
                reaches_target,
            }
        })
        .collect();
    ExploitationOutcome { curves }
}

/// Play `T` rounds against fixed rewards `(2, 1, 1, 1)` and return `Reg(t)`
/// for `t = 1..=T`: the best option's total `2t` minus the realized total.
pub fn adversarial_necessity_run<R: Rng + ?Sized>(
    f: &UpdateFunction,
    rounds: u32,
    rng: &mut R,
) -> Vec<i64> {
    const REWARDS: [i32; 4] = [2, 1, 1, 1];
    let mut realized: i64 = 0;
    let mut out = Vec::with_capacity(rounds as usize);
    for t in 1..=i64::from(rounds) {
        let prior = (t - 1) as i32;
        let ledger = REWARDS.map(|r| r * prior);
        let s = f.sample(ledger, rng);
        realized += i64::from(REWARDS[s.index()]);
        out.push(2 * t - realized);
    }
    out
}

/// Mean `Reg(t)` over `runs` independent necessity runs, `t = 1..=rounds`.
/// Run `k` draws from `stream(master_seed, k, Auxiliary)`.
pub fn necessity_mean_regret(
    f: &UpdateFunction,
    rounds: u32,
    runs: u32,
    master_seed: u64,
) -> Vec<f64> {
    let series: Vec<Vec<i64>> = (0..u64::from(runs))
        .into_par_iter()
        .map(|k| adversarial_necessity_run(f, rounds, &mut stream(master_seed, k, Lane::Auxiliary)))
        .collect();
    let mut mean = vec![0.0; rounds as usize];
    for s in &series {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += *v as f64;
        }
    }
    let n = f64::from(runs.max(1));
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Evidence and verdicts for the three assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub name: String,
    pub exchangeability: CheckOutcome,
    pub order_preservation: CheckOutcome,
    pub full_exploitation: ExploitationOutcome,
}

impl AssumptionReport {
    pub fn verdicts(&self) -> [Verdict; 3] {
        [
            self.exchangeability.verdict(),
            self.order_preservation.verdict(),
            self.full_exploitation.verdict(),
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts().iter().all(|v| *v == Verdict::Pass)
    }
}

/// Run all three checkers with default gaps and four random filler directions.
pub fn certify<R: Rng + ?Sized>(
    f: &UpdateFunction,
    opts: &CheckOptions,
    rng: &mut R,
) -> AssumptionReport {
    let exchangeability = check_exchangeability(f, opts, rng);
    let order_preservation = check_order_preservation(f, opts, rng);
    let fillers = default_fillers(4, rng);
    let full_exploitation = check_full_exploitation(f, &DEFAULT_GAPS, &fillers, opts, rng);
    AssumptionReport {
        name: f.label(),
        exchangeability,
        order_preservation,
        full_exploitation,
    }
}

fn write_outcome(f: &mut fmt::Formatter<'_>, key: &str, o: &CheckOutcome) -> fmt::Result {
    writeln!(f, "{key}.trials: {}", o.trials)?;
    writeln!(f, "{key}.violations: {}", o.violations)?;
    match &o.worst {
        Some(v) => writeln!(
            f,
            "{key}.worst: R={:?} excess={:.3e} {}",
            v.rewards, v.excess, v.detail
        )?,
        None => writeln!(f, "{key}.worst: none")?,
    }
    writeln!(f, "{key}.verdict: {}", o.verdict())
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "update_function: {}", self.name)?;
        write_outcome(f, "exchangeability", &self.exchangeability)?;
        write_outcome(f, "order_preservation", &self.order_preservation)?;
        for (k, c) in self.full_exploitation.curves.iter().enumerate() {
            let [a, b, d] = c.fillers;
            write!(f, "full_exploitation.curve[{k}]: R=(g,{a},{b},{d})")?;
            for p in &c.points {
                write!(f, " {}:{:.6}", p.gap, p.f1)?;
            }
            writeln!(
                f,
                " nondecreasing={} reaches_target={}",
                c.nondecreasing, c.reaches_target
            )?;
        }
        writeln!(
            f,
            "full_exploitation.verdict: {}",
            self.full_exploitation.verdict()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::update::CustomUpdate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn quick() -> CheckOptions {
        CheckOptions {
            trials: 100,
            max_abs_reward: 12,
            fpl_samples: 5_000,
        }
    }

    #[test]
    fn symmetric_functions_are_exchangeable() {
        for f in [UpdateFunction::Hedge2 { beta: 1.0 }, UpdateFunction::Ftl] {
            let o = check_exchangeability(&f, &quick(), &mut rng(1));
            assert_eq!(o.violations, 0, "{}", f.label());
        }
    }

    #[test]
    fn biased_softmax_breaks_exchangeability() {
        let f = UpdateFunction::Custom(CustomUpdate::biased_softmax());
        let o = check_exchangeability(
            &f,
            &CheckOptions {
                trials: 1000,
                ..quick()
            },
            &mut rng(2),
        );
        assert!(o.violations > 0);
        assert_eq!(o.verdict(), Verdict::Fail);
    }

    #[test]
    fn monotone_functions_preserve_order() {
        for f in [
            UpdateFunction::Hedge1,
            UpdateFunction::Replicator { ratio: 3.0 },
        ] {
            let o = check_order_preservation(&f, &quick(), &mut rng(3));
            assert_eq!(o.violations, 0, "{}", f.label());
        }
    }

    #[test]
    fn anti_monotone_breaks_order() {
        let f = UpdateFunction::Custom(CustomUpdate::anti_monotone());
        let o = check_order_preservation(&f, &quick(), &mut rng(4));
        assert!(o.violations > 0);
    }

    #[test]
    fn hedge2_exploitation_matches_bound() {
        let f = UpdateFunction::Hedge2 { beta: 1.0 };
        let o = check_full_exploitation(&f, &[5, 20], &[[0, 0, 0]], &quick(), &mut rng(5));
        let f1 = o.curves[0].points[1].f1;
        assert!(f1 >= 1.0 / (1.0 + 3.0 * (-20f64).exp()) - 1e-15);
        assert_eq!(o.verdict(), Verdict::Pass);
    }

    #[test]
    fn ftl_exploits_at_gap_one() {
        let o = check_full_exploitation(
            &UpdateFunction::Ftl,
            &[1],
            &[[0, 0, 0]],
            &quick(),
            &mut rng(6),
        );
        assert_eq!(o.curves[0].points[0].f1, 1.0);
    }

    #[test]
    fn capped_softmax_plateaus() {
        let f = UpdateFunction::Custom(CustomUpdate::capped_softmax(0.9).unwrap());
        let o = check_full_exploitation(&f, &DEFAULT_GAPS, &[[0, 0, 0]], &quick(), &mut rng(7));
        let last = o.curves[0].points.last().unwrap().f1;
        assert!((last - 0.9).abs() < 1e-12);
        assert!(o.curves[0].nondecreasing);
        assert_eq!(o.verdict(), Verdict::Fail);
    }

    #[test]
    fn ftl_necessity_regret_is_bounded() {
        let reg = adversarial_necessity_run(&UpdateFunction::Ftl, 1000, &mut rng(8));
        assert_eq!(reg.len(), 1000);
        assert!(*reg.last().unwrap() <= 2);
    }

    #[test]
    fn hedge2_necessity_regret_is_sublinear() {
        let f = UpdateFunction::Hedge2 { beta: 1.0 };
        let reg = adversarial_necessity_run(&f, 10_000, &mut rng(9));
        let at = |t: usize| reg[t - 1] as f64 / t as f64;
        assert!(at(10_000) < at(1_000));
    }

    #[test]
    fn report_lists_all_sections() {
        let r = certify(&UpdateFunction::Hedge1, &quick(), &mut rng(10));
        assert!(r.all_pass());
        let text = r.to_string();
        for key in [
            "update_function: hedge1",
            "exchangeability.verdict: PASS",
            "order_preservation.verdict: PASS",
            "full_exploitation.verdict: PASS",
        ] {
            assert!(text.contains(key), "{text}");
        }
    }
}

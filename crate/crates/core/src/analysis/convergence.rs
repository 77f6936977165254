use crate::engine::RunTrace;
use crate::mechanism::Strategy;

/// Earliest round `t` (1-indexed) from which both agents play Opt1 in every
/// later round, or both play Opt2 in every later round.
pub fn convergence_round(strategies: &[(Strategy, Strategy)]) -> Option<u32> {
    let &last = strategies.last()?;
    if last != (Strategy::Truthful, Strategy::Truthful) && last != (Strategy::Flip, Strategy::Flip)
    {
        return None;
    }
    let suffix = strategies.iter().rev().take_while(|&&p| p == last).count();
    Some((strategies.len() - suffix + 1) as u32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Entry `t - 1` is the fraction of runs with convergence round `<= t`.
    pub proportion: Vec<f64>,
    /// Per-run convergence round, in run order.
    pub rounds: Vec<Option<u32>>,
}

impl ConvergenceReport {
    pub fn from_rounds(rounds: Vec<Option<u32>>, horizon: u32) -> Self {
        let mut counts = vec![0usize; horizon as usize + 1];
        for r in rounds.iter().flatten() {
            counts[*r as usize] += 1;
        }
        let n = rounds.len().max(1) as f64;
        let mut acc = 0;
        let proportion = counts[1..]
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / n
            })
            .collect();
        Self { proportion, rounds }
    }

    /// Proportion at round `t` (1-indexed).
    pub fn at(&self, t: u32) -> f64 {
        self.proportion[t as usize - 1]
    }

    /// Median convergence round, counting unconverged runs as never
    /// converging. `None` when at least half the runs never converge.
    pub fn median_round(&self) -> Option<f64> {
        let mut r: Vec<u64> = self
            .rounds
            .iter()
            .map(|r| r.map_or(u64::MAX, u64::from))
            .collect();
        if r.is_empty() {
            return None;
        }
        r.sort_unstable();
        let n = r.len();
        let (lo, hi) = if n % 2 == 1 {
            (r[n / 2], r[n / 2])
        } else {
            (r[n / 2 - 1], r[n / 2])
        };
        if hi == u64::MAX {
            None
        } else {
            Some((lo as f64 + hi as f64) / 2.0)
        }
    }
}

/// Convergence proportion across a batch of traces of equal length.
pub fn converge_proportion(traces: &[RunTrace]) -> ConvergenceReport {
    let horizon = traces.iter().map(|t| t.rounds()).max().unwrap_or(0) as u32;
    let rounds = traces
        .iter()
        .map(|t| convergence_round(&t.strategies))
        .collect();
    ConvergenceReport::from_rounds(rounds, horizon)
}

#[cfg(test)]
mod tests {
    use super::{convergence_round, ConvergenceReport};
    use crate::mechanism::Strategy::{self as S, Flip, Truthful};
    use proptest::prelude::*;

    #[test]
    fn convergence_round_examples() {
        assert_eq!(convergence_round(&[(Truthful, Truthful); 10]), Some(1));
        assert_eq!(convergence_round(&[(Flip, Flip); 10]), Some(1));

        let mut s = vec![(Truthful, Truthful); 12];
        s[5] = (Flip, Truthful);
        assert_eq!(convergence_round(&s), Some(7));

        assert_eq!(convergence_round(&[(Truthful, Flip); 3]), None);
        assert_eq!(convergence_round(&[]), None);
    }

    #[test]
    fn proportion_examples() {
        let r = ConvergenceReport::from_rounds(vec![Some(1); 5], 50);
        assert!(r.proportion.iter().all(|&p| p == 1.0));

        let r = ConvergenceReport::from_rounds(vec![None; 5], 50);
        assert!(r.proportion.iter().all(|&p| p == 0.0));

        let mut rounds = vec![Some(300); 200];
        rounds.extend(vec![None; 200]);
        let r = ConvergenceReport::from_rounds(rounds, 800);
        assert_eq!(r.at(299), 0.0);
        assert_eq!(r.at(300), 0.5);
        assert_eq!(r.median_round(), None);
    }

    #[test]
    fn median_round() {
        let r = ConvergenceReport::from_rounds(vec![Some(2), Some(10), Some(4), None], 20);
        assert_eq!(r.median_round(), Some(7.0));
    }

    fn pairs() -> impl Strategy<Value = Vec<(S, S)>> {
        // Truthful is drawn twice as often so that long suffixes actually occur.
        let pair = (0usize..5, 0usize..5).prop_map(|(a, b)| {
            let pick = |i: usize| S::from_index(i.saturating_sub(1)).unwrap();
            (pick(a), pick(b))
        });
        prop::collection::vec(pair, 1..40)
    }

    proptest! {
        #[test]
        fn backward_scan_matches_definition(seq in pairs()) {
            // Forward oracle: smallest t whose whole suffix is one informative pair.
            let oracle = (0..seq.len()).find(|&i| {
                [(Truthful, Truthful), (Flip, Flip)]
                    .iter()
                    .any(|target| seq[i..].iter().all(|p| p == target))
            }).map(|i| i as u32 + 1);
            prop_assert_eq!(convergence_round(&seq), oracle);
        }

        #[test]
        fn proportion_is_monotone(rounds in prop::collection::vec(prop::option::of(1u32..=30), 1..50)) {
            let r = ConvergenceReport::from_rounds(rounds, 30);
            prop_assert!(r.proportion.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(r.proportion.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}

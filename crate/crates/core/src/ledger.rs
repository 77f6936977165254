//! Cumulative counterfactual rewards of one agent.
//!
//! Under the correlated-agreement rule the ledger obeys exact integer laws:
//! the two informative entries sum to zero, the two uninformative entries sum
//! to zero and each stays within `[-1, 1]`. They are re-checked on every update.

use thiserror::Error;

use crate::mechanism::{CounterfactualVector, Strategy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("ledger invariant violated at round {round}: {law} (ledger {totals:?}, increment {increment:?})")]
    InvariantViolation {
        round: u32,
        law: &'static str,
        totals: [i32; 4],
        increment: [i8; 4],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RewardLedger {
    totals: [i32; 4],
    round: u32,
}

impl RewardLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ledger with arbitrary totals; no laws are checked.
    pub fn from_totals(totals: [i32; 4], round: u32) -> Self {
        Self { totals, round }
    }

    pub fn totals(&self) -> [i32; 4] {
        self.totals
    }

    pub fn get(&self, strategy: Strategy) -> i32 {
        self.totals[strategy.index()]
    }

    /// Number of rounds accumulated so far.
    pub fn round(&self) -> u32 {
        self.round
    }

    /// Add one round of counterfactual rewards and re-assert every law.
    pub fn update(&mut self, cf: CounterfactualVector) -> Result<(), LedgerError> {
        self.apply(cf);
        self.check(cf)
    }

    /// Add one round without checking.
    pub fn apply(&mut self, cf: CounterfactualVector) {
        for (total, inc) in self.totals.iter_mut().zip(cf.0) {
            *total += i32::from(inc);
        }
        self.round += 1;
    }

    fn check(&self, cf: CounterfactualVector) -> Result<(), LedgerError> {
        let violation = |law| LedgerError::InvariantViolation {
            round: self.round,
            law,
            totals: self.totals,
            increment: cf.0,
        };
        if cf.0.iter().any(|v| v.abs() > 1) {
            return Err(violation("increment outside [-1, 1]"));
        }
        if !cf.is_admissible() {
            return Err(violation(
                "counterfactual vector outside the admissible set",
            ));
        }
        if !cf.satisfies_mod4() {
            return Err(violation("v1 - v2 + v3 - v4 not divisible by 4"));
        }
        self.check_laws().map_err(violation)
    }

    /// Check the ledger laws on the current totals alone.
    pub fn check_laws(&self) -> Result<(), &'static str> {
        let [r1, r2, r3, r4] = self.totals;
        if r1 + r2 != 0 {
            return Err("R1 + R2 != 0");
        }
        if r3 + r4 != 0 {
            return Err("R3 + R4 != 0");
        }
        if !(-1..=1).contains(&r3) || !(-1..=1).contains(&r4) {
            return Err("uninformative total outside [-1, 1]");
        }
        Ok(())
    }

    /// Leading strategy (lowest index on ties) and its margin over the runner-up.
    pub fn leader_gap(&self) -> (Strategy, i32) {
        let mut leader = 0;
        for i in 1..4 {
            if self.totals[i] > self.totals[leader] {
                leader = i;
            }
        }
        let second = (0..4)
            .filter(|&i| i != leader)
            .map(|i| self.totals[i])
            .max()
            .expect("three other entries");
        (
            Strategy::from_index(leader).expect("index < 4"),
            self.totals[leader] - second,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_adds_elementwise() {
        let mut l = RewardLedger::new();
        l.update(CounterfactualVector([1, -1, 1, -1])).unwrap();
        assert_eq!(l.totals(), [1, -1, 1, -1]);
        assert_eq!(l.round(), 1);

        let mut l = RewardLedger::from_totals([5, -5, 1, -1], 10);
        l.update(CounterfactualVector([0, 0, 0, 0])).unwrap();
        assert_eq!(l.totals(), [5, -5, 1, -1]);
        assert_eq!(l.round(), 11);
    }

    #[test]
    fn uninformative_overflow_is_rejected() {
        let mut l = RewardLedger::from_totals([5, -5, 1, -1], 10);
        let err = l.update(CounterfactualVector([1, -1, 1, -1])).unwrap_err();
        match err {
            LedgerError::InvariantViolation { totals, law, .. } => {
                assert_eq!(totals, [6, -6, 2, -2]);
                assert_eq!(law, "uninformative total outside [-1, 1]");
            }
        }
    }

    #[test]
    fn inadmissible_increment_is_rejected() {
        let mut l = RewardLedger::new();
        assert!(l.update(CounterfactualVector([1, 0, 0, -1])).is_err());
    }

    #[test]
    fn leader_gap_examples() {
        assert_eq!(
            RewardLedger::from_totals([6, -6, 1, -1], 0).leader_gap(),
            (Strategy::Truthful, 5)
        );
        assert_eq!(RewardLedger::new().leader_gap(), (Strategy::Truthful, 0));
        assert_eq!(
            RewardLedger::from_totals([-3, 3, 0, 0], 0).leader_gap(),
            (Strategy::Flip, 3)
        );
    }
}

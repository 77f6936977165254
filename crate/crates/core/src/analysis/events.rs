//! Ledger regions visited by a pair of agents: "bad" regions where the two
//! are pulled towards different informative strategies, and "good" regions
//! where both are far into the same one.

use std::fmt;

use crate::engine::RoundRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventConfig {
    pub c0: i32,
    pub u: i32,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self { c0: 20, u: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventState {
    /// `R1 > c0` and `S2 > c0`.
    Bad12,
    /// `R2 > c0` and `S1 > c0`.
    Bad21,
    /// `R1 >= u` and `S1 >= u`.
    Good11,
    /// `R2 >= u` and `S2 >= u`.
    Good22,
    Mid,
}

impl EventState {
    pub const ALL: [EventState; 5] = [
        EventState::Bad12,
        EventState::Bad21,
        EventState::Good11,
        EventState::Good22,
        EventState::Mid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventState::Bad12 => "bad12",
            EventState::Bad21 => "bad21",
            EventState::Good11 => "good11",
            EventState::Good22 => "good22",
            EventState::Mid => "mid",
        }
    }
}

impl fmt::Display for EventState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every predicate that holds for Alice's ledger `r` and Bob's ledger `s`.
/// Under the ledger laws at most one does when `c0, u >= 1`.
pub fn event_flags(r: [i32; 4], s: [i32; 4], cfg: EventConfig) -> Vec<EventState> {
    let mut out = Vec::new();
    if r[0] > cfg.c0 && s[1] > cfg.c0 {
        out.push(EventState::Bad12);
    }
    if r[1] > cfg.c0 && s[0] > cfg.c0 {
        out.push(EventState::Bad21);
    }
    if r[0] >= cfg.u && s[0] >= cfg.u {
        out.push(EventState::Good11);
    }
    if r[1] >= cfg.u && s[1] >= cfg.u {
        out.push(EventState::Good22);
    }
    out
}

pub fn classify(r: [i32; 4], s: [i32; 4], cfg: EventConfig) -> EventState {
    event_flags(r, s, cfg)
        .first()
        .copied()
        .unwrap_or(EventState::Mid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventTimeline {
    pub config: EventConfig,
    /// State after each round, rounds `1..=T`.
    pub states: Vec<EventState>,
}

impl EventTimeline {
    /// Rounds spent in `state`.
    pub fn visits(&self, state: EventState) -> usize {
        self.states.iter().filter(|s| **s == state).count()
    }

    pub fn final_state(&self) -> Option<EventState> {
        self.states.last().copied()
    }

    /// Length of the trailing run of the final state.
    pub fn final_dwell(&self) -> usize {
        match self.final_state() {
            Some(last) => self.states.iter().rev().take_while(|s| **s == last).count(),
            None => 0,
        }
    }
}

/// Classify each round's post-update ledgers.
pub fn event_timeline(records: &[RoundRecord], cfg: EventConfig) -> EventTimeline {
    EventTimeline {
        config: cfg,
        states: records
            .iter()
            .map(|r| classify(r.ledger_a, r.ledger_b, cfg))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let cfg = EventConfig::default();
        assert_eq!(
            classify([25, -25, 0, 0], [-22, 22, 1, -1], cfg),
            EventState::Bad12
        );
        assert_eq!(
            classify(
                [12, -12, 1, -1],
                [11, -11, 0, 0],
                EventConfig { c0: 20, u: 10 }
            ),
            EventState::Good11
        );
        assert_eq!(classify([0; 4], [0; 4], cfg), EventState::Mid);
    }

    #[test]
    fn timeline_counts() {
        let t = EventTimeline {
            config: EventConfig::default(),
            states: vec![
                EventState::Mid,
                EventState::Good11,
                EventState::Mid,
                EventState::Good11,
                EventState::Good11,
            ],
        };
        assert_eq!(t.visits(EventState::Good11), 3);
        assert_eq!(t.final_state(), Some(EventState::Good11));
        assert_eq!(t.final_dwell(), 2);
    }

    proptest! {
        #[test]
        fn lawful_ledgers_hit_at_most_one_event(
            r1 in -100i32..100, s1 in -100i32..100,
            r3 in -1i32..=1, s3 in -1i32..=1,
            c0 in 1i32..40, u in 1i32..40,
        ) {
            let r = [r1, -r1, r3, -r3];
            let s = [s1, -s1, s3, -s3];
            let hits = event_flags(r, s, EventConfig { c0, u }).len();
            prop_assert!(hits <= 1);
        }
    }
}

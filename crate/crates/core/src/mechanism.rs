//! Sequential correlated-agreement payments.
//!
//! Reports are bits. At round `t` Alice is paid for agreeing with Bob on the
//! current task, minus agreement with Bob's previous report; Bob symmetrically.
//! The report before round 1 is the boundary value 0 for both agents.

use std::fmt;
use std::str::FromStr;

/// Report used in place of the (nonexistent) round-0 report.
pub const BOUNDARY_REPORT: u8 = 0;

/// The four pure strategies, in ledger order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Truthful = 0,
    Flip = 1,
    AlwaysOne = 2,
    AlwaysZero = 3,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Truthful,
        Strategy::Flip,
        Strategy::AlwaysOne,
        Strategy::AlwaysZero,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Constant-report strategies carry no information about the signal.
    pub fn is_uninformative(self) -> bool {
        matches!(self, Strategy::AlwaysOne | Strategy::AlwaysZero)
    }

    /// Report produced from `signal`.
    pub fn apply(self, signal: u8) -> u8 {
        debug_assert!(signal <= 1);
        match self {
            Strategy::Truthful => signal,
            Strategy::Flip => 1 - signal,
            Strategy::AlwaysOne => 1,
            Strategy::AlwaysZero => 0,
        }
    }

    /// 1-based option number used in CSV files.
    pub fn option_number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_option_number(n: u8) -> Option<Self> {
        n.checked_sub(1).and_then(|i| Self::from_index(i as usize))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "opt{}", self.option_number())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix("opt").unwrap_or(s);
        digits
            .parse::<u8>()
            .ok()
            .and_then(Strategy::from_option_number)
            .ok_or_else(|| format!("not a strategy: {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub fn peer(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }
}

/// Payments of one round; both entries lie in `{-1, 0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundPayment {
    pub r: i8,
    pub s: i8,
}

#[inline]
fn agree(a: u8, b: u8) -> i8 {
    (a == b) as i8
}

/// Correlated-agreement payment given both current and both previous reports.
pub fn ca_payment(xhat_t: u8, yhat_t: u8, xhat_prev: u8, yhat_prev: u8) -> RoundPayment {
    RoundPayment {
        r: agree(xhat_t, yhat_t) - agree(xhat_t, yhat_prev),
        s: agree(yhat_t, xhat_t) - agree(yhat_t, xhat_prev),
    }
}

/// Per-strategy payment the agent would have received this round, with the
/// peer's reports held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CounterfactualVector(pub [i8; 4]);

impl CounterfactualVector {
    /// The only vectors the correlated-agreement rule can produce.
    pub const ADMISSIBLE: [[i8; 4]; 5] = [
        [0, 0, 0, 0],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
        [-1, 1, 1, -1],
        [-1, 1, -1, 1],
    ];

    pub fn get(&self, strategy: Strategy) -> i8 {
        self.0[strategy.index()]
    }

    /// Membership in the five-element admissible set.
    pub fn is_admissible(&self) -> bool {
        Self::ADMISSIBLE.contains(&self.0)
    }

    /// `v1 - v2 + v3 - v4` is divisible by 4.
    pub fn satisfies_mod4(&self) -> bool {
        let [a, b, c, d] = self.0.map(i32::from);
        (a - b + c - d).rem_euclid(4) == 0
    }
}

/// Counterfactual payments for one agent. The formula is the same for both
/// roles; `role` only documents which peer the reports belong to.
pub fn counterfactual_vector(
    _role: Role,
    own_signal: u8,
    peer_report_t: u8,
    peer_report_prev: u8,
) -> CounterfactualVector {
    CounterfactualVector(Strategy::ALL.map(|opt| {
        let report = opt.apply(own_signal);
        agree(report, peer_report_t) - agree(report, peer_report_prev)
    }))
}

/// A sequential mechanism whose round payment depends on the last `rank()`
/// report pairs. Windows are oldest-first and padded with the boundary report.
pub trait SequentialMechanism {
    fn rank(&self) -> usize;

    /// `alice` and `bob` each hold exactly `rank()` reports ending at round `t`.
    fn payment(&self, alice: &[u8], bob: &[u8]) -> RoundPayment;

    /// Counterfactual vector for `role`: its current report is replaced by each
    /// strategy applied to `own_signal`; every other report is held fixed.
    fn counterfactual(
        &self,
        role: Role,
        own_signal: u8,
        alice: &[u8],
        bob: &[u8],
    ) -> CounterfactualVector {
        let k = self.rank();
        CounterfactualVector(Strategy::ALL.map(|opt| {
            let mut a = alice.to_vec();
            let mut b = bob.to_vec();
            match role {
                Role::Alice => {
                    a[k - 1] = opt.apply(own_signal);
                    self.payment(&a, &b).r
                }
                Role::Bob => {
                    b[k - 1] = opt.apply(own_signal);
                    self.payment(&a, &b).s
                }
            }
        }))
    }
}

/// The rank-2 correlated-agreement rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorrelatedAgreement;

impl SequentialMechanism for CorrelatedAgreement {
    fn rank(&self) -> usize {
        2
    }

    fn payment(&self, alice: &[u8], bob: &[u8]) -> RoundPayment {
        ca_payment(alice[1], bob[1], alice[0], bob[0])
    }
}

/// Rolling report window that feeds a [`SequentialMechanism`].
#[derive(Debug, Clone)]
pub struct ReportWindow {
    alice: Vec<u8>,
    bob: Vec<u8>,
}

impl ReportWindow {
    pub fn new(rank: usize) -> Self {
        assert!(rank >= 1);
        Self {
            alice: vec![BOUNDARY_REPORT; rank],
            bob: vec![BOUNDARY_REPORT; rank],
        }
    }

    /// Shift in the round's reports; returns the windows ending at this round.
    pub fn push(&mut self, xhat: u8, yhat: u8) -> (&[u8], &[u8]) {
        self.alice.rotate_left(1);
        self.bob.rotate_left(1);
        let k = self.alice.len();
        self.alice[k - 1] = xhat;
        self.bob[k - 1] = yhat;
        (&self.alice, &self.bob)
    }
}

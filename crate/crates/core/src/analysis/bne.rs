//! Expected payments under consistent (round-independent) strategies and the
//! best-response structure they induce.

use thiserror::Error;

use crate::signal::SignalDistribution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("{key} = {value} is not a probability")]
    NotAProbability { key: &'static str, value: f64 },
    #[error("grid step {0} does not divide [0, 1]")]
    BadStep(f64),
}

/// `p1`/`q1`: probability of reporting 1 on signal 1; `p0`/`q0`: reporting
/// 0 on signal 0. `p` is Alice, `q` is Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistentStrategy {
    pub p0: f64,
    pub p1: f64,
    pub q0: f64,
    pub q1: f64,
}

impl ConsistentStrategy {
    pub fn new(p0: f64, p1: f64, q0: f64, q1: f64) -> Result<Self, StrategyError> {
        for (key, value) in [("p0", p0), ("p1", p1), ("q0", q0), ("q1", q1)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(StrategyError::NotAProbability { key, value });
            }
        }
        Ok(Self { p0, p1, q0, q1 })
    }

    pub fn truthful() -> Self {
        Self {
            p0: 1.0,
            p1: 1.0,
            q0: 1.0,
            q1: 1.0,
        }
    }

    pub fn flipping() -> Self {
        Self {
            p0: 0.0,
            p1: 0.0,
            q0: 0.0,
            q1: 0.0,
        }
    }

    /// Alice's weights over (Opt1, Opt2, Opt3, Opt4) realizing `(p0, p1)`.
    pub fn alice_mixture(&self) -> [f64; 4] {
        mixture(self.p0, self.p1)
    }

    pub fn bob_mixture(&self) -> [f64; 4] {
        mixture(self.q0, self.q1)
    }
}

/// A per-round mixture over the four pure strategies with the given report
/// probabilities. Opt1 carries the overlap `p0 + p1 - 1` when positive,
/// Opt2 the shortfall otherwise.
pub fn mixture(p0: f64, p1: f64) -> [f64; 4] {
    let truthful = (p0 + p1 - 1.0).max(0.0);
    let one = p1 - truthful;
    let zero = p0 - truthful;
    let flip = (1.0 - truthful - one - zero).max(0.0);
    [truthful, flip, one, zero]
}

/// Expected per-round CA payment `(Alice, Bob)`: same-round agreement minus
/// agreement across independent rounds. The two coincide.
pub fn bne_expected_payoff(dist: &SignalDistribution, s: &ConsistentStrategy) -> (f64, f64) {
    let ConsistentStrategy { p0, p1, q0, q1 } = *s;
    let agree = dist.p11() * (p1 * q1 + (1.0 - p1) * (1.0 - q1))
        + dist.p00() * (p0 * q0 + (1.0 - p0) * (1.0 - q0))
        + dist.p10() * (p1 * (1.0 - q0) + (1.0 - p1) * q0)
        + dist.p01() * (q1 * (1.0 - p0) + (1.0 - q1) * p0);
    let a = dist.alice_marginal() * p1 + (1.0 - dist.alice_marginal()) * (1.0 - p0);
    let b = dist.bob_marginal() * q1 + (1.0 - dist.bob_marginal()) * (1.0 - q0);
    let cross = a * b + (1.0 - a) * (1.0 - b);
    let payoff = agree - cross;
    (payoff, payoff)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub payoff: f64,
    /// Grid points `(p0, p1)` attaining `payoff` within 1e-12.
    pub maximizers: Vec<(f64, f64)>,
}

/// Grid step used when none is given.
pub const DEFAULT_GRID_STEP: f64 = 0.05;

fn grid(step: f64) -> Result<Vec<f64>, StrategyError> {
    let cells = (1.0 / step).round();
    if step.is_nan() || step <= 0.0 || (cells * step - 1.0).abs() > 1e-9 {
        return Err(StrategyError::BadStep(step));
    }
    Ok((0..=cells as usize).map(|k| k as f64 / cells).collect())
}

fn argmax(scored: Vec<((f64, f64), f64)>) -> BestResponse {
    let payoff = scored
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let maximizers = scored
        .into_iter()
        .filter(|(_, v)| payoff - v <= 1e-12)
        .map(|(p, _)| p)
        .collect();
    BestResponse { payoff, maximizers }
}

/// Alice's best responses on a `step` grid over `(p0, p1)` against Bob's
/// fixed `(q0, q1)`.
pub fn best_response_grid(
    dist: &SignalDistribution,
    q0: f64,
    q1: f64,
    step: f64,
) -> Result<BestResponse, StrategyError> {
    ConsistentStrategy::new(0.0, 0.0, q0, q1)?;
    let g = grid(step)?;
    let mut scored = Vec::with_capacity(g.len() * g.len());
    for &p0 in &g {
        for &p1 in &g {
            let (a, _) = bne_expected_payoff(dist, &ConsistentStrategy { p0, p1, q0, q1 });
            scored.push(((p0, p1), a));
        }
    }
    Ok(argmax(scored))
}

/// Bob's best responses on a `step` grid over `(q0, q1)` against Alice's
/// fixed `(p0, p1)`.
pub fn bob_best_response_grid(
    dist: &SignalDistribution,
    p0: f64,
    p1: f64,
    step: f64,
) -> Result<BestResponse, StrategyError> {
    ConsistentStrategy::new(p0, p1, 0.0, 0.0)?;
    let g = grid(step)?;
    let mut scored = Vec::with_capacity(g.len() * g.len());
    for &q0 in &g {
        for &q1 in &g {
            let (_, b) = bne_expected_payoff(dist, &ConsistentStrategy { p0, p1, q0, q1 });
            scored.push(((q0, q1), b));
        }
    }
    Ok(argmax(scored))
}

/// Alice's grid best responses `(p0, p1)` to `(q0, q1)` against which
/// `(q0, q1)` is itself a best response, i.e. the equilibrium profiles on
/// the grid that contain Bob's strategy.
pub fn equilibrium_grid(
    dist: &SignalDistribution,
    q0: f64,
    q1: f64,
    step: f64,
) -> Result<Vec<(f64, f64)>, StrategyError> {
    let alice = best_response_grid(dist, q0, q1, step)?;
    let mut out = Vec::new();
    for (p0, p1) in alice.maximizers {
        let bob = bob_best_response_grid(dist, p0, p1, step)?;
        let (_, at_q) = bne_expected_payoff(dist, &ConsistentStrategy { p0, p1, q0, q1 });
        if bob.payoff - at_q <= 1e-12 {
            out.push((p0, p1));
        }
    }
    Ok(out)
}

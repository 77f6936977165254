//! Update functions: maps from a cumulative-reward 4-vector to a
//! distribution over the four strategies.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mechanism::Strategy;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpdateError {
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("noise_max must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("ratio must exceed 1, got {0}")]
    RatioNotAboveOne(f64),
    #[error("cap must lie in [0.25, 1], got {0}")]
    CapOutOfRange(f64),
}

type UpdateFn = dyn Fn([i32; 4]) -> [f64; 4] + Send + Sync;

/// User-supplied update function, used by the assumption checkers and the
/// necessity experiments.
#[derive(Clone)]
pub struct CustomUpdate {
    name: String,
    f: Arc<UpdateFn>,
}

impl fmt::Debug for CustomUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomUpdate")
            .field("name", &self.name)
            .finish()
    }
}

impl CustomUpdate {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn([i32; 4]) -> [f64; 4] + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Tabulated function; rows missing from the table map to `default`.
    pub fn from_table(
        name: impl Into<String>,
        table: HashMap<[i32; 4], [f64; 4]>,
        default: [f64; 4],
    ) -> Self {
        Self::new(name, move |r| table.get(&r).copied().unwrap_or(default))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Softmax with `R1` inflated by one before weighting. Breaks exchangeability.
    pub fn biased_softmax() -> Self {
        Self::new("biased_softmax", |mut r| {
            r[0] += 1;
            softmax(r, 1.0)
        })
    }

    /// Weights proportional to `max(R) - R_i + 1`. Reverses the reward order.
    pub fn anti_monotone() -> Self {
        Self::new("anti_monotone", |r| {
            let max = *r.iter().max().expect("four entries");
            let w = r.map(|v| f64::from(max - v + 1));
            let total: f64 = w.iter().sum();
            w.map(|v| v / total)
        })
    }

    /// Mixture of the `beta = 1` softmax with the uniform distribution whose
    /// top probability can never exceed `cap`.
    pub fn capped_softmax(cap: f64) -> Result<Self, UpdateError> {
        if !(0.25..=1.0).contains(&cap) {
            return Err(UpdateError::CapOutOfRange(cap));
        }
        let uniform_weight = 4.0 * (1.0 - cap) / 3.0;
        Ok(Self::new(format!("capped_softmax({cap})"), move |r| {
            softmax(r, 1.0).map(|p| (1.0 - uniform_weight) * p + uniform_weight / 4.0)
        }))
    }

    fn call(&self, r: [i32; 4]) -> [f64; 4] {
        (self.f)(r)
    }
}

/// Named, parameterized update function.
#[derive(Debug, Clone)]
pub enum UpdateFunction {
    /// Weights `3^(R_i / 2)`.
    Hedge1,
    /// Weights `exp(beta * R_i)`.
    Hedge2 {
        beta: f64,
    },
    /// Argmax of `R_i + p_i` with `p_i` iid uniform on `[0, noise_max]`.
    Fpl {
        noise_max: f64,
    },
    /// Uniform over the argmax set.
    Ftl,
    /// Closed form of discrete replicator dynamics, weights `ratio^(R_i / 2)`
    /// where `ratio = h(1) / h(-1)`.
    Replicator {
        ratio: f64,
    },
    Custom(CustomUpdate),
}

/// Output of [`UpdateFunction::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub probs: [f64; 4],
    /// Per-entry standard error; `None` for closed-form evaluations.
    pub std_err: Option<[f64; 4]>,
}

/// Monte-Carlo settings for FPL evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub fpl_samples: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            fpl_samples: 100_000,
            seed: 0,
        }
    }
}

impl UpdateFunction {
    pub fn validate(&self) -> Result<(), UpdateError> {
        match *self {
            UpdateFunction::Hedge2 { beta } if beta.is_nan() || beta <= 0.0 => {
                Err(UpdateError::NonPositiveBeta(beta))
            }
            UpdateFunction::Fpl { noise_max } if noise_max.is_nan() || noise_max <= 0.0 => {
                Err(UpdateError::NonPositiveNoise(noise_max))
            }
            UpdateFunction::Replicator { ratio } if ratio.is_nan() || ratio <= 1.0 => {
                Err(UpdateError::RatioNotAboveOne(ratio))
            }
            _ => Ok(()),
        }
    }

    /// Short label, e.g. `hedge2`, `hedge2(beta=0.5)` or `fpl4`.
    pub fn label(&self) -> String {
        match self {
            UpdateFunction::Hedge1 => "hedge1".into(),
            UpdateFunction::Hedge2 { beta } if *beta == 1.0 => "hedge2".into(),
            UpdateFunction::Hedge2 { beta } => format!("hedge2(beta={beta})"),
            UpdateFunction::Fpl { noise_max } => format!("fpl{noise_max}"),
            UpdateFunction::Ftl => "ftl".into(),
            UpdateFunction::Replicator { ratio } => format!("replicator(ratio={ratio})"),
            UpdateFunction::Custom(c) => c.name().to_string(),
        }
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self, UpdateFunction::Fpl { .. })
    }

    /// Closed-form probabilities. FPL is integrated exactly (its integrand
    /// is piecewise polynomial in the noise of the chosen option).
    pub fn exact(&self, r: [i32; 4]) -> [f64; 4] {
        match self {
            UpdateFunction::Hedge1 => softmax(r, 3f64.ln() / 2.0),
            UpdateFunction::Hedge2 { beta } => softmax(r, *beta),
            UpdateFunction::Replicator { ratio } => softmax(r, ratio.ln() / 2.0),
            UpdateFunction::Ftl => argmax_uniform(r),
            UpdateFunction::Fpl { noise_max } => fpl_exact(r, *noise_max),
            UpdateFunction::Custom(c) => c.call(r),
        }
    }

    /// Probabilities as the experiments report them: closed form where one
    /// exists, a seeded Monte-Carlo estimate with standard errors for FPL.
    pub fn evaluate(&self, r: [i32; 4], opts: &EvalOptions) -> Evaluation {
        match self {
            UpdateFunction::Fpl { noise_max } => {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                fpl_monte_carlo(r, *noise_max, opts.fpl_samples, &mut rng)
            }
            _ => Evaluation {
                probs: self.exact(r),
                std_err: None,
            },
        }
    }

    /// Draw a strategy. FPL draws fresh noise and takes the argmax, which has
    /// the same law as sampling from its probabilities.
    pub fn sample<R: Rng + ?Sized>(&self, r: [i32; 4], rng: &mut R) -> Strategy {
        match self {
            UpdateFunction::Fpl { noise_max } => fpl_draw(r, *noise_max, rng),
            UpdateFunction::Ftl => {
                let leaders = argmax_set(r);
                leaders[rng.random_range(0..leaders.len())]
            }
            _ => sample_categorical(&self.exact(r), rng),
        }
    }
}

/// Softmax of `rate * R` with the maximum subtracted first.
pub(crate) fn softmax(r: [i32; 4], rate: f64) -> [f64; 4] {
    let max = *r.iter().max().expect("four entries");
    let w = r.map(|v| (rate * f64::from(v - max)).exp());
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

pub(crate) fn argmax_set(r: [i32; 4]) -> Vec<Strategy> {
    let max = *r.iter().max().expect("four entries");
    Strategy::ALL
        .into_iter()
        .filter(|s| r[s.index()] == max)
        .collect()
}

fn argmax_uniform(r: [i32; 4]) -> [f64; 4] {
    let leaders = argmax_set(r);
    let share = 1.0 / leaders.len() as f64;
    let mut p = [0.0; 4];
    for s in leaders {
        p[s.index()] = share;
    }
    p
}

/// Categorical draw from `probs` using one uniform.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64; 4], rng: &mut R) -> Strategy {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return Strategy::from_index(i).expect("index < 4");
        }
    }
    // Rounding left `u` above the accumulated mass.
    Strategy::from_index(last).expect("index < 4")
}

fn fpl_draw<R: Rng + ?Sized>(r: [i32; 4], noise_max: f64, rng: &mut R) -> Strategy {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &reward) in r.iter().enumerate() {
        let value = f64::from(reward) + noise_max * rng.random::<f64>();
        // Strict comparison: exact float ties go to the lowest index.
        if value > best_value {
            best = i;
            best_value = value;
        }
    }
    Strategy::from_index(best).expect("index < 4")
}

fn fpl_monte_carlo<R: Rng + ?Sized>(
    r: [i32; 4],
    noise_max: f64,
    samples: usize,
    rng: &mut R,
) -> Evaluation {
    let n = samples.max(1);
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[fpl_draw(r, noise_max, rng).index()] += 1;
    }
    let probs = counts.map(|c| c as f64 / n as f64);
    let std_err = probs.map(|p| (p * (1.0 - p) / n as f64).sqrt());
    Evaluation {
        probs,
        std_err: Some(std_err),
    }
}

// Three-point Gauss-Legendre on [-1, 1]; exact for the cubic pieces below.
const GL_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// `Pr[R_i + p_i is the maximum]` with iid `p ~ U[0, c]`, by integrating
/// over `p_i`: the other three must land below `R_i + p_i - R_j`.
fn fpl_exact(r: [i32; 4], c: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        let others: Vec<f64> = (0..4)
            .filter(|&j| j != i)
            .map(|j| f64::from(r[i] - r[j]))
            .collect();
        let mut cuts = vec![0.0, c];
        for &d in &others {
            for b in [-d, c - d] {
                if b > 0.0 && b < c {
                    cuts.push(b);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let integrand = |p: f64| -> f64 {
            others
                .iter()
                .map(|&d| ((d + p) / c).clamp(0.0, 1.0))
                .product()
        };
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                total += wt * half * integrand(mid + half * x);
            }
        }
        out[i] = total / c;
    }
    out
}

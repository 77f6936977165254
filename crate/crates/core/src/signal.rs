//! Joint law of the two agents' binary signals.

use rand::Rng;
use thiserror::Error;

/// Tolerance on the simplex sum of a distribution.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("p11+p00+p10+p01 = {sum}, expected 1 (keys p11, p00, p10, p01)")]
    SumNotOne { sum: f64 },
    #[error("{key} = {value}: every outcome needs positive mass (full support)")]
    ZeroMass { key: &'static str, value: f64 },
    #[error(
        "not positively correlated: min(p11, p00) = {min_agree} <= max(p10, p01) = {max_disagree}"
    )]
    NotPositivelyCorrelated { min_agree: f64, max_disagree: f64 },
    #[error("{key} = {value} is not a finite probability")]
    NotAProbability { key: &'static str, value: f64 },
}

/// Validated joint distribution of `(X, Y)` on `{0,1}^2`.
///
/// Immutable once built: the only constructors run every check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalDistribution {
    p11: f64,
    p00: f64,
    p10: f64,
    p01: f64,
}

/// Drift constants of a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftConstants {
    /// `p11 + p00 - p10 - p01`: expected same-round agreement edge.
    pub gamma1: f64,
    /// `(p11 - p00)^2 - (p10 - p01)^2`: the same quantity for independent rounds.
    pub gamma2: f64,
}

impl SignalDistribution {
    /// Validate the four masses, in the order `p11, p00, p10, p01`.
    pub fn new(p11: f64, p00: f64, p10: f64, p01: f64) -> Result<Self, SignalError> {
        let entries = [("p11", p11), ("p00", p00), ("p10", p10), ("p01", p01)];
        for (key, value) in entries {
            if !value.is_finite() || value < 0.0 {
                return Err(SignalError::NotAProbability { key, value });
            }
        }
        let sum = p11 + p00 + p10 + p01;
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SignalError::SumNotOne { sum });
        }
        for (key, value) in entries {
            if value <= 0.0 {
                return Err(SignalError::ZeroMass { key, value });
            }
        }
        let min_agree = p11.min(p00);
        let max_disagree = p10.max(p01);
        if min_agree <= max_disagree {
            return Err(SignalError::NotPositivelyCorrelated {
                min_agree,
                max_disagree,
            });
        }
        Ok(Self { p11, p00, p10, p01 })
    }

    /// Divide the weights by their sum, then validate.
    pub fn normalized(w11: f64, w00: f64, w10: f64, w01: f64) -> Result<Self, SignalError> {
        let sum = w11 + w00 + w10 + w01;
        if !sum.is_finite() || sum <= 0.0 {
            return Err(SignalError::SumNotOne { sum });
        }
        Self::new(w11 / sum, w00 / sum, w10 / sum, w01 / sum)
    }

    /// Default experiment distribution: weights 0.4/0.4/0.2/0.2 normalized,
    /// i.e. `(1/3, 1/3, 1/6, 1/6)`.
    pub fn default_preset() -> Self {
        Self::normalized(0.4, 0.4, 0.2, 0.2).expect("preset weights are valid")
    }

    pub fn p11(&self) -> f64 {
        self.p11
    }
    pub fn p00(&self) -> f64 {
        self.p00
    }
    pub fn p10(&self) -> f64 {
        self.p10
    }
    pub fn p01(&self) -> f64 {
        self.p01
    }

    /// Mass of the outcome `(x, y)`.
    pub fn mass(&self, x: u8, y: u8) -> f64 {
        match (x, y) {
            (1, 1) => self.p11,
            (0, 0) => self.p00,
            (1, 0) => self.p10,
            (0, 1) => self.p01,
            _ => panic!("signals are bits, got ({x}, {y})"),
        }
    }

    /// `Pr[X = 1]`.
    pub fn alice_marginal(&self) -> f64 {
        self.p11 + self.p10
    }

    /// `Pr[Y = 1]`.
    pub fn bob_marginal(&self) -> f64 {
        self.p11 + self.p01
    }

    /// One categorical draw over the four outcomes; consumes one uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u8, u8) {
        let u: f64 = rng.random();
        if u < self.p11 {
            (1, 1)
        } else if u < self.p11 + self.p00 {
            (0, 0)
        } else if u < self.p11 + self.p00 + self.p10 {
            (1, 0)
        } else {
            (0, 1)
        }
    }

    pub fn drift_constants(&self) -> DriftConstants {
        DriftConstants {
            gamma1: self.p11 + self.p00 - self.p10 - self.p01,
            gamma2: (self.p11 - self.p00).powi(2) - (self.p10 - self.p01).powi(2),
        }
    }
}

/// Draw a random valid distribution (rejection sampling on a flat simplex).
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R) -> SignalDistribution {
    loop {
        // Uniform point on the 3-simplex via sorted uniforms.
        let mut cuts = [
            rng.random::<f64>(),
            rng.random::<f64>(),
            rng.random::<f64>(),
        ];
        cuts.sort_by(f64::total_cmp);
        let w = [cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], 1.0 - cuts[2]];
        if let Ok(dist) = SignalDistribution::normalized(w[0], w[1], w[2], w[3]) {
            return dist;
        }
    }
}

use std::collections::HashMap;

use thiserror::Error;

use crate::engine::RunTrace;
use crate::mechanism::{Role, Strategy};

/// Fewest qualifying rounds for a drift estimate.
pub const MIN_DRIFT_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("insufficient data: {found} qualifying rounds, need {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("traces lack round records; rerun with full trace detail")]
    MissingRecords,
}

/// Which informative strategy the peer must have played at `t - 1` and `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftCondition {
    PeerTruthful,
    PeerFlip,
}

impl DriftCondition {
    fn strategy(self) -> Strategy {
        match self {
            DriftCondition::PeerTruthful => Strategy::Truthful,
            DriftCondition::PeerFlip => Strategy::Flip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEstimate {
    pub mean: f64,
    pub std_err: f64,
    /// 95% normal-approximation interval.
    pub ci: (f64, f64),
    pub samples: usize,
}

/// Mean of `r1,t - r2,t` for `role` over rounds `t >= 2` at which the peer
/// played the conditioned strategy both at `t` and `t - 1`, pooled over runs.
///
/// The standard error is clustered by `(master_seed, run)`: traces from
/// different configurations with the same seed share signal streams and are
/// not independent samples.
pub fn conditional_drift(
    traces: &[RunTrace],
    role: Role,
    condition: DriftCondition,
) -> Result<DriftEstimate, AnalysisError> {
    let want = condition.strategy();
    // (sum, count) per cluster.
    let mut clusters: HashMap<(u64, u64), (f64, f64)> = HashMap::new();
    let mut samples = 0usize;
    for trace in traces {
        let records = trace
            .records
            .as_ref()
            .ok_or(AnalysisError::MissingRecords)?;
        let cluster = clusters.entry((trace.master_seed, trace.run)).or_default();
        for w in records.windows(2) {
            let (prev, cur) = (&w[0], &w[1]);
            let (peer_prev, peer_cur, cf) = match role {
                Role::Alice => (prev.strat_b, cur.strat_b, cur.cf_a),
                Role::Bob => (prev.strat_a, cur.strat_a, cur.cf_b),
            };
            if peer_prev == want && peer_cur == want {
                cluster.0 += f64::from(cf.0[0] - cf.0[1]);
                cluster.1 += 1.0;
                samples += 1;
            }
        }
    }
    if samples < MIN_DRIFT_SAMPLES {
        return Err(AnalysisError::InsufficientData {
            found: samples,
            needed: MIN_DRIFT_SAMPLES,
        });
    }
    let n = samples as f64;
    let mean = clusters.values().map(|c| c.0).sum::<f64>() / n;
    let k = clusters.values().filter(|c| c.1 > 0.0).count() as f64;
    let resid: f64 = clusters.values().map(|c| (c.0 - mean * c.1).powi(2)).sum();
    let std_err = if k > 1.0 {
        (resid * k / (k - 1.0)).sqrt() / n
    } else {
        f64::NAN
    };
    Ok(DriftEstimate {
        mean,
        std_err,
        ci: (mean - 1.96 * std_err, mean + 1.96 * std_err),
        samples,
    })
}

use crate::engine::{RoundRecord, RunTrace};
use crate::mechanism::Role;

/// `Reg(t)` for `t = 1..=T` rebuilt from round records: the best
/// counterfactual total minus the realized payments. Negative values are
/// kept as computed.
pub fn regret(records: &[RoundRecord], role: Role) -> Vec<i32> {
    let mut ledger = [0i32; 4];
    let mut paid = 0i32;
    records
        .iter()
        .map(|r| {
            let (cf, pay) = match role {
                Role::Alice => (r.cf_a, r.payment.r),
                Role::Bob => (r.cf_b, r.payment.s),
            };
            for (l, v) in ledger.iter_mut().zip(cf.0) {
                *l += i32::from(v);
            }
            paid += i32::from(pay);
            ledger.iter().max().expect("four entries") - paid
        })
        .collect()
}

/// `Reg(T)` from a final ledger and a realized total.
pub fn final_regret(ledger: [i32; 4], realized: i32) -> i32 {
    ledger.iter().max().expect("four entries") - realized
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub mean: f64,
    pub std_err: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub negative: usize,
}

impl RegretSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean,
            std_err: (var / n).sqrt(),
            q10: quantile(&sorted, 0.1),
            median: quantile(&sorted, 0.5),
            q90: quantile(&sorted, 0.9),
            negative: values.iter().filter(|v| **v < 0.0).count(),
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `Reg(t)` across runs for both agents at round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub t: u32,
    /// `(Reg_a(t), Reg_b(t))` per run, in run order.
    pub per_run: Vec<(i32, i32)>,
    pub alice: RegretSummary,
    pub bob: RegretSummary,
}

impl RegretReport {
    /// Report at round `t` (1-indexed) over the selected runs.
    pub fn at<'a>(traces: impl IntoIterator<Item = &'a RunTrace>, t: u32) -> Self {
        let i = t as usize - 1;
        let per_run: Vec<(i32, i32)> = traces
            .into_iter()
            .map(|tr| (tr.regret_a[i], tr.regret_b[i]))
            .collect();
        let a: Vec<f64> = per_run.iter().map(|p| f64::from(p.0)).collect();
        let b: Vec<f64> = per_run.iter().map(|p| f64::from(p.1)).collect();
        Self {
            t,
            per_run,
            alice: RegretSummary::from_values(&a),
            bob: RegretSummary::from_values(&b),
        }
    }
}

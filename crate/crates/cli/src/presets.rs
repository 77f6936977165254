//! Canned experiments.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::Result;

use peerpred_core::agents::{necessity_mean_regret, CollusionScript, CustomUpdate, UpdateFunction};
use peerpred_core::analysis::{
    best_response_grid, bne_expected_payoff, converge_proportion, equilibrium_grid,
    ConsistentStrategy, RegretReport, DEFAULT_GRID_STEP,
};
use peerpred_core::{RunTrace, SignalDistribution, TraceDetail};

use crate::config::{header, script_name, Algorithm, RunConfig, DEFAULT_ROUNDS, DEFAULT_RUNS};
use crate::output::{
    batch_rows, regret_rows, summary_rows, trace_rows, CsvOut, BATCH_COLUMNS, REGRET_COLUMNS,
    SUMMARY_COLUMNS, TRACE_COLUMNS,
};
use crate::{simulate_runs, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Fig2,
    Errorbars,
    CollusionDemo,
    NecessityDemo,
    BneReport,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::Fig2,
        PresetName::Errorbars,
        PresetName::CollusionDemo,
        PresetName::NecessityDemo,
        PresetName::BneReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetName::Fig2 => "fig2",
            PresetName::Errorbars => "errorbars",
            PresetName::CollusionDemo => "collusion_demo",
            PresetName::NecessityDemo => "necessity_demo",
            PresetName::BneReport => "bne_report",
        }
    }
}

impl FromStr for PresetName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PresetName::ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// Algorithms compared in the convergence figure.
pub const FIG2_ROSTER: [Algorithm; 7] = [
    Algorithm::Ftl,
    Algorithm::Fpl(Some(1.0)),
    Algorithm::Fpl(Some(4.0)),
    Algorithm::Fpl(Some(8.0)),
    Algorithm::Hedge1,
    Algorithm::Hedge2,
    Algorithm::EpsGreedy,
];

pub const ERRORBAR_BATCHES: u32 = 10;
/// Default horizon and seed count of the necessity demo.
pub const NECESSITY_ROUNDS: u32 = 10_000;
pub const NECESSITY_RUNS: u32 = 100;
/// Rows of `necessity.csv` are written every this many rounds.
pub const NECESSITY_STRIDE: u32 = 100;
pub const NECESSITY_COLUMNS: [&str; 4] = ["function", "T", "mean_regret", "regret_ratio"];
pub const BNE_COLUMNS: [&str; 6] = ["opponent", "q0", "q1", "p0", "p1", "payoff"];

/// Resolved settings shared by every preset.
#[derive(Debug, Clone)]
pub struct PresetSettings {
    pub seed: u64,
    pub rounds: Option<u32>,
    pub runs: Option<u32>,
    pub trace: TraceDetail,
    pub invariant_checks: bool,
    pub threads: usize,
}

impl PresetSettings {
    fn config(&self, algorithm: Algorithm) -> RunConfig {
        let mut c = RunConfig::with_algorithm(algorithm);
        c.seed = self.seed;
        c.rounds = self.rounds.unwrap_or(DEFAULT_ROUNDS);
        c.runs = self.runs.unwrap_or(DEFAULT_RUNS);
        c.trace = self.trace;
        c.invariant_checks = self.invariant_checks;
        c
    }

    fn header(&self, preset: PresetName, extra: &[(&str, String)]) -> String {
        let d = SignalDistribution::default_preset();
        let mut pairs = vec![
            ("preset", preset.name().to_string()),
            ("p11", d.p11().to_string()),
            ("p00", d.p00().to_string()),
            ("p10", d.p10().to_string()),
            ("p01", d.p01().to_string()),
        ];
        pairs.extend(extra.iter().map(|(k, v)| (*k, v.clone())));
        pairs.extend([
            ("seed", self.seed.to_string()),
            (
                "trace",
                match self.trace {
                    TraceDetail::Summary => "summary",
                    TraceDetail::Full => "full",
                }
                .to_string(),
            ),
            ("invariant_checks", self.invariant_checks.to_string()),
        ]);
        header(&pairs)
    }
}

fn roster_names() -> String {
    FIG2_ROSTER
        .iter()
        .map(Algorithm::name)
        .collect::<Vec<_>>()
        .join(",")
}

/// Run `preset`, writing its files into `out` and returning the report text.
pub fn run_preset(preset: PresetName, s: &PresetSettings, out: &Path) -> Result<String, CliError> {
    match preset {
        PresetName::Fig2 => fig2(s, out),
        PresetName::Errorbars => errorbars(s, out),
        PresetName::CollusionDemo => collusion_demo(s, out),
        PresetName::NecessityDemo => necessity_demo(s, out),
        PresetName::BneReport => bne_report(out).map_err(CliError::Other),
    }
}

fn fig2(s: &PresetSettings, out: &Path) -> Result<String, CliError> {
    let base = s.config(Algorithm::Hedge1);
    let head = s.header(
        PresetName::Fig2,
        &[
            ("roster", roster_names()),
            ("rounds", base.rounds.to_string()),
            ("runs", base.runs.to_string()),
        ],
    );
    let mut summary = CsvOut::create(&out.join("summary.csv"), &head, &SUMMARY_COLUMNS)?;
    let mut regrets = CsvOut::create(&out.join("regret.csv"), &head, &REGRET_COLUMNS)?;
    let mut report = String::new();
    for alg in FIG2_ROSTER {
        let cfg = s.config(alg);
        let label = cfg.label()?;
        let traces = simulate_runs(&cfg, s.threads)?;
        let conv = converge_proportion(&traces);
        summary_rows(&mut summary, &label, &conv)?;
        regret_rows(&mut regrets, &label, &traces)?;
        if s.trace == TraceDetail::Full {
            let mut t = CsvOut::create(
                &out.join(format!("trace_{label}.csv")),
                &head,
                &TRACE_COLUMNS,
            )?;
            trace_rows(&mut t, &traces)?;
            t.finish()?;
        }
        write_run_report(&mut report, &label, &traces, cfg.rounds);
    }
    summary.finish()?;
    regrets.finish()?;
    Ok(report)
}

fn write_run_report(report: &mut String, label: &str, traces: &[RunTrace], rounds: u32) {
    let conv = converge_proportion(traces);
    let reg = RegretReport::at(traces, rounds);
    let t = f64::from(rounds);
    let median = conv
        .median_round()
        .map_or_else(|| "none".to_string(), |m| m.to_string());
    let _ = writeln!(report, "{label}.converge_proportion: {}", conv.at(rounds));
    let _ = writeln!(report, "{label}.median_convergence_round: {median}");
    let _ = writeln!(
        report,
        "{label}.mean_regret_ratio_a: {}",
        reg.alice.mean / t
    );
    let _ = writeln!(report, "{label}.mean_regret_ratio_b: {}", reg.bob.mean / t);
}

fn errorbars(s: &PresetSettings, out: &Path) -> Result<String, CliError> {
    let base = s.config(Algorithm::Hedge1);
    let head = s.header(
        PresetName::Errorbars,
        &[
            ("roster", roster_names()),
            ("rounds", base.rounds.to_string()),
            ("runs", base.runs.to_string()),
            ("batches", ERRORBAR_BATCHES.to_string()),
        ],
    );
    let mut csv = CsvOut::create(&out.join("batches.csv"), &head, &BATCH_COLUMNS)?;
    let mut report = String::new();
    for alg in FIG2_ROSTER {
        let mut finals = Vec::new();
        let mut label = String::new();
        for batch in 0..ERRORBAR_BATCHES {
            let mut cfg = s.config(alg);
            cfg.seed = s.seed.wrapping_add(u64::from(batch));
            cfg.trace = TraceDetail::Summary;
            label = cfg.label()?;
            let conv = converge_proportion(&simulate_runs(&cfg, s.threads)?);
            batch_rows(&mut csv, &label, batch, &conv)?;
            finals.push(conv.at(cfg.rounds));
        }
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let sd = (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let _ = writeln!(report, "{label}.final_converge_proportion.mean: {mean}");
        let _ = writeln!(report, "{label}.final_converge_proportion.sd: {sd}");
    }
    csv.finish()?;
    Ok(report)
}

/// Mean over runs and both agents of `Reg(t)`.
fn mean_regret(traces: &[RunTrace], t: u32) -> f64 {
    let r = RegretReport::at(traces, t);
    (r.alice.mean + r.bob.mean) / 2.0
}

fn collusion_demo(s: &PresetSettings, out: &Path) -> Result<String, CliError> {
    let mut cfg = s.config(Algorithm::Collude);
    cfg.collusion_script = CollusionScript::Committed;
    let head = s.header(
        PresetName::CollusionDemo,
        &[
            ("algorithm_a", "collude".into()),
            ("algorithm_b", "collude".into()),
            ("collusion_script", script_name(cfg.collusion_script).into()),
            ("rounds", cfg.rounds.to_string()),
            ("runs", cfg.runs.to_string()),
        ],
    );
    let label = cfg.label()?;
    let traces = simulate_runs(&cfg, s.threads)?;
    let conv = converge_proportion(&traces);
    let mut summary = CsvOut::create(&out.join("summary.csv"), &head, &SUMMARY_COLUMNS)?;
    summary_rows(&mut summary, &label, &conv)?;
    summary.finish()?;
    let mut regrets = CsvOut::create(&out.join("regret.csv"), &head, &REGRET_COLUMNS)?;
    regret_rows(&mut regrets, &label, &traces)?;
    regrets.finish()?;

    let mut report = String::new();
    let _ = writeln!(report, "script: {}", script_name(cfg.collusion_script));
    collusion_lines(&mut report, "committed", &traces, cfg.rounds);

    // The iid-coin variant for comparison: regret of order sqrt(T).
    let mut iid = cfg.clone();
    iid.collusion_script = CollusionScript::IidCoin;
    iid.trace = TraceDetail::Summary;
    let iid_traces = simulate_runs(&iid, s.threads)?;
    collusion_lines(&mut report, "iid", &iid_traces, iid.rounds);
    std::fs::write(out.join("report.txt"), format!("{head}{report}"))
        .map_err(|e| CliError::Other(e.into()))?;
    Ok(report)
}

fn collusion_lines(report: &mut String, key: &str, traces: &[RunTrace], rounds: u32) {
    let conv = converge_proportion(traces);
    let max_prop = conv.proportion.iter().copied().fold(0.0, f64::max);
    let t = f64::from(rounds);
    let reg = mean_regret(traces, rounds);
    let _ = writeln!(report, "{key}.max_converge_proportion: {max_prop}");
    let _ = writeln!(report, "{key}.mean_regret_ratio: {}", reg / t);
    let _ = writeln!(report, "{key}.mean_regret_over_sqrt_t: {}", reg / t.sqrt());
    if rounds >= 2 && rounds.is_multiple_of(2) {
        let half = rounds / 2;
        let ratio_half = mean_regret(traces, half) / f64::from(half);
        let _ = writeln!(report, "{key}.halving_ratio: {}", (reg / t) / ratio_half);
    }
}

/// The update functions compared on the fixed-reward environment.
pub fn necessity_functions() -> Vec<UpdateFunction> {
    vec![
        UpdateFunction::Ftl,
        UpdateFunction::Hedge2 { beta: 1.0 },
        UpdateFunction::Custom(CustomUpdate::capped_softmax(0.9).expect("0.9 is a valid cap")),
    ]
}

fn necessity_demo(s: &PresetSettings, out: &Path) -> Result<String, CliError> {
    let rounds = s.rounds.unwrap_or(NECESSITY_ROUNDS);
    let runs = s.runs.unwrap_or(NECESSITY_RUNS);
    let head = s.header(
        PresetName::NecessityDemo,
        &[
            (
                "functions",
                necessity_functions()
                    .iter()
                    .map(UpdateFunction::label)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("rounds", rounds.to_string()),
            ("runs", runs.to_string()),
        ],
    );
    let mut csv = CsvOut::create(&out.join("necessity.csv"), &head, &NECESSITY_COLUMNS)?;
    let mut report = String::new();
    for f in necessity_functions() {
        let label = f.label();
        let mean = necessity_mean_regret(&f, rounds, runs, s.seed);
        for t in (NECESSITY_STRIDE..=rounds).step_by(NECESSITY_STRIDE as usize) {
            let m = mean[t as usize - 1];
            csv.row([
                label.clone(),
                t.to_string(),
                m.to_string(),
                (m / f64::from(t)).to_string(),
            ])?;
        }
        let m = mean[rounds as usize - 1];
        let _ = writeln!(
            report,
            "{label}.mean_regret_ratio: {}",
            m / f64::from(rounds)
        );
    }
    csv.finish()?;
    Ok(report)
}

fn bne_report(out: &Path) -> Result<String> {
    let d = SignalDistribution::default_preset();
    let step = DEFAULT_GRID_STEP;
    let head = header(&[
        ("preset", PresetName::BneReport.name().to_string()),
        ("p11", d.p11().to_string()),
        ("p00", d.p00().to_string()),
        ("p10", d.p10().to_string()),
        ("p01", d.p01().to_string()),
        ("grid_step", step.to_string()),
    ]);
    let mut report = String::new();
    let (a, b) = bne_expected_payoff(&d, &ConsistentStrategy::truthful());
    let closed = 2.0 * (d.p11() * d.p00() - d.p10() * d.p01());
    let _ = writeln!(report, "truthful.payoff_a: {a}");
    let _ = writeln!(report, "truthful.payoff_b: {b}");
    let _ = writeln!(report, "truthful.closed_form: {closed}");

    let mut csv = CsvOut::create(&out.join("bne.csv"), &head, &BNE_COLUMNS)?;
    let opponents = [
        ("truthful", 1.0, 1.0),
        ("flipping", 0.0, 0.0),
        ("uninformative", 0.5, 0.5),
    ];
    for (name, q0, q1) in opponents {
        let br = best_response_grid(&d, q0, q1, step)?;
        let eq = equilibrium_grid(&d, q0, q1, step)?;
        let on_line = eq.iter().all(|(p0, p1)| (p0 + p1 - 1.0).abs() < 1e-9);
        let _ = writeln!(report, "{name}.best_payoff: {}", br.payoff);
        let _ = writeln!(report, "{name}.best_responses: {}", br.maximizers.len());
        let _ = writeln!(report, "{name}.equilibrium_points: {}", eq.len());
        let _ = writeln!(
            report,
            "{name}.equilibrium_on_uninformative_line: {on_line}"
        );
        for (p0, p1) in &br.maximizers {
            csv.row([
                name.to_string(),
                q0.to_string(),
                q1.to_string(),
                p0.to_string(),
                p1.to_string(),
                br.payoff.to_string(),
            ])?;
        }
    }
    csv.finish()?;
    std::fs::write(out.join("report.txt"), format!("{head}{report}"))?;
    Ok(report)
}

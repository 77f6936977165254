//! Command-line front end: configuration files, experiment presets and CSV
//! output for the peer-prediction simulator.

pub mod config;
pub mod output;
pub mod presets;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use peerpred_core::agents::{certify, necessity_mean_regret, CheckOptions, UpdateFunction};
use peerpred_core::analysis::{converge_proportion, EventConfig};
use peerpred_core::{run_replications, verify_records, EngineError, RunTrace, TraceDetail};

use config::{header, parse_config, ConfigError, Overrides, RunConfig};
use output::{
    event_rows, read_trace, regret_rows, summary_rows, trace_rows, CsvOut, EVENT_COLUMNS,
    REGRET_COLUMNS, SUMMARY_COLUMNS, TRACE_COLUMNS,
};
use presets::{run_preset, PresetName, PresetSettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Engine(e) if e.is_invariant_violation() => EXIT_INVARIANT,
            CliError::Engine(EngineError::InvalidConfig(_) | EngineError::Policy { .. }) => {
                EXIT_CONFIG
            }
            CliError::Engine(_) | CliError::Other(_) => EXIT_OTHER,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(ConfigError::Distribution(_)) => "distribution",
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Engine(e) if e.is_invariant_violation() => "invariant",
            CliError::Engine(_) => "engine",
            CliError::Other(_) => "io",
        }
    }

    /// `error: kind=<kind> [key=<key>] msg="<message>"` on one line.
    pub fn line(&self) -> String {
        let key = match self {
            CliError::Config(ConfigError::Distribution(_)) => Some("p11,p00,p10,p01"),
            CliError::Config(e) => e.key(),
            _ => None,
        };
        let msg = format!("{self:#}");
        match key {
            Some(k) => format!("error: kind={} key={k} msg={msg:?}", self.kind()),
            None => format!("error: kind={} msg={msg:?}", self.kind()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "peerpred",
    version,
    about = "Learning agents under the sequential correlated-agreement mechanism"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    rounds: Option<u32>,
    #[arg(long, global = true)]
    runs: Option<u32>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    trace: Option<TraceArg>,
    #[arg(long, global = true)]
    no_invariant_checks: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Renormalize distribution weights that do not sum to one.
    #[arg(long, global = true)]
    allow_unnormalized: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TraceArg {
    Summary,
    Full,
}

impl From<TraceArg> for TraceDetail {
    fn from(t: TraceArg) -> Self {
        match t {
            TraceArg::Summary => TraceDetail::Summary,
            TraceArg::Full => TraceDetail::Full,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the replications described by a config file or an output header.
    Simulate { config: PathBuf },
    /// Convergence, regret and event CSVs from a full trace.
    Analyze {
        trace_csv: PathBuf,
        #[arg(long, default_value_t = 20)]
        c0: i32,
        #[arg(long, default_value_t = 10)]
        u: i32,
    },
    /// Assumption checks and the fixed-reward regret demo for an update function.
    Check {
        /// hedge1, hedge2, fpl, fplN, ftl, replicator, capped_softmax,
        /// biased_softmax or anti_monotone.
        name: String,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        noise_max: Option<f64>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, default_value_t = 0.9)]
        cap: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 100)]
        necessity_seeds: u32,
    },
    /// Run a canned experiment.
    Preset {
        #[arg(value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<PresetName>()))]
        name: PresetName,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            rounds: self.rounds,
            runs: self.runs,
            trace: self.trace.map(Into::into),
            no_invariant_checks: self.no_invariant_checks,
            allow_unnormalized: self.allow_unnormalized,
        }
    }

    fn out_dir(&self) -> Result<PathBuf, CliError> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Other(anyhow::anyhow!("creating {}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn preset_settings(&self) -> PresetSettings {
        PresetSettings {
            seed: self.seed.unwrap_or(0),
            rounds: self.rounds,
            runs: self.runs,
            trace: self.trace.map_or(TraceDetail::Summary, Into::into),
            invariant_checks: !self.no_invariant_checks,
            threads: self.threads,
        }
    }
}

/// Parse `argv`, run the command, print errors, and return the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(msg.to_string()).line());
            return EXIT_CONFIG;
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate { config } => simulate(config, g),
        Command::Analyze { trace_csv, c0, u } => {
            analyze(trace_csv, EventConfig { c0: *c0, u: *u }, g)
        }
        Command::Check {
            name,
            beta,
            noise_max,
            ratio,
            cap,
            trials,
            necessity_seeds,
        } => {
            let f = named_update(name, *beta, *noise_max, *ratio, *cap)?;
            check(&f, *trials, *necessity_seeds, g.seed.unwrap_or(0));
            Ok(())
        }
        Command::Preset { name } => {
            let out = g.out_dir()?;
            print!("{}", run_preset(*name, &g.preset_settings(), &out)?);
            Ok(())
        }
    }
}

/// Run every replication of `cfg`.
pub fn simulate_runs(cfg: &RunConfig, threads: usize) -> Result<Vec<RunTrace>, CliError> {
    Ok(run_replications(&cfg.simulation_config()?, threads)?)
}

fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim())
}

fn simulate(path: &Path, g: &GlobalArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if let Some(name) = header_value(&text, "preset") {
        return replay_preset(&text, name, g);
    }
    let cfg = parse_config(&text, &g.overrides())?;
    let out = g.out_dir()?;
    let label = cfg.label()?;
    let head = header(&cfg.pairs());
    let traces = simulate_runs(&cfg, g.threads)?;
    let conv = converge_proportion(&traces);

    let mut summary = CsvOut::create(&out.join("summary.csv"), &head, &SUMMARY_COLUMNS)?;
    summary_rows(&mut summary, &label, &conv)?;
    summary.finish()?;
    let mut regrets = CsvOut::create(&out.join("regret.csv"), &head, &REGRET_COLUMNS)?;
    regret_rows(&mut regrets, &label, &traces)?;
    regrets.finish()?;
    if cfg.trace == TraceDetail::Full {
        let mut t = CsvOut::create(&out.join("trace.csv"), &head, &TRACE_COLUMNS)?;
        trace_rows(&mut t, &traces)?;
        t.finish()?;
    }
    println!("{label}.converge_proportion: {}", conv.at(cfg.rounds));
    Ok(())
}

/// Re-run a preset from the header of one of its output files.
fn replay_preset(text: &str, name: &str, g: &GlobalArgs) -> Result<(), CliError> {
    let preset: PresetName = name.parse().map_err(|reason| ConfigError::BadValue {
        key: "preset".into(),
        value: name.into(),
        reason,
    })?;
    let num = |key: &str| -> Result<Option<u64>, CliError> {
        header_value(text, key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    CliError::Config(ConfigError::BadValue {
                        key: key.into(),
                        value: v.into(),
                        reason: "expected an unsigned integer".into(),
                    })
                })
            })
            .transpose()
    };
    let mut s = g.preset_settings();
    if g.seed.is_none() {
        s.seed = num("seed")?.unwrap_or(0);
    }
    if g.rounds.is_none() {
        s.rounds = num("rounds")?.map(|v| v as u32);
    }
    if g.runs.is_none() {
        s.runs = num("runs")?.map(|v| v as u32);
    }
    if g.trace.is_none() && header_value(text, "trace") == Some("full") {
        s.trace = TraceDetail::Full;
    }
    if !g.no_invariant_checks {
        s.invariant_checks = header_value(text, "invariant_checks") != Some("false");
    }
    let out = g.out_dir()?;
    print!("{}", run_preset(preset, &s, &out)?);
    Ok(())
}

fn analyze(path: &Path, events: EventConfig, g: &GlobalArgs) -> Result<(), CliError> {
    let file = read_trace(path)?;
    for t in &file.traces {
        verify_records(t.run, t.records.as_deref().unwrap_or_default())?;
    }
    let source: String = file
        .header
        .iter()
        .map(|(k, v)| format!("# {k}={v}\n"))
        .collect();
    let label = if source.is_empty() {
        "trace".to_string()
    } else {
        parse_config(&source, &Overrides::default())
            .ok()
            .and_then(|c| c.label().ok())
            .or_else(|| file.get("preset").map(str::to_string))
            .unwrap_or_else(|| "trace".into())
    };
    let mut pairs: Vec<(&str, String)> = file
        .header
        .iter()
        .filter(|(k, _)| k != "tool" && k != "version")
        .map(|(k, v)| (k.as_str(), v.clone()))
        .collect();
    pairs.push(("c0", events.c0.to_string()));
    pairs.push(("u", events.u.to_string()));
    let head = header(&pairs);

    let out = g.out_dir()?;
    let conv = converge_proportion(&file.traces);
    let mut summary = CsvOut::create(&out.join("summary.csv"), &head, &SUMMARY_COLUMNS)?;
    summary_rows(&mut summary, &label, &conv)?;
    summary.finish()?;
    let mut regrets = CsvOut::create(&out.join("regret.csv"), &head, &REGRET_COLUMNS)?;
    regret_rows(&mut regrets, &label, &file.traces)?;
    regrets.finish()?;
    let mut ev = CsvOut::create(&out.join("events.csv"), &head, &EVENT_COLUMNS)?;
    event_rows(&mut ev, &file.traces, events)?;
    ev.finish()?;
    println!("runs: {}", file.traces.len());
    Ok(())
}

/// Update function for the `check` subcommand.
pub fn named_update(
    name: &str,
    beta: Option<f64>,
    noise_max: Option<f64>,
    ratio: Option<f64>,
    cap: f64,
) -> Result<UpdateFunction, CliError> {
    let bad = |key: &str, value: &str, reason: &str| {
        CliError::Config(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            reason: reason.into(),
        })
    };
    let f = match name {
        "hedge1" => UpdateFunction::Hedge1,
        "hedge2" => UpdateFunction::Hedge2 {
            beta: beta.unwrap_or(1.0),
        },
        "fpl" => UpdateFunction::Fpl {
            noise_max: noise_max
                .ok_or_else(|| CliError::Config(ConfigError::Missing("noise_max".into())))?,
        },
        "ftl" => UpdateFunction::Ftl,
        "replicator" => UpdateFunction::Replicator {
            ratio: ratio.unwrap_or(3.0),
        },
        "capped_softmax" => UpdateFunction::Custom(
            peerpred_core::CustomUpdate::capped_softmax(cap)
                .map_err(|e| bad("cap", &cap.to_string(), &e.to_string()))?,
        ),
        "biased_softmax" => UpdateFunction::Custom(peerpred_core::CustomUpdate::biased_softmax()),
        "anti_monotone" => UpdateFunction::Custom(peerpred_core::CustomUpdate::anti_monotone()),
        "eps_greedy" | "collude" => {
            return Err(bad("name", name, "not a reward-based update function"));
        }
        other => match other
            .strip_prefix("fpl")
            .and_then(|c| c.parse::<f64>().ok())
        {
            Some(c) => UpdateFunction::Fpl { noise_max: c },
            None => return Err(bad("name", other, "unknown update function")),
        },
    };
    f.validate()
        .map_err(|e| bad("name", name, &e.to_string()))?;
    Ok(f)
}

/// Horizons at which `check` reports the fixed-reward regret ratio.
pub const CHECK_HORIZONS: [u32; 2] = [1_000, 10_000];

fn check(f: &UpdateFunction, trials: usize, seeds: u32, seed: u64) {
    let opts = CheckOptions {
        trials,
        ..CheckOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    print!("{}", certify(f, &opts, &mut rng));
    let horizon = CHECK_HORIZONS[CHECK_HORIZONS.len() - 1];
    let mean = necessity_mean_regret(f, horizon, seeds, seed);
    println!("necessity.seeds: {seeds}");
    for t in CHECK_HORIZONS {
        let m = mean[t as usize - 1];
        println!("necessity.regret_ratio.T{t}: {}", m / f64::from(t));
    }
}

//! Flat `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored, except that a file
//! whose first line is `# tool=peerpred` is read as the provenance header of
//! a previous output file: its `# key=value` lines are the configuration.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use peerpred_core::agents::{AgentPolicy, CollusionScript, UpdateFunction};
use peerpred_core::{SignalDistribution, SignalError, SimulationConfig, TraceDetail};

pub const TOOL: &str = "peerpred";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_ROUNDS: u32 = 800;
pub const DEFAULT_RUNS: u32 = 400;

const KNOWN_KEYS: &[&str] = &[
    "p11",
    "p00",
    "p10",
    "p01",
    "algorithm",
    "algorithm_a",
    "algorithm_b",
    "beta",
    "noise_max",
    "ratio",
    "collusion_script",
    "rounds",
    "runs",
    "seed",
    "trace",
    "invariant_checks",
    "allow_unnormalized",
];

/// Header-only keys, accepted and ignored when replaying a header.
const PROVENANCE_KEYS: &[&str] = &["tool", "version", "preset", "batch", "batches"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown key {key:?} (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("key {key:?} given twice (line {line})")]
    Duplicate { key: String, line: usize },
    #[error("key {key:?}: {reason} (got {value:?})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing key {0:?}")]
    Missing(String),
    #[error("distribution: {0}")]
    Distribution(#[from] SignalError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl ConfigError {
    /// The key this error concerns, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::Duplicate { key, .. }
            | ConfigError::BadValue { key, .. } => Some(key),
            ConfigError::Missing(key) => Some(key),
            _ => None,
        }
    }
}

/// Algorithm names accepted by `algorithm`, `algorithm_a` and `algorithm_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Hedge1,
    Hedge2,
    /// `fpl` takes `noise_max`; `fplN` fixes the bound to `N`.
    Fpl(Option<f64>),
    Ftl,
    Replicator,
    EpsGreedy,
    Collude,
}

impl Algorithm {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hedge1" => Algorithm::Hedge1,
            "hedge2" => Algorithm::Hedge2,
            "fpl" => Algorithm::Fpl(None),
            "ftl" => Algorithm::Ftl,
            "replicator" => Algorithm::Replicator,
            "eps_greedy" => Algorithm::EpsGreedy,
            "collude" => Algorithm::Collude,
            _ => {
                let c: f64 = s.strip_prefix("fpl")?.parse().ok()?;
                Algorithm::Fpl(Some(c))
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            Algorithm::Hedge1 => "hedge1".into(),
            Algorithm::Hedge2 => "hedge2".into(),
            Algorithm::Fpl(None) => "fpl".into(),
            Algorithm::Fpl(Some(c)) => format!("fpl{c}"),
            Algorithm::Ftl => "ftl".into(),
            Algorithm::Replicator => "replicator".into(),
            Algorithm::EpsGreedy => "eps_greedy".into(),
            Algorithm::Collude => "collude".into(),
        }
    }
}

/// Fully resolved configuration; every field has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub distribution: SignalDistribution,
    pub algorithm_a: Algorithm,
    pub algorithm_b: Algorithm,
    pub beta: f64,
    pub noise_max: Option<f64>,
    pub ratio: f64,
    pub collusion_script: CollusionScript,
    pub rounds: u32,
    pub runs: u32,
    pub seed: u64,
    pub trace: TraceDetail,
    pub invariant_checks: bool,
}

impl RunConfig {
    /// Symmetric configuration with every default filled in.
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        Self {
            distribution: SignalDistribution::default_preset(),
            algorithm_a: algorithm,
            algorithm_b: algorithm,
            beta: 1.0,
            noise_max: None,
            ratio: 3.0,
            collusion_script: CollusionScript::Committed,
            rounds: DEFAULT_ROUNDS,
            runs: DEFAULT_RUNS,
            seed: 0,
            trace: TraceDetail::Summary,
            invariant_checks: true,
        }
    }

    pub fn policy(&self, algorithm: Algorithm) -> Result<AgentPolicy, ConfigError> {
        let reward_based = |f: UpdateFunction| AgentPolicy::RewardBased(f);
        Ok(match algorithm {
            Algorithm::Hedge1 => reward_based(UpdateFunction::Hedge1),
            Algorithm::Hedge2 => reward_based(UpdateFunction::Hedge2 { beta: self.beta }),
            Algorithm::Fpl(fixed) => {
                let noise_max = fixed
                    .or(self.noise_max)
                    .ok_or_else(|| ConfigError::Missing("noise_max".into()))?;
                reward_based(UpdateFunction::Fpl { noise_max })
            }
            Algorithm::Ftl => reward_based(UpdateFunction::Ftl),
            Algorithm::Replicator => reward_based(UpdateFunction::Replicator { ratio: self.ratio }),
            Algorithm::EpsGreedy => AgentPolicy::EpsilonGreedy,
            Algorithm::Collude => AgentPolicy::Collusion(self.collusion_script),
        })
    }

    /// Label for the `algorithm` CSV column.
    pub fn label(&self) -> Result<String, ConfigError> {
        let a = self.policy(self.algorithm_a)?.label();
        let b = self.policy(self.algorithm_b)?.label();
        Ok(if a == b { a } else { format!("{a}_vs_{b}") })
    }

    pub fn simulation_config(&self) -> Result<SimulationConfig, ConfigError> {
        let policy_a = self.policy(self.algorithm_a)?;
        let policy_b = self.policy(self.algorithm_b)?;
        for p in [&policy_a, &policy_b] {
            p.validate().map_err(|e| ConfigError::BadValue {
                key: param_key(p),
                value: p.label(),
                reason: e.to_string(),
            })?;
        }
        let mut c = SimulationConfig::new(self.distribution, policy_a, policy_b);
        c.rounds = self.rounds;
        c.runs = self.runs;
        c.master_seed = self.seed;
        c.trace_detail = self.trace;
        c.invariant_checks = self.invariant_checks;
        Ok(c)
    }

    /// `key=value` pairs in a fixed order; feeding them back through
    /// [`parse_config`] yields the same configuration.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let d = &self.distribution;
        let mut out = vec![
            ("p11", d.p11().to_string()),
            ("p00", d.p00().to_string()),
            ("p10", d.p10().to_string()),
            ("p01", d.p01().to_string()),
            ("algorithm_a", self.algorithm_a.name()),
            ("algorithm_b", self.algorithm_b.name()),
            ("beta", self.beta.to_string()),
        ];
        if let Some(c) = self.noise_max {
            out.push(("noise_max", c.to_string()));
        }
        out.extend([
            ("ratio", self.ratio.to_string()),
            (
                "collusion_script",
                script_name(self.collusion_script).into(),
            ),
            ("rounds", self.rounds.to_string()),
            ("runs", self.runs.to_string()),
            ("seed", self.seed.to_string()),
            (
                "trace",
                match self.trace {
                    TraceDetail::Summary => "summary",
                    TraceDetail::Full => "full",
                }
                .into(),
            ),
            ("invariant_checks", self.invariant_checks.to_string()),
            ("allow_unnormalized", "false".into()),
        ]);
        out
    }
}

fn param_key(p: &AgentPolicy) -> String {
    match p {
        AgentPolicy::RewardBased(UpdateFunction::Hedge2 { .. }) => "beta",
        AgentPolicy::RewardBased(UpdateFunction::Fpl { .. }) => "noise_max",
        AgentPolicy::RewardBased(UpdateFunction::Replicator { .. }) => "ratio",
        _ => "algorithm",
    }
    .into()
}

pub fn script_name(s: CollusionScript) -> &'static str {
    match s {
        CollusionScript::IidCoin => "iid",
        CollusionScript::Committed => "committed",
    }
}

/// Comment header for output files: tool, version, then `extra` pairs.
pub fn header(extra: &[(&str, String)]) -> String {
    let mut s = format!("# tool={TOOL}\n# version={VERSION}\n");
    for (k, v) in extra {
        writeln!(s, "# {k}={v}").expect("writing to a String");
    }
    s
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(key, value, format!("expected {what}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

/// Raw `(key, value, line)` triples; rejects unknown and repeated keys.
fn tokenize(text: &str) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let mut lines = text.lines().enumerate().peekable();
    let header_mode = lines
        .peek()
        .is_some_and(|(_, l)| l.trim() == format!("# tool={TOOL}"));
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let body = if header_mode {
            match raw.strip_prefix('#') {
                Some(rest) => rest.trim(),
                // The header ends at the first data line.
                None => break,
            }
        } else {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            t
        };
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            text: raw.to_string(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if header_mode && PROVENANCE_KEYS.contains(&k) {
            continue;
        }
        if !KNOWN_KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey {
                key: k.into(),
                line,
            });
        }
        if out.iter().any(|(seen, _, _)| seen == k) {
            return Err(ConfigError::Duplicate {
                key: k.into(),
                line,
            });
        }
        out.push((k.into(), v.into(), line));
    }
    Ok(out)
}

/// Command-line overrides applied after the file is read.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rounds: Option<u32>,
    pub runs: Option<u32>,
    pub trace: Option<TraceDetail>,
    pub no_invariant_checks: bool,
    pub allow_unnormalized: bool,
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let pairs = tokenize(text)?;
    let get = |k: &str| {
        pairs
            .iter()
            .find(|(key, _, _)| key == k)
            .map(|(_, v, _)| v.as_str())
    };

    let algorithm = |k: &str| -> Result<Option<Algorithm>, ConfigError> {
        get(k)
            .map(|v| Algorithm::parse(v).ok_or_else(|| bad(k, v, "unknown algorithm")))
            .transpose()
    };
    let shared = algorithm("algorithm")?;
    let a = algorithm("algorithm_a")?;
    let b = algorithm("algorithm_b")?;
    if shared.is_some() && (a.is_some() || b.is_some()) {
        return Err(bad(
            "algorithm",
            get("algorithm").unwrap_or_default(),
            "cannot be combined with algorithm_a or algorithm_b",
        ));
    }
    let algorithm_a = shared
        .or(a)
        .ok_or_else(|| ConfigError::Missing("algorithm_a".into()))?;
    let algorithm_b = shared.or(b).unwrap_or(algorithm_a);
    let mut cfg = RunConfig::with_algorithm(algorithm_a);
    cfg.algorithm_b = algorithm_b;

    if let Some(v) = get("beta") {
        cfg.beta = parse_num("beta", v, "a number")?;
    }
    if let Some(v) = get("noise_max") {
        cfg.noise_max = Some(parse_num("noise_max", v, "a number")?);
    }
    if let Some(v) = get("ratio") {
        cfg.ratio = parse_num("ratio", v, "a number")?;
    }
    if let Some(v) = get("collusion_script") {
        cfg.collusion_script = match v {
            "iid" => CollusionScript::IidCoin,
            "committed" => CollusionScript::Committed,
            _ => return Err(bad("collusion_script", v, "expected iid or committed")),
        };
    }
    if let Some(v) = get("rounds") {
        cfg.rounds = parse_num("rounds", v, "a positive integer")?;
    }
    if let Some(v) = get("runs") {
        cfg.runs = parse_num("runs", v, "a positive integer")?;
    }
    if let Some(v) = get("seed") {
        cfg.seed = parse_num("seed", v, "an unsigned integer")?;
    }
    if let Some(v) = get("trace") {
        cfg.trace = match v {
            "summary" => TraceDetail::Summary,
            "full" => TraceDetail::Full,
            _ => return Err(bad("trace", v, "expected summary or full")),
        };
    }
    if let Some(v) = get("invariant_checks") {
        cfg.invariant_checks = parse_bool("invariant_checks", v)?;
    }
    let allow_unnormalized = match get("allow_unnormalized") {
        Some(v) => parse_bool("allow_unnormalized", v)?,
        None => false,
    } || overrides.allow_unnormalized;

    let keys = ["p11", "p00", "p10", "p01"];
    let given: Vec<Option<&str>> = keys.iter().map(|k| get(k)).collect();
    if given.iter().any(Option::is_some) {
        let mut p = [0.0; 4];
        for ((k, v), slot) in keys.iter().zip(&given).zip(&mut p) {
            let v = v.ok_or_else(|| ConfigError::Missing((*k).into()))?;
            *slot = parse_num(k, v, "a decimal probability")?;
        }
        cfg.distribution = if allow_unnormalized {
            SignalDistribution::normalized(p[0], p[1], p[2], p[3])?
        } else {
            SignalDistribution::new(p[0], p[1], p[2], p[3])?
        };
    }

    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(r) = overrides.rounds {
        cfg.rounds = r;
    }
    if let Some(n) = overrides.runs {
        cfg.runs = n;
    }
    if let Some(t) = overrides.trace {
        cfg.trace = t;
    }
    if overrides.no_invariant_checks {
        cfg.invariant_checks = false;
    }
    if cfg.rounds == 0 {
        return Err(bad("rounds", "0", "must be at least 1"));
    }
    if cfg.runs == 0 {
        return Err(bad("runs", "0", "must be at least 1"));
    }
    cfg.simulation_config()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, overrides)
}

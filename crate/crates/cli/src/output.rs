//! CSV emission and the full-trace reader used by `analyze`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use peerpred_core::analysis::{event_timeline, regret, ConvergenceReport, EventConfig};
use peerpred_core::mechanism::RoundPayment;
use peerpred_core::{CounterfactualVector, RewardLedger, Role, RoundRecord, RunTrace, Strategy};

pub const SUMMARY_COLUMNS: [&str; 3] = ["algorithm", "t", "converge_proportion"];
pub const REGRET_COLUMNS: [&str; 5] = ["algorithm", "run", "T", "regret_a", "regret_b"];
pub const EVENT_COLUMNS: [&str; 3] = ["run", "t", "state"];
pub const BATCH_COLUMNS: [&str; 4] = ["algorithm", "batch", "t", "converge_proportion"];
pub const TRACE_COLUMNS: [&str; 18] = [
    "run", "t", "x", "y", "strat_a", "strat_b", "xhat", "yhat", "r", "s", "R1", "R2", "R3", "R4",
    "S1", "S2", "S3", "S4",
];

/// CSV file with a `#` comment header followed by the column row.
pub struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &str, columns: &[&str]) -> Result<Self> {
        let mut file = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        file.write_all(header.as_bytes())?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(columns)?;
        Ok(Self { inner })
    }

    pub fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn summary_rows(out: &mut CsvOut, label: &str, report: &ConvergenceReport) -> Result<()> {
    for (i, p) in report.proportion.iter().enumerate() {
        out.row([label.to_string(), (i + 1).to_string(), p.to_string()])?;
    }
    Ok(())
}

pub fn batch_rows(
    out: &mut CsvOut,
    label: &str,
    batch: u32,
    report: &ConvergenceReport,
) -> Result<()> {
    for (i, p) in report.proportion.iter().enumerate() {
        out.row([
            label.to_string(),
            batch.to_string(),
            (i + 1).to_string(),
            p.to_string(),
        ])?;
    }
    Ok(())
}

/// One row per run with final regrets.
pub fn regret_rows(out: &mut CsvOut, label: &str, traces: &[RunTrace]) -> Result<()> {
    for t in traces {
        let last = t.rounds();
        out.row([
            label.to_string(),
            t.run.to_string(),
            last.to_string(),
            t.regret_a[last - 1].to_string(),
            t.regret_b[last - 1].to_string(),
        ])?;
    }
    Ok(())
}

pub fn trace_rows(out: &mut CsvOut, traces: &[RunTrace]) -> Result<()> {
    for trace in traces {
        let Some(records) = &trace.records else {
            bail!("run {} has no round records", trace.run);
        };
        for r in records {
            let mut row = vec![
                trace.run.to_string(),
                r.t.to_string(),
                r.x.to_string(),
                r.y.to_string(),
                r.strat_a.to_string(),
                r.strat_b.to_string(),
                r.xhat.to_string(),
                r.yhat.to_string(),
                r.payment.r.to_string(),
                r.payment.s.to_string(),
            ];
            row.extend(r.ledger_a.iter().map(i32::to_string));
            row.extend(r.ledger_b.iter().map(i32::to_string));
            out.row(row)?;
        }
    }
    Ok(())
}

pub fn event_rows(out: &mut CsvOut, traces: &[RunTrace], cfg: EventConfig) -> Result<()> {
    for trace in traces {
        let Some(records) = &trace.records else {
            bail!("run {} has no round records", trace.run);
        };
        let timeline = event_timeline(records, cfg);
        for (i, s) in timeline.states.iter().enumerate() {
            out.row([trace.run.to_string(), (i + 1).to_string(), s.to_string()])?;
        }
    }
    Ok(())
}

/// A trace file: its `# key=value` header and the runs it contains.
pub struct TraceFile {
    pub header: Vec<(String, String)>,
    pub traces: Vec<RunTrace>,
}

impl TraceFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn parse_header(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn diff(after: [i32; 4], before: [i32; 4]) -> Result<CounterfactualVector> {
    let mut v = [0i8; 4];
    for i in 0..4 {
        let d = after[i] - before[i];
        v[i] = i8::try_from(d).with_context(|| format!("ledger jump of {d}"))?;
    }
    Ok(CounterfactualVector(v))
}

/// Read a full-trace CSV back into runs with round records. Counterfactual
/// vectors are recovered as ledger differences.
pub fn read_trace(path: &Path) -> Result<TraceFile> {
    let mut text = String::new();
    BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?)
        .read_to_string(&mut text)?;
    let header = parse_header(&text);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let cols: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if cols != TRACE_COLUMNS {
        bail!(
            "expected columns {}, found {}",
            TRACE_COLUMNS.join(","),
            cols.join(",")
        );
    }

    let mut traces: Vec<RunTrace> = Vec::new();
    let mut records: Vec<RoundRecord> = Vec::new();
    let mut current: Option<u64> = None;
    let master_seed = header
        .iter()
        .find(|(k, _)| k == "seed")
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(0);

    let flush = |run: u64, records: Vec<RoundRecord>, traces: &mut Vec<RunTrace>| {
        let strategies = records.iter().map(|r| (r.strat_a, r.strat_b)).collect();
        let regret_a = regret(&records, Role::Alice);
        let regret_b = regret(&records, Role::Bob);
        let last = records.last().expect("non-empty run");
        traces.push(RunTrace {
            master_seed,
            run,
            strategies,
            regret_a,
            regret_b,
            final_a: RewardLedger::from_totals(last.ledger_a, last.t),
            final_b: RewardLedger::from_totals(last.ledger_b, last.t),
            records: Some(records),
        });
    };

    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let field = |i: usize| -> Result<&str> {
            row.get(i).with_context(|| {
                format!("data row {}: missing column {}", line + 1, TRACE_COLUMNS[i])
            })
        };
        let int = |i: usize| -> Result<i32> {
            field(i)?
                .parse()
                .with_context(|| format!("data row {}: column {}", line + 1, TRACE_COLUMNS[i]))
        };
        let strat = |i: usize| -> Result<Strategy> {
            field(i)?.parse::<Strategy>().map_err(anyhow::Error::msg)
        };
        let run: u64 = field(0)?.parse()?;
        if current != Some(run) {
            if let Some(prev) = current {
                flush(prev, std::mem::take(&mut records), &mut traces);
            }
            current = Some(run);
        }
        let ledger_a = [int(10)?, int(11)?, int(12)?, int(13)?];
        let ledger_b = [int(14)?, int(15)?, int(16)?, int(17)?];
        let (prev_a, prev_b) = records
            .last()
            .map_or(([0; 4], [0; 4]), |r| (r.ledger_a, r.ledger_b));
        records.push(RoundRecord {
            t: int(1)? as u32,
            x: int(2)? as u8,
            y: int(3)? as u8,
            strat_a: strat(4)?,
            strat_b: strat(5)?,
            xhat: int(6)? as u8,
            yhat: int(7)? as u8,
            payment: RoundPayment {
                r: int(8)? as i8,
                s: int(9)? as i8,
            },
            cf_a: diff(ledger_a, prev_a)?,
            cf_b: diff(ledger_b, prev_b)?,
            ledger_a,
            ledger_b,
        });
    }
    if let Some(prev) = current {
        flush(prev, records, &mut traces);
    }
    Ok(TraceFile { header, traces })
}

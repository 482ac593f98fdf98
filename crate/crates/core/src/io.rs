//! File formats.
//!
//! Tables are CSV preceded by one schema line, `# phaseforge <kind> v<n>`;
//! JSON documents carry `schema` and `schema_version` fields. Readers
//! reject any version other than [`SCHEMA_VERSION`]. Reals are written with
//! 17 significant digits so every `f64` survives a round trip.

use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineRow, BaselineTable};
use crate::strategy::{StepRecord, StepStatistic, TrialRecord};

pub const SCHEMA_VERSION: u32 = 1;

/// Version of the library that wrote a file.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
}

fn schema(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Schema {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Trials,
    Steps,
    Curve,
    Sweep,
    Baselines,
}

impl TableKind {
    const ALL: [Self; 5] = [Self::Trials, Self::Steps, Self::Curve, Self::Sweep, Self::Baselines];

    pub fn name(self) -> &'static str {
        match self {
            Self::Trials => "trials",
            Self::Steps => "steps",
            Self::Curve => "curve",
            Self::Sweep => "sweep",
            Self::Baselines => "baselines",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Trials => &[
                "seed",
                "true_phase",
                "final_estimate",
                "delta",
                "final_theta",
                "final_beta_mag",
            ],
            Self::Steps => &[
                "seed",
                "step",
                "theta",
                "beta_magnitude",
                "outcome",
                "map_estimate",
                "delta_design",
            ],
            Self::Curve => &["step", "holevo_variance", "holevo_stderr"],
            Self::Sweep => &["alpha_sq", "steps", "pnr", "trials", "holevo_variance", "holevo_stderr"],
            Self::Baselines => &[
                "alpha_sq",
                "qcrb",
                "heterodyne",
                "mkii_asymptotic",
                "cpm_exact",
                "cpm_asymptotic",
                "nongaussian_asymptotic",
                "excess_heterodyne",
                "excess_mkii_asymptotic",
                "excess_nongaussian_asymptotic",
            ],
        }
    }

    fn header(self) -> String {
        format!("# phaseforge {} v{SCHEMA_VERSION}", self.name())
    }

    /// Parses a schema line, rejecting unknown kinds and versions.
    pub fn from_header(line: &str) -> Result<Self, FormatError> {
        let rest = line
            .trim_end()
            .strip_prefix("# phaseforge ")
            .ok_or_else(|| schema(1, "missing `# phaseforge <kind> v<version>` header"))?;
        let (name, version) = rest
            .split_once(' ')
            .ok_or_else(|| schema(1, format!("malformed header `{}`", line.trim_end())))?;
        let kind = Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| schema(1, format!("unknown table kind `{name}`")))?;
        let version: u32 = version
            .strip_prefix('v')
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| schema(1, format!("malformed version `{version}`")))?;
        if version != SCHEMA_VERSION {
            return Err(schema(1, format!("unsupported {name} schema version {version}")));
        }
        Ok(kind)
    }
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table<W: Write>(
    out: W,
    kind: TableKind,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), FormatError> {
    let mut out = out;
    writeln!(out, "{}", kind.header())?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(kind.columns()).map_err(csv_error)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> FormatError {
    let line = e.position().map_or(0, |p| p.line() as usize + 1);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FormatError::Io(io),
        other => schema(line, format!("{other:?}")),
    }
}

/// A parsed data row together with its 1-based line number in the file.
pub struct Row {
    pub line: usize,
    fields: csv::StringRecord,
    columns: &'static [&'static str],
}

impl Row {
    pub fn get<T: FromStr>(&self, index: usize) -> Result<T, FormatError> {
        let raw = &self.fields[index];
        raw.trim().parse().map_err(|_| {
            schema(
                self.line,
                format!("column `{}`: cannot parse `{raw}`", self.columns[index]),
            )
        })
    }
}

/// Reads the schema line of any table and returns its kind.
pub fn peek_kind(text: &str) -> Result<TableKind, FormatError> {
    let first = text.lines().next().filter(|l| !l.trim().is_empty());
    TableKind::from_header(first.ok_or_else(|| schema(1, "empty file"))?)
}

/// Reads a table of the expected kind.
pub fn read_table<R: Read>(mut input: R, kind: TableKind) -> Result<Vec<Row>, FormatError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let found = peek_kind(&text)?;
    if found != kind {
        return Err(schema(
            1,
            format!("expected a {} table, found {}", kind.name(), found.name()),
        ));
    }
    let body = text.split_once('\n').map_or("", |(_, rest)| rest);
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let columns = kind.columns();
    if headers.iter().map(str::trim).ne(columns.iter().copied()) {
        return Err(schema(2, format!("expected columns {}", columns.join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let fields = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize + 1);
            schema(line, e.to_string())
        })?;
        let line = fields.position().map_or(0, |p| p.line() as usize + 1);
        rows.push(Row { line, fields, columns });
    }
    Ok(rows)
}

pub fn write_trials<W: Write>(out: W, records: &[TrialRecord]) -> Result<(), FormatError> {
    write_table(
        out,
        TableKind::Trials,
        records.iter().map(|r| {
            let last = r.last_step();
            vec![
                r.seed.to_string(),
                fmt_real(r.true_phase),
                fmt_real(r.final_estimate),
                fmt_real(r.error()),
                fmt_real(last.theta),
                fmt_real(last.beta_magnitude),
            ]
        }),
    )
}

pub fn write_steps<W: Write>(out: W, records: &[TrialRecord]) -> Result<(), FormatError> {
    let rows = records.iter().flat_map(|r| {
        r.steps.iter().enumerate().map(|(i, s)| {
            vec![
                r.seed.to_string(),
                (i + 1).to_string(),
                fmt_real(s.theta),
                fmt_real(s.beta_magnitude),
                s.outcome.to_string(),
                fmt_real(s.map_estimate),
                fmt_real(s.delta_design),
            ]
        })
    });
    write_table(out, TableKind::Steps, rows)
}

/// One row of `trials.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub seed: u64,
    pub true_phase: f64,
    pub final_estimate: f64,
    pub delta: f64,
    pub final_theta: f64,
    pub final_beta_mag: f64,
}

pub fn read_trials<R: Read>(input: R) -> Result<Vec<TrialRow>, FormatError> {
    read_table(input, TableKind::Trials)?
        .iter()
        .map(|row| {
            Ok(TrialRow {
                seed: row.get(0)?,
                true_phase: row.get(1)?,
                final_estimate: row.get(2)?,
                delta: row.get(3)?,
                final_theta: row.get(4)?,
                final_beta_mag: row.get(5)?,
            })
        })
        .collect()
}

/// Rebuilds full trial records from `trials.csv` and `steps.csv`.
///
/// Step rows must be grouped by trial in the same order as the trial rows,
/// numbered from 1 within each trial.
pub fn read_records<R1: Read, R2: Read>(trials: R1, steps: R2) -> Result<Vec<TrialRecord>, FormatError> {
    let trials = read_trials(trials)?;
    let steps = read_table(steps, TableKind::Steps)?;
    let mut records: Vec<TrialRecord> = Vec::with_capacity(trials.len());
    let mut rows = steps.iter().peekable();
    for trial in &trials {
        let mut record = TrialRecord {
            seed: trial.seed,
            true_phase: trial.true_phase,
            final_estimate: trial.final_estimate,
            steps: Vec::new(),
        };
        while let Some(row) = rows.next_if(|row| row.get::<u64>(0).ok() == Some(trial.seed)) {
            let step: usize = row.get(1)?;
            if step != record.steps.len() + 1 {
                return Err(schema(row.line, format!("step {step} out of sequence")));
            }
            record.steps.push(StepRecord {
                theta: row.get(2)?,
                beta_magnitude: row.get(3)?,
                outcome: row.get(4)?,
                map_estimate: row.get(5)?,
                delta_design: row.get(6)?,
            });
        }
        match record.steps.last() {
            None => return Err(schema(0, format!("no steps recorded for seed {}", trial.seed))),
            Some(last) if last.map_estimate != trial.final_estimate => {
                return Err(schema(
                    0,
                    format!("seed {}: final estimate disagrees with last step", trial.seed),
                ))
            }
            Some(_) => {}
        }
        records.push(record);
    }
    if let Some(row) = rows.next() {
        return Err(schema(row.line, "step row does not belong to any trial"));
    }
    Ok(records)
}

pub fn write_curve<W: Write>(out: W, curve: &[StepStatistic]) -> Result<(), FormatError> {
    write_table(
        out,
        TableKind::Curve,
        curve.iter().map(|s| {
            vec![
                s.step.to_string(),
                fmt_real(s.holevo_variance),
                fmt_real(s.holevo_stderr),
            ]
        }),
    )
}

pub fn read_curve<R: Read>(input: R) -> Result<Vec<StepStatistic>, FormatError> {
    read_table(input, TableKind::Curve)?
        .iter()
        .map(|row| {
            Ok(StepStatistic {
                step: row.get(0)?,
                holevo_variance: row.get(1)?,
                holevo_stderr: row.get(2)?,
            })
        })
        .collect()
}

/// One ensemble summary in a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha_sq: f64,
    pub steps: usize,
    pub pnr: usize,
    pub trials: usize,
    pub holevo_variance: f64,
    pub holevo_stderr: f64,
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), FormatError> {
    write_table(
        out,
        TableKind::Sweep,
        rows.iter().map(|r| {
            vec![
                fmt_real(r.alpha_sq),
                r.steps.to_string(),
                r.pnr.to_string(),
                r.trials.to_string(),
                fmt_real(r.holevo_variance),
                fmt_real(r.holevo_stderr),
            ]
        }),
    )
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRow>, FormatError> {
    read_table(input, TableKind::Sweep)?
        .iter()
        .map(|row| {
            Ok(SweepRow {
                alpha_sq: row.get(0)?,
                steps: row.get(1)?,
                pnr: row.get(2)?,
                trials: row.get(3)?,
                holevo_variance: row.get(4)?,
                holevo_stderr: row.get(5)?,
            })
        })
        .collect()
}

pub fn write_baselines<W: Write>(out: W, table: &BaselineTable) -> Result<(), FormatError> {
    write_table(
        out,
        TableKind::Baselines,
        table.rows.iter().map(|r| {
            let (het, mkii, ng) = r.excess_over_cpm();
            [
                r.alpha_sq,
                r.qcrb,
                r.heterodyne,
                r.mkii_asymptotic,
                r.cpm_exact,
                r.cpm_asymptotic,
                r.nongaussian_asymptotic,
                het,
                mkii,
                ng,
            ]
            .into_iter()
            .map(fmt_real)
            .collect()
        }),
    )
}

/// Reads the value columns; the excess columns are recomputed on demand.
pub fn read_baselines<R: Read>(input: R) -> Result<BaselineTable, FormatError> {
    let rows = read_table(input, TableKind::Baselines)?
        .iter()
        .map(|row| {
            Ok(BaselineRow {
                alpha_sq: row.get(0)?,
                qcrb: row.get(1)?,
                heterodyne: row.get(2)?,
                mkii_asymptotic: row.get(3)?,
                cpm_exact: row.get(4)?,
                cpm_asymptotic: row.get(5)?,
                nongaussian_asymptotic: row.get(6)?,
            })
        })
        .collect::<Result<_, FormatError>>()?;
    Ok(BaselineTable { rows })
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema: String,
    schema_version: u32,
    artifact_version: String,
    #[serde(flatten)]
    body: T,
}

/// Writes `body` as a pretty-printed JSON document tagged with `kind`.
pub fn write_json<W: Write, T: Serialize>(mut out: W, kind: &str, body: &T) -> Result<(), FormatError> {
    let envelope = Envelope {
        schema: format!("phaseforge {kind}"),
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION.to_string(),
        body,
    };
    serde_json::to_writer_pretty(&mut out, &envelope).map_err(|e| FormatError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

/// Reads a JSON document written by [`write_json`] for the same `kind`.
pub fn read_json<R: BufRead, T: DeserializeOwned>(input: R, kind: &str) -> Result<T, FormatError> {
    let value: serde_json::Value = serde_json::from_reader(input).map_err(|e| schema(e.line(), e.to_string()))?;
    let expected = format!("phaseforge {kind}");
    if value.get("schema").and_then(|s| s.as_str()) != Some(expected.as_str()) {
        return Err(schema(1, format!("not a {kind} document")));
    }
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(schema(1, format!("unsupported {kind} schema version {v}"))),
        None => return Err(schema(1, "missing schema_version")),
    }
    let envelope: Envelope<T> = serde_json::from_value(value).map_err(|e| schema(0, e.to_string()))?;
    Ok(envelope.body)
}

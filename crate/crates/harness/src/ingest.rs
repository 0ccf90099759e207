//! Pain-report ingestion: nonzero reports become event times in days,
//! anchored so each subject's first event sits at zero.
//!
//! CSV input needs the columns `subject_id,timestamp,pain_level`; JSON input is
//! an object mapping subject id to a list of `{timestamp, pain_level}`.
//! Timestamps are RFC 3339 / ISO-8601 strings (naive ones are read as UTC),
//! plain dates, or numbers in [`NumericUnit`]s.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use sparse_hawkes::EventSeries;

use crate::error::{HarnessError, Result};

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Csv,
    Json,
}

impl InputFormat {
    /// Guess from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(InputFormat::Csv),
            "json" => Some(InputFormat::Json),
            _ => None,
        }
    }
}

/// Unit of numeric timestamps. ISO strings are unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NumericUnit {
    /// Seconds since the Unix epoch.
    #[default]
    Seconds,
    Days,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Collapse nonzero reports sharing a timestamp instead of rejecting them.
    pub merge_duplicates: bool,
    pub numeric_unit: NumericUnit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawReportRecord {
    pub subject_id: String,
    /// In the unit of the source: seconds for ISO strings and epoch numbers, days for `NumericUnit::Days`.
    pub timestamp: f64,
    pub pain_level: u8,
    /// 1-based source line, when known.
    pub line: Option<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub series: Vec<EventSeries>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stamp {
    Seconds(f64),
    Days(f64),
}

fn parse_stamp(raw: &str, unit: NumericUnit) -> std::result::Result<Stamp, String> {
    let s = raw.trim();
    if let Ok(v) = s.parse::<f64>() {
        if !v.is_finite() {
            return Err(format!("timestamp '{s}' is not finite"));
        }
        return Ok(match unit {
            NumericUnit::Seconds => Stamp::Seconds(v),
            NumericUnit::Days => Stamp::Days(v),
        });
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(Stamp::Seconds(epoch_seconds(dt.naive_utc())));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(Stamp::Seconds(epoch_seconds(dt)));
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(Stamp::Seconds(epoch_seconds(
            d.and_hms_opt(0, 0, 0).expect("midnight"),
        )));
    }
    Err(format!("cannot parse timestamp '{s}'"))
}

fn epoch_seconds(dt: NaiveDateTime) -> f64 {
    let utc = dt.and_utc();
    utc.timestamp() as f64 + f64::from(utc.timestamp_subsec_nanos()) * 1e-9
}

fn parse_pain(raw: &str) -> std::result::Result<u8, String> {
    let s = raw.trim();
    let v: i64 = s
        .parse()
        .map_err(|_| format!("pain_level '{s}' is not an integer"))?;
    if !(0..=10).contains(&v) {
        return Err(format!("pain_level {v} outside 0..=10"));
    }
    Ok(v as u8)
}

fn located(line: Option<u64>, subject: &str, msg: String) -> HarnessError {
    match line {
        Some(l) => HarnessError::Data(format!("line {l}: {msg}")),
        None => HarnessError::Data(format!("subject '{subject}': {msg}")),
    }
}

#[derive(Deserialize)]
struct CsvRow {
    subject_id: String,
    timestamp: String,
    pain_level: String,
}

fn read_csv(text: &str, unit: NumericUnit) -> Result<Vec<(RawReportRecord, Stamp)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    for col in ["subject_id", "timestamp", "pain_level"] {
        if !headers.iter().any(|h| h == col) {
            return Err(HarnessError::Data(format!(
                "line 1: missing column '{col}'"
            )));
        }
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record =
            record.map_err(|e| located(e.position().map(|p| p.line()), "?", e.to_string()))?;
        let line = record.position().map(|p| p.line());
        let row: CsvRow = record
            .deserialize(Some(&headers))
            .map_err(|e| located(line, "?", e.to_string()))?;
        let stamp =
            parse_stamp(&row.timestamp, unit).map_err(|m| located(line, &row.subject_id, m))?;
        let pain_level =
            parse_pain(&row.pain_level).map_err(|m| located(line, &row.subject_id, m))?;
        if row.subject_id.is_empty() {
            return Err(located(line, "", "empty subject_id".into()));
        }
        out.push((
            RawReportRecord {
                subject_id: row.subject_id,
                timestamp: stamp_value(stamp),
                pain_level,
                line,
            },
            stamp,
        ));
    }
    Ok(out)
}

fn stamp_value(s: Stamp) -> f64 {
    match s {
        Stamp::Seconds(v) | Stamp::Days(v) => v,
    }
}

#[derive(Deserialize)]
struct JsonReport {
    timestamp: serde_json::Value,
    pain_level: serde_json::Value,
}

fn read_json(text: &str, unit: NumericUnit) -> Result<Vec<(RawReportRecord, Stamp)>> {
    let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
        .map_err(|e| HarnessError::Data(format!("line {}: {e}", e.line())))?;
    let mut out = Vec::new();
    for (subject, reports) in map {
        let reports: Vec<JsonReport> = serde_json::from_value(reports)
            .map_err(|e| HarnessError::Data(format!("subject '{subject}': {e}")))?;
        for (i, r) in reports.into_iter().enumerate() {
            let ctx =
                |m: String| HarnessError::Data(format!("subject '{subject}', report {i}: {m}"));
            let ts = match &r.timestamp {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => {
                    return Err(ctx(format!(
                        "timestamp {other} is neither string nor number"
                    )))
                }
            };
            let pain = match &r.pain_level {
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::String(s) => s.clone(),
                other => return Err(ctx(format!("pain_level {other} is not an integer"))),
            };
            let stamp = parse_stamp(&ts, unit).map_err(ctx)?;
            let pain_level = parse_pain(&pain).map_err(ctx)?;
            out.push((
                RawReportRecord {
                    subject_id: subject.clone(),
                    timestamp: stamp_value(stamp),
                    pain_level,
                    line: None,
                },
                stamp,
            ));
        }
    }
    Ok(out)
}

/// Parses reports without building series.
pub fn parse_reports(
    text: &str,
    format: InputFormat,
    unit: NumericUnit,
) -> Result<Vec<RawReportRecord>> {
    let rows = match format {
        InputFormat::Csv => read_csv(text, unit)?,
        InputFormat::Json => read_json(text, unit)?,
    };
    Ok(rows.into_iter().map(|(r, _)| r).collect())
}

pub fn ingest_str(text: &str, format: InputFormat, options: &IngestOptions) -> Result<Ingested> {
    let rows = match format {
        InputFormat::Csv => read_csv(text, options.numeric_unit)?,
        InputFormat::Json => read_json(text, options.numeric_unit)?,
    };
    // subjects in order of first appearance
    let mut order: Vec<String> = Vec::new();
    let mut by_subject: HashMap<String, Vec<(RawReportRecord, Stamp)>> = HashMap::new();
    for (rec, stamp) in rows {
        by_subject
            .entry(rec.subject_id.clone())
            .or_insert_with(|| {
                order.push(rec.subject_id.clone());
                Vec::new()
            })
            .push((rec, stamp));
    }

    let mut out = Ingested::default();
    for subject in order {
        let mut events: Vec<(RawReportRecord, Stamp)> = by_subject
            .remove(&subject)
            .expect("grouped above")
            .into_iter()
            .filter(|(r, _)| r.pain_level > 0)
            .collect();
        if events.is_empty() {
            out.warnings.push(format!(
                "subject '{subject}' has no nonzero reports; dropped"
            ));
            continue;
        }
        events.sort_by(|a, b| stamp_value(a.1).total_cmp(&stamp_value(b.1)));

        let mut kept: Vec<(RawReportRecord, Stamp)> = Vec::with_capacity(events.len());
        for ev in events {
            if let Some(prev) = kept.last() {
                if stamp_value(prev.1) == stamp_value(ev.1) {
                    if options.merge_duplicates {
                        out.warnings.push(format!(
                            "subject '{subject}': merged duplicate timestamp {}",
                            stamp_value(ev.1)
                        ));
                        continue;
                    }
                    let where_ = match (prev.0.line, ev.0.line) {
                        (Some(a), Some(b)) => format!("lines {a} and {b}"),
                        _ => format!("subject '{subject}'"),
                    };
                    return Err(HarnessError::Data(format!(
                        "{where_}: duplicate nonzero reports at timestamp {} (use merge to collapse)",
                        stamp_value(ev.1)
                    )));
                }
            }
            kept.push(ev);
        }

        let origin = kept[0].1;
        let times: Vec<f64> = kept
            .iter()
            .map(|(_, s)| match (s, origin) {
                (Stamp::Seconds(v), Stamp::Seconds(o)) => (v - o) / SECONDS_PER_DAY,
                (Stamp::Days(v), Stamp::Days(o)) => v - o,
                (Stamp::Seconds(v), Stamp::Days(o)) => v / SECONDS_PER_DAY - o,
                (Stamp::Days(v), Stamp::Seconds(o)) => v - o / SECONDS_PER_DAY,
            })
            .collect();
        let series = EventSeries::new(subject.clone(), times, None)
            .map_err(|e| HarnessError::Data(format!("subject '{subject}': {e}")))?;
        out.series.push(series);
    }
    Ok(out)
}

pub fn ingest(path: &Path, format: InputFormat, options: &IngestOptions) -> Result<Ingested> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    ingest_str(&text, format, options)
}

/// Writes series back as report CSV with day-offset timestamps and pain level 1.
/// Re-ingesting with [`NumericUnit::Days`] reproduces the series exactly.
pub fn serialize_csv(series: &[EventSeries]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["subject_id", "timestamp", "pain_level"])?;
    for s in series {
        for t in s.times() {
            w.write_record([s.id(), &t.to_string(), "1"])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

impl FromStr for InputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "json" => Ok(InputFormat::Json),
            other => Err(HarnessError::Usage(format!(
                "unknown input format '{other}'"
            ))),
        }
    }
}

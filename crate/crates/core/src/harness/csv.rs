//! CSV persistence for SEP curves.
//!
//! The file starts with `# key: value` metadata lines, then a header row and
//! one row per (detector, Eb/N0). Floats use the shortest representation that
//! parses back to the same value; absent values are empty fields.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::config::Method;
use super::experiment::{CurveMetadata, SepCurve, SepRow};
use crate::error::{Error, Result};

pub const HEADER: [&str; 9] = [
    "detector",
    "eb_n0_db",
    "symbols",
    "errors",
    "sep",
    "stderr",
    "analytic_bound",
    "analytic_floor",
    "low_confidence",
];

fn float(x: f64) -> String {
    format!("{x:?}")
}

fn optional(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn write_csv<W: Write>(curve: &SepCurve, mut out: W) -> Result<()> {
    let m = &curve.metadata;
    writeln!(out, "# seed: {}", m.seed)?;
    writeln!(out, "# config_hash: {}", m.config_hash)?;
    writeln!(out, "# scenario: {}", m.scenario)?;
    writeln!(out, "# constellation: {}", m.constellation)?;
    writeln!(out, "# energy_convention: {}", m.energy_convention)?;
    writeln!(out, "# rng: {}", m.rng)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in &curve.rows {
        w.write_record([
            row.detector.to_string(),
            float(row.eb_n0_db),
            row.symbols.to_string(),
            row.errors.to_string(),
            optional(row.sep),
            optional(row.stderr),
            optional(row.analytic_bound),
            optional(row.analytic_floor),
            row.low_confidence.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the curve to `path`, replacing any existing file.
pub fn emit_csv(curve: &SepCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    write_csv(curve, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn to_csv_string(curve: &SepCurve) -> String {
    let mut buf = Vec::new();
    write_csv(curve, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn parse_csv<R: Read>(mut input: R) -> Result<SepCurve> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut meta = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix('#') else { break };
        let (key, value) = rest.split_once(':').ok_or_else(|| Error::Parse {
            line: i + 1,
            reason: "metadata line without `:`".into(),
        })?;
        meta.insert(key.trim().to_string(), value.trim().to_string());
    }
    let take = |key: &str| {
        meta.get(key).cloned().ok_or_else(|| Error::Parse {
            line: 0,
            reason: format!("missing metadata `{key}`"),
        })
    };
    let metadata = CurveMetadata {
        seed: take("seed")?.parse().map_err(|_| Error::Parse {
            line: 1,
            reason: "seed is not an integer".into(),
        })?,
        config_hash: take("config_hash")?,
        scenario: take("scenario")?,
        constellation: take("constellation")?,
        energy_convention: take("energy_convention")?,
        rng: take("rng")?,
    };

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().ne(HEADER) {
        return Err(Error::Parse {
            line: meta.len() + 1,
            reason: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let err = |field: &str| Error::Parse {
            line,
            reason: format!("bad `{field}` value"),
        };
        let get = |i: usize| record.get(i).unwrap_or("");
        let opt = |i: usize| -> Result<Option<f64>> {
            match get(i) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| err(HEADER[i])),
            }
        };
        rows.push(SepRow {
            detector: get(0).parse::<Method>().map_err(|_| err(HEADER[0]))?,
            eb_n0_db: get(1).parse().map_err(|_| err(HEADER[1]))?,
            symbols: get(2).parse().map_err(|_| err(HEADER[2]))?,
            errors: get(3).parse().map_err(|_| err(HEADER[3]))?,
            sep: opt(4)?,
            stderr: opt(5)?,
            analytic_bound: opt(6)?,
            analytic_floor: opt(7)?,
            low_confidence: get(8).parse().map_err(|_| err(HEADER[8]))?,
        });
    }
    Ok(SepCurve { metadata, rows })
}

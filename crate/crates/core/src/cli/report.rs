//! Run reports and their CSV and JSON encodings.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::{Error, Module, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One metric, named by the module operation that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub operation: String,
    pub metric: String,
    pub label: String,
    pub value: f64,
}

impl Row {
    pub fn new(operation: &str, metric: &str, label: impl Into<String>, value: f64) -> Self {
        Row {
            operation: operation.into(),
            metric: metric.into(),
            label: label.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub operation: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: RunConfig,
    pub rows: Vec<Row>,
    /// Window elements skipped because an argument fell below 1.
    pub skipped: u64,
    /// Present only when requested; wall-clock values differ between runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

/// Fixed notation with 12 significant digits.
pub fn format_value(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.11}", 0.0);
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (11 - exponent).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new leading digit
    let digits = s.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count();
    if digits > 12 && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

pub fn emit_report(report: &RunReport, format: Format) -> Result<Vec<u8>> {
    let io = |e: &dyn std::fmt::Display| Error::Io {
        module: Module::Cli,
        message: e.to_string(),
    };
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).map_err(|e| io(&e))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["operation", "metric", "label", "value"])
                .map_err(|e| io(&e))?;
            for r in &report.rows {
                w.write_record([&r.operation, &r.metric, &r.label, &format_value(r.value)])
                    .map_err(|e| io(&e))?;
            }
            w.into_inner().map_err(|e| io(&e))
        }
    }
}

/// Writes atomically through a temporary file in the target directory, or
/// to standard output.
pub(crate) fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        module: Module::Cli,
        message: e.to_string(),
    };
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).map_err(io)?;
            out.flush().map_err(io)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(bytes).map_err(io)?;
            tmp.as_file().sync_all().map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::{resolve, CommandName, ParamArgs};

    fn report(rows: Vec<Row>) -> RunReport {
        RunReport {
            version: "0.0.0".into(),
            config: resolve(CommandName::Correlate, &ParamArgs::default(), &ParamArgs::default()).unwrap(),
            rows,
            skipped: 0,
            timings: None,
        }
    }

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(0.1067), "0.106700000000");
        assert_eq!(format_value(-0.921_023_809_523_809_5), "-0.921023809524");
        assert_eq!(format_value(96577.0), "96577.0000000");
        assert_eq!(format_value(0.0), "0.00000000000");
        assert_eq!(format_value(1e13), "10000000000000");
        assert_eq!(format_value(9.999_999_999_999_9), "10.0000000000");
        for v in [1e-7, 3.3, -123456.789, 0.999_999_999_999_99] {
            let s = format_value(v);
            assert!(!s.contains('e'));
            assert!((s.parse::<f64>().unwrap() - v).abs() <= v.abs() * 1e-11);
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let bytes = emit_report(&report(vec![]), Format::Csv).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "operation,metric,label,value\n");
    }

    #[test]
    fn csv_field_count_is_constant() {
        let r = report(vec![
            Row::new("a", "b", "plain", 1.0),
            Row::new("a", "b", "with,comma", 2.0),
            Row::new("a", "b", "with \"quote\"", 3.0),
        ]);
        let bytes = emit_report(&r, Format::Csv).unwrap();
        let mut rd = csv::Reader::from_reader(bytes.as_slice());
        for rec in rd.records() {
            assert_eq!(rec.unwrap().len(), 4);
        }
    }

    #[test]
    fn json_round_trips() {
        let mut r = report(vec![Row::new("correlation2", "raw_re", "", -0.25)]);
        r.timings = Some(vec![Timing {
            operation: "x".into(),
            seconds: 0.5,
        }]);
        let bytes = emit_report(&r, Format::Json).unwrap();
        assert_eq!(serde_json::from_slice::<RunReport>(&bytes).unwrap(), r);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        std::fs::write(&path, "old").unwrap();
        write_output(Some(&path), b"new").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"new");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

//! Reading and writing traces as delimited text.
//!
//! Two input formats are supported:
//!
//! * generic CSV (`,` by default), optional single header row, LF or CRLF;
//! * SPICE-style plain-text export: a header line whose first column is the
//!   time label, then tab-separated `time<TAB>value` rows.
//!
//! Numbers are parsed with Rust's locale-independent float grammar, so the
//! decimal separator is always `.`. Every error carries a 1-based line number.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::series::{Samples, SeriesMeta, TimeSeries};

/// Column layout for [`parse_trace_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub time_column: usize,
    pub value_column: usize,
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            time_column: 0,
            value_column: 1,
            delimiter: b',',
            has_header: false,
        }
    }
}

impl CsvOptions {
    pub fn with_header(mut self, has_header: bool) -> Self {
        self.has_header = has_header;
        self
    }
}

/// Parses delimited text into a validated [`TimeSeries`].
///
/// The signal label is taken from the header's value column when a header is
/// present, otherwise it is `"v"`. The time unit is recorded as `"s"`.
pub fn parse_trace_csv(text: &[u8], options: &CsvOptions) -> Result<TimeSeries> {
    if options.time_column == options.value_column {
        return Err(Error::Domain(
            "time and value columns must differ".to_string(),
        ));
    }
    let mut rows = Rows::new(text, options.delimiter);
    let mut label = "v".to_string();
    if options.has_header {
        match rows.next_record()? {
            Some((_, fields)) => {
                if let Some(name) = fields.get(options.value_column) {
                    if !name.is_empty() {
                        label = name.clone();
                    }
                }
            }
            None => {
                return Err(Error::InsufficientRows { line: 1, found: 0 });
            }
        }
    }
    let (t, v) = read_body(&mut rows, options.time_column, options.value_column)?;
    TimeSeries::new(t, v, SeriesMeta::new("", label, "s"))
}

/// Parses a SPICE-tool plain-text export (`time<TAB>signal` header, then
/// tab-separated rows). Trailing blank lines are ignored.
pub fn parse_spice_export(text: &[u8]) -> Result<TimeSeries> {
    let mut rows = Rows::new(text, b'\t');
    let header = match rows.next_record()? {
        Some((1, fields)) => fields,
        Some((_, _)) | None => {
            return Err(Error::MissingHeader {
                found: String::new(),
            })
        }
    };
    let is_time_label = header
        .first()
        .map(|f| f.trim_matches('"').eq_ignore_ascii_case("time"))
        .unwrap_or(false);
    if !is_time_label || header.len() < 2 {
        return Err(Error::MissingHeader {
            found: header.join("\t"),
        });
    }
    let label = header[1].trim_matches('"').to_string();
    let (t, v) = read_body(&mut rows, 0, 1)?;
    TimeSeries::new(t, v, SeriesMeta::new("", label, "s"))
}

/// Serialises any series as `t,v` CSV with LF line endings.
///
/// Numbers use the shortest representation that parses back to the same
/// `f64`, so `parse_trace_csv(write_series_csv(s))` reproduces `s` bit for bit.
pub fn write_series_csv<S: Samples + ?Sized>(series: &S) -> Vec<u8> {
    let mut out = String::with_capacity(16 + series.len() * 40);
    out.push_str("t,v\n");
    for k in 0..series.len() {
        let _ = writeln!(out, "{},{}", series.time_at(k), series.value_at(k));
    }
    out.into_bytes()
}

struct Rows<'a> {
    reader: csv::Reader<&'a [u8]>,
    record: csv::StringRecord,
    last_line: u64,
}

impl<'a> Rows<'a> {
    fn new(text: &'a [u8], delimiter: u8) -> Self {
        let reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .from_reader(text);
        Self {
            reader,
            record: csv::StringRecord::new(),
            last_line: 0,
        }
    }

    /// Next non-blank record with its 1-based line number.
    fn next_record(&mut self) -> Result<Option<(u64, Vec<String>)>> {
        loop {
            let more = self.reader.read_record(&mut self.record).map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(self.last_line + 1);
                let message = match e.kind() {
                    csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
                    _ => e.to_string(),
                };
                Error::Parse { line, message }
            })?;
            if !more {
                return Ok(None);
            }
            let line = self
                .record
                .position()
                .map(|p| p.line())
                .unwrap_or(self.last_line + 1);
            self.last_line = line;
            if self.record.iter().all(str::is_empty) {
                continue;
            }
            return Ok(Some((
                line,
                self.record.iter().map(str::to_string).collect(),
            )));
        }
    }
}

fn parse_number(field: &str, line: u64, what: &str) -> Result<f64> {
    let value: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} {field:?} as a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what} {field:?} is not finite"),
        });
    }
    Ok(value)
}

fn read_body(
    rows: &mut Rows<'_>,
    time_col: usize,
    value_col: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let needed = time_col.max(value_col) + 1;
    let mut t = Vec::new();
    let mut v = Vec::new();
    while let Some((line, fields)) = rows.next_record()? {
        if fields.len() < needed {
            return Err(Error::Parse {
                line,
                message: format!("expected at least {needed} fields, found {}", fields.len()),
            });
        }
        let time = parse_number(&fields[time_col], line, "time")?;
        let value = parse_number(&fields[value_col], line, "value")?;
        if let Some(&previous) = t.last() {
            if time <= previous {
                return Err(Error::NonMonotoneTime {
                    line,
                    time,
                    previous,
                });
            }
        }
        t.push(time);
        v.push(value);
    }
    if t.len() < 2 {
        return Err(Error::InsufficientRows {
            line: rows.last_line.max(1),
            found: t.len(),
        });
    }
    Ok((t, v))
}

//! Dataset ingestion: the long-form CSV layout and the line-oriented
//! sample-stream format used on standard input.
//!
//! CSV layout: header `series_id,label,v1,...,vn`, then one sample per
//! row. Rows of one series must be contiguous and in time order; values
//! use `.` decimals and `,` separators.
//!
//! Stream layout: one sample per line of comma-separated reals, prefixed
//! with `label,` in training mode; a blank line marks a series boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::Series;

/// One labeled series.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub series_id: String,
    pub label: String,
    pub series: Series,
}

/// A collection of labeled series with a shared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    entries: Vec<DatasetEntry>,
    dim: usize,
}

impl Dataset {
    /// Validates unique series ids and a consistent dimension.
    pub fn new(entries: Vec<DatasetEntry>) -> Result<Self> {
        let first = entries.first().ok_or(Error::EmptyInput("dataset"))?;
        let dim = first.series.dim();
        let mut seen = BTreeSet::new();
        for e in &entries {
            if e.series.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.series.dim(),
                });
            }
            if !seen.insert(e.series_id.as_str()) {
                return Err(Error::MissingData(format!(
                    "duplicate series_id `{}`",
                    e.series_id
                )));
            }
        }
        Ok(Self { entries, dim })
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.label.as_str()).collect()
    }

    /// Entry indices grouped by label, in label order.
    pub fn indices_by_label(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut map: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            map.entry(e.label.as_str()).or_default().push(i);
        }
        map
    }

    /// Series grouped by label, for parameter selection.
    pub fn series_by_label(&self) -> BTreeMap<String, Vec<&Series>> {
        let mut map: BTreeMap<String, Vec<&Series>> = BTreeMap::new();
        for e in &self.entries {
            map.entry(e.label.clone()).or_default().push(&e.series);
        }
        map
    }
}

fn parse_err(path: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        reason: reason.into(),
    }
}

fn parse_value(field: &str, path: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid number `{field}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value `{field}`")));
    }
    Ok(v)
}

/// Loads a dataset from the long-form CSV file at `path`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    load_csv_from_reader(BufReader::new(file), &path.display().to_string())
}

/// Loads a dataset from any reader; `origin` labels parse errors.
pub fn load_csv_from_reader(reader: impl BufRead, origin: &str) -> Result<Dataset> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break (i + 1, line);
            }
            None => return Err(Error::EmptyInput("dataset")),
        }
    };
    let (header_line, header_text) = header;
    let fields: Vec<&str> = header_text.trim().split(',').collect();
    if fields.len() < 3 || fields[0] != "series_id" || fields[1] != "label" {
        return Err(parse_err(
            origin,
            header_line,
            "expected header `series_id,label,v1,...,vn`",
        ));
    }
    let dim = fields.len() - 2;

    let mut entries: Vec<DatasetEntry> = Vec::new();
    let mut closed: BTreeSet<String> = BTreeSet::new();
    let mut current: Option<(String, String, Vec<Vec<f64>>, usize)> = None;

    let close =
        |cur: Option<(String, String, Vec<Vec<f64>>, usize)>, entries: &mut Vec<DatasetEntry>| {
            if let Some((id, label, rows, first_line)) = cur {
                let series = Series::from_rows(&rows).map_err(|e| {
                    parse_err(origin, first_line, format!("series `{id}`: {e}"))
                })?;
                entries.push(DatasetEntry {
                    series_id: id,
                    label,
                    series,
                });
            }
            Ok::<(), Error>(())
        };

    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(parse_err(
                origin,
                lineno,
                format!("expected {} fields, got {}", dim + 2, fields.len()),
            ));
        }
        let id = fields[0].trim();
        let label = fields[1].trim();
        if id.is_empty() || label.is_empty() {
            return Err(parse_err(origin, lineno, "empty series_id or label"));
        }
        let mut values = Vec::with_capacity(dim);
        for f in &fields[2..] {
            values.push(parse_value(f, origin, lineno)?);
        }

        match &mut current {
            Some((cur_id, cur_label, rows, _)) if cur_id == id => {
                if cur_label != label {
                    return Err(parse_err(
                        origin,
                        lineno,
                        format!("series `{id}` changes label from `{cur_label}` to `{label}`"),
                    ));
                }
                rows.push(values);
            }
            _ => {
                if closed.contains(id) {
                    return Err(parse_err(
                        origin,
                        lineno,
                        format!("rows of series `{id}` are not contiguous"),
                    ));
                }
                if let Some((prev_id, ..)) = &current {
                    closed.insert(prev_id.clone());
                }
                close(current.take(), &mut entries)?;
                current = Some((id.to_string(), label.to_string(), vec![values], lineno));
            }
        }
    }
    close(current.take(), &mut entries)?;
    if entries.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    Dataset::new(entries)
}

/// Writes a dataset in the long-form CSV layout. Values round-trip
/// bit-exactly through [`load_csv`].
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::new();
    write_csv_to_writer(dataset, &mut out)?;
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_csv_to_writer(dataset: &Dataset, mut w: impl Write) -> Result<()> {
    let dim = dataset.dim();
    write!(w, "series_id,label")?;
    for k in 1..=dim {
        write!(w, ",v{k}")?;
    }
    writeln!(w)?;
    for e in dataset.entries() {
        for part in [&e.series_id, &e.label] {
            if part.contains(',') || part.contains('\n') {
                return Err(Error::invalid(
                    "dataset",
                    format!("`{part}` contains a comma or newline"),
                ));
            }
        }
        for row in e.series.samples() {
            write!(w, "{},{}", e.series_id, e.label)?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// One parsed line of the standard-input stream format.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamEvent {
    /// A sample, labeled in training mode.
    Sample {
        label: Option<String>,
        values: Vec<f64>,
    },
    /// A blank line: series boundary, the stream resets.
    Boundary,
}

/// Parses one line of the stream format. `labeled` selects training mode,
/// where the first field is the label.
pub fn parse_stream_line(
    line: &str,
    labeled: bool,
    origin: &str,
    lineno: usize,
) -> Result<StreamEvent> {
    if line.trim().is_empty() {
        return Ok(StreamEvent::Boundary);
    }
    let fields: Vec<&str> = line.split(',').collect();
    let (label, value_fields) = if labeled {
        if fields.len() < 2 {
            return Err(parse_err(
                origin,
                lineno,
                "training line needs `label,v1,...`",
            ));
        }
        let label = fields[0].trim();
        if label.is_empty() {
            return Err(parse_err(origin, lineno, "empty label"));
        }
        (Some(label.to_string()), &fields[1..])
    } else {
        (None, &fields[..])
    };
    let mut values = Vec::with_capacity(value_fields.len());
    for f in value_fields {
        values.push(parse_value(f, origin, lineno)?);
    }
    Ok(StreamEvent::Sample { label, values })
}

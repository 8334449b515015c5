//! Dataset files.
//!
//! CSV layout (UTF-8, LF line endings, no quoting):
//!
//! ```text
//! # murmurforge-v1
//! label,degree,weight,conductor,order,origins,a_2,a_3,...,a_997
//! 11.a,2,1,11,0,CMF;ECQ,-2,-1,1,...
//! ```
//!
//! JSON layout: `{"format_version":1,"records":[{"label":..,"degree":..,
//! "weight":..,"conductor":..,"order":..,"origins":[..],"ap":[..]},..]}`.
//!
//! Paths ending in `.gz` are gzip-compressed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Warning};
use crate::error::{Error, Result};
use crate::record::{LFunctionRecord, OriginSet, PrimeBasis, NUM_PRIMES};

pub const FORMAT_VERSION: u32 = 1;
pub const CSV_VERSION_LINE: &str = "# murmurforge-v1";
pub const META_COLUMNS: [&str; 6] = ["label", "degree", "weight", "conductor", "order", "origins"];

/// The 174 column names in file order.
pub fn header_columns() -> Vec<String> {
    META_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(PrimeBasis.iter().map(|p| format!("a_{p}")))
        .collect()
}

fn parse_err(row: usize, column: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.into(),
        message: message.into(),
    }
}

/// Decimal integer: optional `-` followed by ASCII digits, nothing else.
fn parse_i64(s: &str) -> Option<i64> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    // Accumulate negatively so i64::MIN parses.
    let mut acc: i64 = 0;
    for b in digits.bytes() {
        acc = acc.checked_mul(10)?.checked_sub((b - b'0') as i64)?;
    }
    if neg {
        Some(acc)
    } else {
        acc.checked_neg()
    }
}

fn parse_u<T: TryFrom<i64>>(s: &str) -> Option<T> {
    if s.starts_with('-') {
        return None;
    }
    parse_i64(s).and_then(|v| T::try_from(v).ok())
}

fn parse_row(line: &str, row: usize, columns: &[String]) -> Result<LFunctionRecord> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != columns.len() {
        return Err(parse_err(
            row,
            "*",
            format!("expected {} cells, found {}", columns.len(), cells.len()),
        ));
    }
    let label = cells[0].to_string();
    if !crate::record::is_valid_label(&label) {
        return Err(parse_err(row, "label", format!("invalid label {label:?}")));
    }
    let uint = |i: usize| -> Result<u64> {
        parse_u::<u64>(cells[i]).ok_or_else(|| {
            parse_err(
                row,
                columns[i].as_str(),
                format!("{:?} is not a non-negative integer", cells[i]),
            )
        })
    };
    let small = |i: usize| -> Result<u32> {
        u32::try_from(uint(i)?).map_err(|_| parse_err(row, columns[i].as_str(), "value too large"))
    };
    let degree = small(1)?;
    let weight = small(2)?;
    let conductor = uint(3)?;
    let order = small(4)?;
    let origins: OriginSet = cells[5]
        .parse()
        .map_err(|e: crate::record::UnknownOrigin| parse_err(row, "origins", e.to_string()))?;
    let mut ap = Vec::with_capacity(NUM_PRIMES);
    for (i, cell) in cells.iter().enumerate().skip(META_COLUMNS.len()) {
        let v = parse_i64(cell).ok_or_else(|| {
            parse_err(
                row,
                columns[i].as_str(),
                format!("{cell:?} is not an integer"),
            )
        })?;
        ap.push(v);
    }
    Ok(LFunctionRecord {
        label,
        degree,
        weight,
        conductor,
        order,
        origins,
        ap,
    })
}

/// Reads a CSV dataset, returning coefficient-bound violations as warnings.
pub fn read_csv_with_warnings<R: Read>(reader: R) -> Result<(Dataset, Vec<Warning>)> {
    let mut lines = BufReader::new(reader).lines();
    let mut next_line = || -> Result<Option<String>> {
        match lines.next() {
            None => Ok(None),
            Some(line) => {
                let mut line = line?;
                if line.ends_with('\r') {
                    line.pop();
                }
                Ok(Some(line))
            }
        }
    };
    match next_line()? {
        Some(v) if v == CSV_VERSION_LINE => {}
        Some(v) if v.starts_with("# murmurforge-") => return Err(Error::Version(v)),
        _ => {
            return Err(parse_err(
                0,
                "*",
                format!("missing {CSV_VERSION_LINE:?} line"),
            ))
        }
    }
    let columns = header_columns();
    let header = next_line()?.ok_or_else(|| parse_err(0, "*", "missing header"))?;
    for (i, (got, want)) in header.split(',').zip(columns.iter()).enumerate() {
        if got != want {
            return Err(parse_err(
                0,
                want.as_str(),
                format!("column {i} is {got:?}"),
            ));
        }
    }
    if header.split(',').count() != columns.len() {
        return Err(parse_err(
            0,
            "*",
            format!(
                "expected {} columns, found {}",
                columns.len(),
                header.split(',').count()
            ),
        ));
    }

    let mut records = Vec::new();
    let mut row = 0;
    while let Some(line) = next_line()? {
        row += 1;
        if line.is_empty() {
            // Tolerate a single trailing blank line only.
            if next_line()?.is_some() {
                return Err(parse_err(row, "*", "blank line"));
            }
            break;
        }
        records.push(parse_row(&line, row, &columns)?);
    }
    into_dataset(records)
}

fn into_dataset(records: Vec<LFunctionRecord>) -> Result<(Dataset, Vec<Warning>)> {
    let (ds, warnings) = Dataset::from_external(records)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok((ds, warnings))
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    read_csv_with_warnings(reader).map(|(ds, _)| ds)
}

pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{CSV_VERSION_LINE}")?;
    writeln!(w, "{}", header_columns().join(","))?;
    let mut line = String::new();
    for r in ds.iter() {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(
            line,
            "{},{},{},{},{},{}",
            r.label, r.degree, r.weight, r.conductor, r.order, r.origins
        );
        for a in &r.ap {
            let _ = write!(line, ",{a}");
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonOut<'a> {
    format_version: u32,
    records: Vec<&'a LFunctionRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonIn {
    format_version: u32,
    records: Vec<LFunctionRecord>,
}

pub fn read_json_with_warnings<R: Read>(reader: R) -> Result<(Dataset, Vec<Warning>)> {
    let doc: JsonIn = serde_json::from_reader(BufReader::new(reader))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Version(doc.format_version.to_string()));
    }
    into_dataset(doc.records)
}

pub fn read_json<R: Read>(reader: R) -> Result<Dataset> {
    read_json_with_warnings(reader).map(|(ds, _)| ds)
}

pub fn write_json<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let doc = JsonOut {
        format_version: FORMAT_VERSION,
        records: ds.iter().collect(),
    };
    serde_json::to_writer(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// From the extension, ignoring a trailing `.gz`. Defaults to CSV.
    pub fn from_path(path: &Path) -> Format {
        let name = path.to_string_lossy();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".json") {
            Format::Json
        } else {
            Format::Csv
        }
    }
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub fn read_path_with_warnings(path: &Path) -> Result<(Dataset, Vec<Warning>)> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if is_gz(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    match Format::from_path(path) {
        Format::Csv => read_csv_with_warnings(reader),
        Format::Json => read_json_with_warnings(reader),
    }
}

pub fn read_path(path: &Path) -> Result<Dataset> {
    read_path_with_warnings(path).map(|(ds, _)| ds)
}

/// Serializes `ds` in the format implied by `path` into `writer`, gzipping
/// when the path ends in `.gz`.
pub fn write_for_path<W: Write>(ds: &Dataset, path: &Path, writer: W) -> Result<()> {
    let format = Format::from_path(path);
    if is_gz(path) {
        let mut enc = GzEncoder::new(writer, Compression::default());
        match format {
            Format::Csv => write_csv(ds, &mut enc)?,
            Format::Json => write_json(ds, &mut enc)?,
        }
        enc.finish()?;
        Ok(())
    } else {
        match format {
            Format::Csv => write_csv(ds, writer),
            Format::Json => write_json(ds, writer),
        }
    }
}

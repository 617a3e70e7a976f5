//! CSV tables with a leading `#schema=v1` line.

use std::fmt::Display;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{IoContext, Result, RunnerError};

pub const SCHEMA_LINE: &str = "#schema=v1";

pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    /// Creates (or truncates) `path` and writes the schema line and header.
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut file = BufWriter::new(File::create(path).at(path)?);
        writeln!(file, "{SCHEMA_LINE}").at(path)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(header)?;
        Ok(Table { path: path.to_path_buf(), writer })
    }

    /// Opens an existing table for appending rows.
    pub fn append(path: &Path) -> Result<Self> {
        read_header(path)?;
        let file = OpenOptions::new().append(true).open(path).at(path)?;
        let writer = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
        Ok(Table { path: path.to_path_buf(), writer })
    }

    /// Opens for appending when `append` is set and the file exists,
    /// otherwise creates it.
    pub fn open(path: &Path, header: &[&str], append: bool) -> Result<Self> {
        if append && path.exists() {
            Self::append(path)
        } else {
            Self::create(path, header)
        }
    }

    pub fn row(&mut self, fields: &[&dyn Display]) -> Result<()> {
        self.writer.write_record(fields.iter().map(|f| f.to_string()))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().at(&self.path)
    }

    pub fn finish(mut self) -> Result<()> {
        self.flush()
    }
}

/// Checks the schema line and returns the column names.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut lines = BufReader::new(File::open(path).at(path)?).lines();
    let first = lines.next().transpose().at(path)?.unwrap_or_default();
    if first.trim_end() != SCHEMA_LINE {
        return Err(RunnerError::artifact(path, format!("expected {SCHEMA_LINE:?}, found {first:?}")));
    }
    let header = lines.next().transpose().at(path)?.unwrap_or_default();
    Ok(header.split(',').map(str::to_string).collect())
}

/// Rows of a table as strings, after checking that its columns are `expected`.
pub fn read_rows(path: &Path, expected: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let header = read_header(path)?;
    if header != expected {
        return Err(RunnerError::artifact(path, format!("columns {header:?}, expected {expected:?}")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)?;
    Ok(reader.records().collect::<std::result::Result<_, _>>()?)
}

pub fn parse<T: std::str::FromStr>(path: &Path, record: &csv::StringRecord, col: usize) -> Result<T> {
    let text = record.get(col).unwrap_or("");
    text.parse().map_err(|_| RunnerError::artifact(path, format!("cannot parse {text:?} in column {col}")))
}

/// Drops every row whose integer column `col` is `>= limit`. Used when a
/// run resumes from a checkpoint taken at generation `limit`.
pub fn truncate_from(path: &Path, expected: &[&str], col: usize, limit: usize) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let rows = read_rows(path, expected)?;
    let mut table = Table::create(path, expected)?;
    for r in rows {
        let g: usize = parse(path, &r, col)?;
        if g < limit {
            table.writer.write_record(&r)?;
        }
    }
    table.finish()
}

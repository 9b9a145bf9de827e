//! Header-driven CSV reading with row-numbered errors, and LF-terminated
//! CSV writing shared by every artifact.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

pub fn open_csv(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

struct Header {
    name: String,
    cols: HashMap<String, usize>,
}

pub struct CsvTable<R: Read> {
    reader: csv::Reader<R>,
    header: Arc<Header>,
}

impl<R: Read> CsvTable<R> {
    /// Opens a headed CSV and checks that every `required` column exists.
    pub fn new(reader: R, name: &str, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(reader);
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(name, 1, e.to_string()))?
            .clone();
        let cols: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        for c in required {
            if !cols.contains_key(*c) {
                return Err(Error::Schema {
                    file: name.to_string(),
                    column: c.to_string(),
                });
            }
        }
        Ok(CsvTable {
            reader,
            header: Arc::new(Header {
                name: name.to_string(),
                cols,
            }),
        })
    }

    pub fn has_column(&self, col: &str) -> bool {
        self.header.cols.contains_key(col)
    }

    pub fn rows(self) -> impl Iterator<Item = Result<CsvRow>> {
        let header = self.header;
        self.reader.into_records().map(move |rec| {
            let record = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::parse(header.name.clone(), line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            Ok(CsvRow {
                record,
                line,
                header: header.clone(),
            })
        })
    }
}

pub struct CsvRow {
    record: csv::StringRecord,
    line: usize,
    header: Arc<Header>,
}

impl CsvRow {
    pub fn line(&self) -> usize {
        self.line
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.header.name.clone(), self.line, message)
    }

    /// Value of `col`, or `None` when the column is absent or the cell blank.
    pub fn optional(&self, col: &str) -> Option<&str> {
        let i = *self.header.cols.get(col)?;
        self.record.get(i).filter(|s| !s.is_empty())
    }

    pub fn required(&self, col: &str) -> Result<&str> {
        self.optional(col)
            .ok_or_else(|| self.error(format!("empty `{col}`")))
    }

    pub fn number(&self, col: &str) -> Result<f64> {
        let raw = self.required(col)?;
        parse_number(raw).ok_or_else(|| self.error(format!("`{col}` value `{raw}` is not a number")))
    }

    pub fn opt_number(&self, col: &str) -> Result<Option<f64>> {
        match self.optional(col) {
            None => Ok(None),
            Some(raw) if raw.eq_ignore_ascii_case("na") => Ok(None),
            Some(raw) => parse_number(raw)
                .map(Some)
                .ok_or_else(|| self.error(format!("`{col}` value `{raw}` is not a number"))),
        }
    }
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// LF-terminated CSV writer.
pub struct CsvOut<W: Write> {
    inner: csv::Writer<W>,
    name: String,
}

impl CsvOut<File> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(CsvOut::new(file, &path.display().to_string()))
    }
}

impl<W: Write> CsvOut<W> {
    pub fn new(writer: W, name: &str) -> Self {
        CsvOut {
            inner: csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(writer),
            name: name.to_string(),
        }
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| Error::Data(format!("{}: {e}", self.name)))
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner
            .flush()
            .map_err(|e| Error::io(self.name.clone(), e))?;
        self.inner
            .into_inner()
            .map_err(|e| Error::Data(format!("{}: {e}", self.name)))
    }
}

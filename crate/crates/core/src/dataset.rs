//! Tabular quantity records keyed by (machine, run, time) and the canonical CSV layout.
//!
//! The CSV header is `machine_id,run_id,t,<quantity names>`; floats are written
//! with 17 significant digits so a write/read cycle is lossless.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KEY_COLUMNS: [&str; 3] = ["machine_id", "run_id", "t"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordKey {
    pub machine_id: String,
    pub run_id: String,
    pub t: f64,
}

impl RecordKey {
    pub fn new(machine_id: &str, run_id: &str, t: f64) -> Self {
        Self {
            machine_id: machine_id.to_string(),
            run_id: run_id.to_string(),
            t,
        }
    }

    /// Key equality with bitwise comparison of `t`.
    pub fn same_as(&self, other: &RecordKey) -> bool {
        self.machine_id == other.machine_id
            && self.run_id == other.run_id
            && self.t.to_bits() == other.t.to_bits()
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/t={}", self.machine_id, self.run_id, self.t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub key: RecordKey,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    names: Vec<String>,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names,
            records: Vec::new(),
        }
    }

    pub fn from_records(names: Vec<String>, records: Vec<Record>) -> Result<Self> {
        let mut ds = Self::new(names);
        for r in records {
            ds.push(r)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, record: Record) -> Result<()> {
        if record.values.len() != self.names.len() {
            return Err(Error::InvalidInput(format!(
                "record {} has {} values, dataset has {} columns",
                record.key,
                record.values.len(),
                self.names.len()
            )));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.records.iter().map(|r| r.values[idx]).collect())
    }

    pub fn find(&self, key: &RecordKey) -> Option<&Record> {
        self.records.iter().find(|r| r.key.same_as(key))
    }

    /// Reorders columns to `names`, dropping any others.
    pub fn project(&self, names: &[String]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n).ok_or_else(|| {
                    Error::SchemaMismatch(format!("dataset has no column `{n}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let records = self
            .records
            .iter()
            .map(|r| Record {
                key: r.key.clone(),
                values: idx.iter().map(|&i| r.values[i]).collect(),
            })
            .collect();
        Ok(Dataset {
            names: names.to_vec(),
            records,
        })
    }

    pub fn filter<F: Fn(&Record) -> bool>(&self, keep: F) -> Dataset {
        Dataset {
            names: self.names.clone(),
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    pub fn machine_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for r in &self.records {
            if !ids.contains(&r.key.machine_id) {
                ids.push(r.key.machine_id.clone());
            }
        }
        ids
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> = KEY_COLUMNS
            .iter()
            .copied()
            .chain(self.names.iter().map(String::as_str))
            .collect();
        w.write_record(&header).map_err(csv_write_err)?;
        for r in &self.records {
            let mut row = vec![
                r.key.machine_id.clone(),
                r.key.run_id.clone(),
                format_float(r.key.t),
            ];
            row.extend(r.values.iter().map(|&v| format_float(v)));
            w.write_record(&row).map_err(csv_write_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(reader: R, source_name: &str) -> Result<Dataset> {
        let parse_err = |row: usize, column: &str, message: String| Error::Parse {
            source_name: source_name.to_string(),
            row,
            column: column.to_string(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| parse_err(1, "-", e.to_string()))?
            .clone();
        if header.len() < KEY_COLUMNS.len() + 1
            || header.iter().take(3).ne(KEY_COLUMNS.iter().copied())
        {
            return Err(parse_err(
                1,
                "-",
                format!(
                    "header must start with `machine_id,run_id,t` followed by quantity columns, got `{}`",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
        let mut ds = Dataset::new(names.clone());
        for (i, row) in rdr.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| parse_err(line, "-", e.to_string()))?;
            if row.len() != header.len() {
                return Err(parse_err(
                    line,
                    "-",
                    format!("expected {} fields, found {}", header.len(), row.len()),
                ));
            }
            let num = |col: usize| -> Result<f64> {
                let field = row[col].trim();
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(line, &header[col], format!("`{field}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(line, &header[col], format!("non-finite value `{field}`")));
                }
                Ok(v)
            };
            let key = RecordKey::new(row[0].trim(), row[1].trim(), num(2)?);
            let values = (3..row.len()).map(num).collect::<Result<Vec<_>>>()?;
            ds.records.push(Record { key, values });
        }
        if ds.is_empty() {
            return Err(parse_err(1, "-", "dataset contains no data rows".into()));
        }
        Ok(ds)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), &path.display().to_string())
    }
}

/// Decimal rendering with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_write_err(e: csv::Error) -> Error {
    Error::Format(format!("csv write: {e}"))
}

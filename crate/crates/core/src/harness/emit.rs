//! Result tables and their CSV / JSON-lines encodings.
//!
//! Both formats start with a header that records the config hash, the table
//! name and the column types, so files can be parsed back exactly.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Bool,
    Int,
    Float,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_nan() {
            Cell::Null
        } else {
            Cell::Float(v)
        }
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

impl Cell {
    fn kind_matches(&self, kind: Kind) -> bool {
        matches!(
            (self, kind),
            (Cell::Null, _)
                | (Cell::Bool(_), Kind::Bool)
                | (Cell::Int(_), Kind::Int)
                | (Cell::Float(_), Kind::Float)
                | (Cell::Text(_), Kind::Text)
        )
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Cell::Bool(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(v) => Some(v),
            _ => None,
        }
    }
}

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn format_float(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.16e}")
}

fn parse_float(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, Kind)>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

#[derive(Serialize, Deserialize)]
struct Header {
    config_hash: String,
    table: String,
    columns: Vec<String>,
    types: Vec<Kind>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, Kind)]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|(c, k)| (c.to_string(), *k)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match table {}",
            self.name
        );
        for (cell, (name, kind)) in row.iter().zip(&self.columns) {
            assert!(
                cell.kind_matches(*kind),
                "column {name} expects {kind:?}, got {cell:?}"
            );
        }
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(c, _)| c == name)
    }

    pub fn get(&self, row: usize, name: &str) -> &Cell {
        &self.rows[row][self
            .column(name)
            .unwrap_or_else(|| panic!("no column {name}"))]
    }

    fn header(&self, config_hash: &str) -> Header {
        Header {
            config_hash: config_hash.to_string(),
            table: self.name.clone(),
            columns: self.columns.iter().map(|(c, _)| c.clone()).collect(),
            types: self.columns.iter().map(|(_, k)| *k).collect(),
        }
    }

    pub fn write<W: Write>(
        &self,
        format: Format,
        config_hash: &str,
        out: W,
    ) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(config_hash, out),
            Format::Jsonl => self.write_jsonl(config_hash, out),
        }
    }

    fn write_csv<W: Write>(&self, config_hash: &str, mut out: W) -> std::io::Result<()> {
        let types: Vec<String> = self
            .columns
            .iter()
            .map(|(_, k)| {
                serde_json::to_value(k)
                    .expect("kind")
                    .as_str()
                    .expect("string")
                    .to_string()
            })
            .collect();
        writeln!(
            out,
            "# config_hash={config_hash} table={} types={}",
            self.name,
            types.join(",")
        )?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(self.columns.iter().map(|(c, _)| c.as_str()))?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|cell| match cell {
                Cell::Null => String::new(),
                Cell::Bool(v) => v.to_string(),
                Cell::Int(v) => v.to_string(),
                Cell::Float(v) => format_float(*v),
                Cell::Text(v) => v.clone(),
            }))?;
        }
        writer.flush()
    }

    fn write_jsonl<W: Write>(&self, config_hash: &str, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", serde_json::to_string(&self.header(config_hash))?)?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            line.push('{');
            for (i, (cell, (name, _))) in row.iter().zip(&self.columns).enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&serde_json::to_string(name)?);
                line.push(':');
                match cell {
                    Cell::Null => line.push_str("null"),
                    Cell::Bool(v) => write!(line, "{v}").expect("string write"),
                    Cell::Int(v) => write!(line, "{v}").expect("string write"),
                    // JSON has no infinities; keep them as strings.
                    Cell::Float(v) if v.is_infinite() => {
                        line.push_str(&serde_json::to_string(&format_float(*v))?)
                    }
                    Cell::Float(v) => line.push_str(&format_float(*v)),
                    Cell::Text(v) => line.push_str(&serde_json::to_string(v)?),
                }
            }
            line.push('}');
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Write to `dir/<name>.<ext>` and return the path.
    pub fn save(
        &self,
        dir: &Path,
        format: Format,
        config_hash: &str,
    ) -> Result<PathBuf, EmitError> {
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        let io = |source| EmitError::Io {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|source| EmitError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let file = File::create(&path).map_err(io)?;
        let mut out = BufWriter::new(file);
        self.write(format, config_hash, &mut out).map_err(io)?;
        out.flush().map_err(io)?;
        Ok(path)
    }

    /// Parse a file written by [`Table::save`]; returns the table and config hash.
    pub fn load(path: &Path) -> Result<(Table, String), EmitError> {
        let file = File::open(path).map_err(|source| EmitError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse = |reason: String| EmitError::Parse {
            path: path.to_path_buf(),
            reason,
        };
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader
            .read_line(&mut first)
            .map_err(|source| EmitError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        if let Some(rest) = first.trim_end().strip_prefix("# ") {
            Self::read_csv(rest, reader).map_err(parse)
        } else {
            Self::read_jsonl(&first, reader).map_err(parse)
        }
    }

    fn read_csv<R: BufRead>(header: &str, reader: R) -> Result<(Table, String), String> {
        let mut hash = None;
        let mut name = None;
        let mut types = None;
        for part in header.split(' ') {
            match part.split_once('=') {
                Some(("config_hash", v)) => hash = Some(v.to_string()),
                Some(("table", v)) => name = Some(v.to_string()),
                Some(("types", v)) => {
                    let kinds: Result<Vec<Kind>, _> = if v.is_empty() {
                        Ok(Vec::new())
                    } else {
                        v.split(',')
                            .map(|k| serde_json::from_value(Value::String(k.into())))
                            .collect()
                    };
                    types = Some(kinds.map_err(|e| e.to_string())?);
                }
                _ => return Err(format!("unexpected header field `{part}`")),
            }
        }
        let (Some(hash), Some(name), Some(types)) = (hash, name, types) else {
            return Err("incomplete header".into());
        };
        let mut csv = csv::Reader::from_reader(reader);
        let names: Vec<String> = csv
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(String::from)
            .collect();
        let names = if types.is_empty() && names.len() == 1 && names[0].is_empty() {
            Vec::new()
        } else {
            names
        };
        if names.len() != types.len() {
            return Err("column count does not match the type list".into());
        }
        let mut table = Table {
            name,
            columns: names.into_iter().zip(types).collect(),
            rows: Vec::new(),
        };
        for record in csv.records() {
            let record = record.map_err(|e| e.to_string())?;
            let row = record
                .iter()
                .zip(&table.columns)
                .map(|(field, (col, kind))| {
                    if field.is_empty() && *kind != Kind::Text {
                        return Ok(Cell::Null);
                    }
                    let bad = || format!("column {col}: cannot parse `{field}`");
                    Ok(match kind {
                        Kind::Bool => Cell::Bool(field.parse().map_err(|_| bad())?),
                        Kind::Int => Cell::Int(field.parse().map_err(|_| bad())?),
                        Kind::Float => Cell::Float(parse_float(field).ok_or_else(bad)?),
                        Kind::Text => Cell::Text(field.to_string()),
                    })
                })
                .collect::<Result<Vec<_>, String>>()?;
            table.rows.push(row);
        }
        Ok((table, hash))
    }

    fn read_jsonl<R: BufRead>(first: &str, reader: R) -> Result<(Table, String), String> {
        let header: Header = serde_json::from_str(first).map_err(|e| e.to_string())?;
        let mut table = Table {
            name: header.table,
            columns: header.columns.into_iter().zip(header.types).collect(),
            rows: Vec::new(),
        };
        for line in reader.lines() {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            let object: Map<String, Value> =
                serde_json::from_str(&line).map_err(|e| e.to_string())?;
            let row = table
                .columns
                .iter()
                .map(|(col, kind)| {
                    let value = object
                        .get(col)
                        .ok_or_else(|| format!("missing column {col}"))?;
                    let bad = || format!("column {col}: unexpected value {value}");
                    Ok(match (kind, value) {
                        (_, Value::Null) => Cell::Null,
                        (Kind::Bool, Value::Bool(v)) => Cell::Bool(*v),
                        (Kind::Int, Value::Number(v)) => Cell::Int(v.as_i64().ok_or_else(bad)?),
                        (Kind::Float, Value::Number(v)) => Cell::Float(v.as_f64().ok_or_else(bad)?),
                        (Kind::Float, Value::String(v)) => {
                            Cell::Float(parse_float(v).ok_or_else(bad)?)
                        }
                        (Kind::Text, Value::String(v)) => Cell::Text(v.clone()),
                        _ => return Err(bad()),
                    })
                })
                .collect::<Result<Vec<_>, String>>()?;
            table.rows.push(row);
        }
        Ok((table, header.config_hash))
    }
}

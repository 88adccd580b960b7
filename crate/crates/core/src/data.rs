//! Column-oriented time-series datasets and their CSV form.
//!
//! Rows are time points in file order. An optional time column is kept as
//! raw strings; every other cell must parse as a finite number. Export
//! writes 17 significant digits so a round trip is lossless.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub names: Vec<String>,
    /// One vector per column, each of length `n`.
    pub columns: Vec<Vec<f64>>,
    pub time: Option<Vec<String>>,
    pub time_name: Option<String>,
}

/// CSV layout options.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvSchema {
    pub has_header: bool,
    /// Zero-based index of a non-numeric time-stamp column, if any.
    pub time_column: Option<usize>,
}

impl TimeSeriesDataset {
    /// Build from columns; names default to `x0, x1, ...`.
    pub fn new(columns: Vec<Vec<f64>>, names: Option<Vec<String>>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if let Some(k) = columns.iter().position(|c| c.len() != n) {
            return Err(Error::Dimension(format!("column {k} has {} rows, expected {n}", columns[k].len())));
        }
        let names = match names {
            Some(names) if names.len() != columns.len() => {
                return Err(Error::Dimension(format!("{} names for {} columns", names.len(), columns.len())));
            }
            Some(names) => names,
            None => (0..columns.len()).map(|j| format!("x{j}")).collect(),
        };
        for (j, c) in columns.iter().enumerate() {
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::Missing { row: i + 1, col: j + 1 });
            }
        }
        Ok(Self { names, columns, time: None, time_name: None })
    }

    /// Dataset whose columns are those of `x`.
    pub fn from_matrix(x: &DMatrix<f64>, names: Option<Vec<String>>) -> Result<Self> {
        let cols = (0..x.ncols()).map(|j| x.column(j).iter().copied().collect()).collect();
        Self::new(cols, names)
    }

    pub fn with_time(mut self, name: &str, stamps: Vec<String>) -> Result<Self> {
        if stamps.len() != self.n() {
            return Err(Error::Dimension(format!("{} time stamps for {} rows", stamps.len(), self.n())));
        }
        self.time = Some(stamps);
        self.time_name = Some(name.to_string());
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|c| c == name)
    }

    /// `n x k` matrix of the requested columns.
    pub fn matrix(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), cols.len(), |i, k| self.columns[cols[k]][i])
    }

    /// Split into (all columns except `response`, response).
    pub fn split_response(&self, response: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
        if response >= self.ncols() {
            return Err(Error::Dimension(format!("response column {response} out of range")));
        }
        let cols: Vec<usize> = (0..self.ncols()).filter(|&j| j != response).collect();
        Ok((self.matrix(&cols), self.columns[response].clone()))
    }

    /// Write with a header row; the time column (if any) comes first.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = Vec::new();
        if let Some(t) = &self.time_name {
            header.push(t);
        }
        header.extend(self.names.iter().map(String::as_str));
        wr.write_record(&header).map_err(csv_io)?;
        for i in 0..self.n() {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            if let Some(t) = &self.time {
                row.push(t[i].clone());
            }
            row.extend(self.columns.iter().map(|c| fmt_f64(c[i])));
            wr.write_record(&row).map_err(csv_io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// 17 significant digits, enough to reproduce any `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Parse a dataset from any reader. Row and column numbers in errors are
/// 1-based data positions (the header is not counted).
pub fn read_csv<R: Read>(r: R, schema: &CsvSchema) -> Result<TimeSeriesDataset> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let header: Option<Vec<String>> = if schema.has_header {
        Some(rd.headers().map_err(csv_io)?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut width = header.as_ref().map(Vec::len);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut time = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Csv { row, col: 0, msg: e.to_string() })?;
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Csv { row, col: rec.len().min(w) + 1, msg: format!("expected {w} fields, found {}", rec.len()) });
        }
        if let Some(t) = schema.time_column {
            if t >= w {
                return Err(Error::Config(format!("time column {t} out of range for {w} fields")));
            }
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); w - usize::from(schema.time_column.is_some())];
        }
        let mut k = 0;
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == schema.time_column {
                time.push(cell.to_string());
                continue;
            }
            let col = j + 1;
            if cell.is_empty() {
                return Err(Error::Missing { row, col });
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Csv { row, col, msg: format!("non-numeric cell '{cell}'") })?;
            if !v.is_finite() {
                return Err(Error::Missing { row, col });
            }
            columns[k].push(v);
            k += 1;
        }
    }
    let width = width.unwrap_or(0);
    if let Some(t) = schema.time_column {
        if t >= width {
            return Err(Error::Config(format!("time column {t} out of range for {width} fields")));
        }
    }
    let (names, time_name): (Vec<String>, Option<String>) = match header {
        Some(h) => {
            let time_name = schema.time_column.map(|t| h[t].clone());
            let names = h.into_iter().enumerate().filter(|(j, _)| Some(*j) != schema.time_column).map(|(_, s)| s).collect();
            (names, time_name)
        }
        None => {
            let data_cols = width - usize::from(schema.time_column.is_some());
            ((0..data_cols).map(|j| format!("x{j}")).collect(), schema.time_column.map(|_| "time".to_string()))
        }
    };
    if columns.is_empty() {
        columns = vec![Vec::new(); names.len()];
    }
    Ok(TimeSeriesDataset {
        names,
        columns,
        time: schema.time_column.map(|_| time),
        time_name,
    })
}

/// Read a CSV file into a dataset.
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<TimeSeriesDataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(f), schema)
}

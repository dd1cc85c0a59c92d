use std::collections::HashSet;
use std::path::Path;

use super::HarnessError;

/// Rectangular table of real numbers with a header row.
///
/// Values are written with 17 significant digits. Non-finite values are
/// rejected except in columns explicitly marked as allowing infinity, where
/// they are written as `inf`/`-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
    integer_columns: HashSet<usize>,
    infinite_columns: HashSet<usize>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
            integer_columns: HashSet::new(),
            infinite_columns: HashSet::new(),
        }
    }

    /// Columns written without a fractional part.
    pub fn with_integer_columns(mut self, names: &[&str]) -> Self {
        for name in names {
            if let Some(i) = self.column_index(name) {
                self.integer_columns.insert(i);
            }
        }
        self
    }

    /// Columns that may hold `±∞`.
    pub fn allow_infinite(mut self, names: &[&str]) -> Self {
        for name in names {
            if let Some(i) = self.column_index(name) {
                self.infinite_columns.insert(i);
            }
        }
        self
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<(), HarnessError> {
        if row.len() != self.header.len() {
            return Err(HarnessError::Table(format!(
                "row has {} values, header has {} columns",
                row.len(),
                self.header.len()
            )));
        }
        for (i, v) in row.iter().enumerate() {
            let allowed = v.is_finite() || (v.is_infinite() && self.infinite_columns.contains(&i));
            if !allowed {
                return Err(HarnessError::Table(format!(
                    "non-finite value {v} in column {}",
                    self.header[i]
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    fn format_value(&self, col: usize, v: f64) -> String {
        if v.is_infinite() {
            if v > 0.0 { "inf" } else { "-inf" }.to_string()
        } else if self.integer_columns.contains(&col) {
            format!("{v:.0}")
        } else {
            format!("{v:.16e}")
        }
    }

    pub fn write<W: std::io::Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .enumerate()
                    .map(|(i, &v)| self.format_value(i, v)),
            )?;
        }
        w.flush().map_err(|e| HarnessError::Io {
            path: "<csv>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn write_path(&self, path: &Path) -> Result<(), HarnessError> {
        let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        self.write(std::io::BufWriter::new(file))
    }

    pub fn read_path(path: &Path) -> Result<Self, HarnessError> {
        let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
        Self::read(file)
    }

    pub fn read<R: std::io::Read>(input: R) -> Result<Self, HarnessError> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut table = CsvTable::new(&header);
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        HarnessError::Table(format!("cannot parse {cell:?} as a number"))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            for (i, v) in row.iter().enumerate() {
                if v.is_infinite() {
                    table.infinite_columns.insert(i);
                }
            }
            table.push_row(row)?;
        }
        Ok(table)
    }
}

//! Delimited text tables for sweep output.
//!
//! Floats are always written as `{:.16e}` (17 significant digits), so a
//! value read back parses to the same `f64`.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Appends a row; panics if its width differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        assert_eq!(self.columns, other.columns, "tables have different headers");
        self.rows.extend(other.rows);
    }

    pub fn render(&self, sep: char) -> String {
        let mut out = String::new();
        let sep_s = sep.to_string();
        out.push_str(&self.columns.join(&sep_s));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "{}", cells.join(&sep_s)).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn renders_header_and_rows() {
        let mut t = Table::new(["n", "p", "label"]);
        t.push(vec![3usize.into(), 0.25.into(), "odd".into()]);
        assert_eq!(t.render(','), "n,p,label\n3,2.5000000000000000e-1,odd\n");
    }

    #[test]
    #[should_panic]
    fn width_mismatch_panics() {
        Table::new(["a"]).push(vec![1usize.into(), 2usize.into()]);
    }
}

use std::fmt::Write;

use catsim::table::Table;

use crate::config::{Echo, Format};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header block, free-form notes and one or more named tables.
pub struct Report {
    pub experiment: &'static str,
    pub seed: u64,
    pub echo: Vec<(&'static str, Echo)>,
    pub notes: Vec<String>,
    pub tables: Vec<(&'static str, Table)>,
}

impl Report {
    pub fn new(experiment: &'static str, seed: u64, echo: Vec<(&'static str, Echo)>) -> Self {
        Report { experiment, seed, echo, notes: Vec::new(), tables: Vec::new() }
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        writeln!(out, "# catsim {VERSION}").unwrap();
        writeln!(out, "# experiment = {}", self.experiment).unwrap();
        writeln!(out, "# seed = {}", self.seed).unwrap();
        for (k, v) in &self.echo {
            writeln!(out, "# {k} = {v}").unwrap();
        }
        for n in &self.notes {
            writeln!(out, "# {n}").unwrap();
        }
        for (i, (name, table)) in self.tables.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            writeln!(out, "# table = {name}").unwrap();
            match format {
                Format::Csv => out.push_str(&table.render(',')),
                Format::Records => {
                    for row in table.rows() {
                        let fields: Vec<String> = table.columns().iter().zip(row).map(|(c, v)| format!("{c}={}", v.render())).collect();
                        writeln!(out, "{}", fields.join(" ")).unwrap();
                    }
                }
            }
        }
        out
    }
}

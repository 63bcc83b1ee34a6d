//! Deterministic CSV: `#`-prefixed `key=value` header lines (including the
//! resolved config between `config_begin` and `config_end`), one header row,
//! data rows, and optional `#` footer lines. Floats use 17 significant
//! digits.

use std::fmt::Write;

use super::config::ExperimentConfig;

pub const VERSION: &str = concat!("propchaos ", env!("CARGO_PKG_VERSION"));

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvDoc {
    header: Vec<(String, String)>,
    config: Option<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<(String, String)>,
}

impl CsvDoc {
    pub fn new(subcommand: &str) -> Self {
        let mut d = Self::default();
        d.meta("version", VERSION);
        d.meta("subcommand", subcommand);
        d
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.header.push((key.to_string(), value.to_string()));
        self
    }

    pub fn config(&mut self, cfg: &ExperimentConfig) -> &mut Self {
        self.config = Some(cfg.to_toml());
        self
    }

    pub fn columns(&mut self, cols: &[&str]) -> &mut Self {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
        self
    }

    pub fn footer(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.footer.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            writeln!(s, "# {k}={v}").unwrap();
        }
        if let Some(c) = &self.config {
            s.push_str("# config_begin\n");
            for line in c.lines() {
                if line.is_empty() {
                    s.push_str("#\n");
                } else {
                    writeln!(s, "# {line}").unwrap();
                }
            }
            s.push_str("# config_end\n");
        }
        writeln!(s, "{}", join_cells(&self.columns)).unwrap();
        for r in &self.rows {
            writeln!(s, "{}", join_cells(r)).unwrap();
        }
        for (k, v) in &self.footer {
            writeln!(s, "# {k}={v}").unwrap();
        }
        s
    }
}

/// Quotes cells holding commas or quotes (observable names can).
fn join_cells(cells: &[String]) -> String {
    let quoted: Vec<String> = cells
        .iter()
        .map(|c| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect();
    quoted.join(",")
}

/// The config echoed into a rendered CSV, as TOML text.
pub fn extract_config(csv: &str) -> Option<String> {
    let mut inside = false;
    let mut out = String::new();
    for line in csv.lines() {
        match line {
            "# config_begin" => inside = true,
            "# config_end" => return Some(out),
            _ if inside => {
                out.push_str(line.strip_prefix("# ").or_else(|| line.strip_prefix('#')).unwrap_or(line));
                out.push('\n');
            }
            _ => {}
        }
    }
    None
}

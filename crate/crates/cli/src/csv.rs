//! Minimal CSV emission: one `#` metadata line, a header row, and numbers
//! with 17 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub struct CsvWriter {
    sink: Box<dyn Write>,
    label: String,
    columns: usize,
}

/// A cell: a number, free text, or nothing.
pub enum Cell<'a> {
    Num(f64),
    Int(i64),
    Text(&'a str),
    Empty,
}

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // NaN and ±inf only appear for undefined quantities
        "nan".to_string()
    }
}

impl CsvWriter {
    /// Opens `path`, or standard output when `None`.
    pub fn create(path: Option<&Path>, metadata: &str, header: &[&str]) -> CliResult<Self> {
        let (sink, label): (Box<dyn Write>, String) = match path {
            Some(p) => {
                let f = File::create(p).map_err(|source| io_error(p, source))?;
                (Box::new(BufWriter::new(f)), p.display().to_string())
            }
            None => (Box::new(BufWriter::new(io::stdout().lock())), "<stdout>".to_string()),
        };
        let mut w = CsvWriter { sink, label, columns: header.len() };
        w.line(&format!("# {metadata}"))?;
        w.line(&header.join(","))?;
        Ok(w)
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) -> CliResult<()> {
        debug_assert_eq!(cells.len(), self.columns);
        let text: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Num(v) => num(*v),
                Cell::Int(i) => i.to_string(),
                Cell::Text(t) => t.replace([',', '\n'], ";"),
                Cell::Empty => String::new(),
            })
            .collect();
        self.line(&text.join(","))
    }

    fn line(&mut self, s: &str) -> CliResult<()> {
        writeln!(self.sink, "{s}").map_err(|source| CliError::Io { path: self.label.clone(), source })
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.sink.flush().map_err(|source| CliError::Io { path: self.label.clone(), source })
    }
}

pub fn io_error(path: &Path, source: io::Error) -> CliError {
    CliError::Io { path: PathBuf::from(path).display().to_string(), source }
}

//! CSV emission with schema and provenance headers.
//!
//! Every file starts with `# schema=<name>` followed by
//! `# provenance: tool=… config_sha256=… seed=…`. Floats are written with
//! the shortest representation that round-trips, so identical values give
//! identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::{Error, Result};

pub const TOOL: &str = concat!("hom-cascade/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn for_config(config: &RunConfig) -> Self {
        Self {
            config_hash: config.hash(),
            seed: config.trajectories.seed,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "# provenance: tool={TOOL} config_sha256={} seed={}",
            self.config_hash, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as u64)
    }
}

fn fmt_cell(out: &mut String, c: &Cell) {
    match c {
        Cell::Float(v) if v.is_infinite() => out.push_str(if *v > 0.0 { "inf" } else { "-inf" }),
        Cell::Float(v) => write!(out, "{v}").unwrap(),
        Cell::Int(v) => write!(out, "{v}").unwrap(),
        Cell::Text(s) => out.push_str(s),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        Self {
            schema: schema.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.schema);
        self.rows.push(row);
    }

    pub fn render(&self, provenance: &Provenance) -> String {
        let mut s = String::new();
        writeln!(s, "# schema={}", self.schema).unwrap();
        writeln!(s, "{}", provenance.line()).unwrap();
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                fmt_cell(&mut s, c);
            }
            s.push('\n');
        }
        s
    }
}

/// Inserts the provenance line after the `# schema=` line of a CSV
/// rendered elsewhere.
pub fn with_provenance(csv: &str, provenance: &Provenance) -> String {
    let (first, rest) = csv.split_once('\n').unwrap_or((csv, ""));
    format!("{first}\n{}\n{rest}", provenance.line())
}

/// Collects written files under one directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path, provenance: Provenance) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            provenance,
            written: Vec::new(),
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn write_table(&mut self, name: &str, table: &CsvTable) -> Result<PathBuf> {
        let text = table.render(&self.provenance);
        self.write_text(name, &text)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config_hash: "ab".into(),
            seed: 7,
        }
    }

    #[test]
    fn header_order_and_formatting() {
        let mut t = CsvTable::new("demo/1", &["a", "b", "c"]);
        t.push(vec![0.1.into(), 3u64.into(), "x".into()]);
        t.push(vec![f64::INFINITY.into(), 0usize.into(), 1e-20.into()]);
        let s = t.render(&prov());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# schema=demo/1");
        assert!(lines[1].starts_with("# provenance: tool=hom-cascade/"));
        assert!(lines[1].ends_with("config_sha256=ab seed=7"));
        assert_eq!(&lines[2..], &["a,b,c", "0.1,3,x", "inf,0,0.00000000000000000001"]);
    }

    #[test]
    fn provenance_goes_second() {
        let s = with_provenance("# schema=x/1\nh\n1\n", &prov());
        assert_eq!(s.lines().nth(1).unwrap(), prov().line());
        assert_eq!(s.lines().nth(2), Some("h"));
    }
}

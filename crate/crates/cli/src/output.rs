//! Versioned CSV tables and the run manifest.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub const CSV_SCHEMA: u32 = 1;
pub const MANIFEST_SCHEMA: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest round-trip representation in scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// A table written as CSV: a `# schema=1 kind=... key=value` line, the
/// header row, then the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: String,
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, header: &[&str]) -> Self {
        Self {
            kind: kind.into(),
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn comment_line(&self) -> String {
        let mut s = format!("# schema={CSV_SCHEMA} kind={}", self.kind);
        for (k, v) in &self.meta {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), String> {
        let mut file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        writeln!(file, "{}", self.comment_line()).map_err(|e| e.to_string())?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header).map_err(|e| e.to_string())?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let first = text.lines().next().unwrap_or_default();
        let mut kind = None;
        let mut meta = Vec::new();
        let mut schema = None;
        for tok in first.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                match k {
                    "schema" => schema = v.parse::<u32>().ok(),
                    "kind" => kind = Some(v.to_string()),
                    _ => meta.push((k.to_string(), v.to_string())),
                }
            }
        }
        if schema != Some(CSV_SCHEMA) {
            return Err(format!("{}: missing or unsupported schema line", path.display()));
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = r
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| e.to_string())?;
        Ok(Self {
            kind: kind.unwrap_or_default(),
            meta,
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Result<usize, String> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("column `{name}` missing from {} table", self.kind))
    }

    /// Numeric column; empty cells become NaN.
    pub fn floats(&self, name: &str) -> Result<Vec<f64>, String> {
        let i = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                if r[i].is_empty() {
                    Ok(f64::NAN)
                } else {
                    r[i].parse::<f64>().map_err(|e| format!("{name}: `{}`: {e}", r[i]))
                }
            })
            .collect()
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>, String> {
        let i = self.column(name)?;
        Ok(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, with `--out` removed and paths
    /// made absolute, so the run can be repeated elsewhere.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub constants: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub outputs: Vec<String>,
}

/// Collects output files of one run.
#[derive(Debug)]
pub struct OutDir {
    pub path: PathBuf,
    pub files: Vec<String>,
}

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, String> {
        fs::create_dir_all(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
        Ok(Self {
            path: path.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<PathBuf, String> {
        let p = self.path.join(name);
        t.write(&p)?;
        self.files.push(name.into());
        Ok(p)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf, String> {
        let p = self.path.join(name);
        fs::write(&p, body).map_err(|e| format!("{}: {e}", p.display()))?;
        self.files.push(name.into());
        Ok(p)
    }

    pub fn read_table(&self, name: &str) -> Result<Table, String> {
        Table::read(&self.path.join(name))
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), String> {
        let body = serde_json::to_string_pretty(manifest).map_err(|e| e.to_string())?;
        fs::write(self.path.join(MANIFEST_FILE), body + "\n").map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["a", "b"]).meta("model", "ddp");
        t.push(vec![num(1e-15), "x,y".into()]);
        t.push(vec![opt_num(None), "z".into()]);
        let p = dir.path().join("t.csv");
        t.write(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# schema=1 kind=demo model=ddp\na,b\n1e-15,\"x,y\"\n"));
        let back = Table::read(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.floats("a").unwrap()[0], 1e-15);
        assert!(back.floats("a").unwrap()[1].is_nan());
        assert_eq!(back.meta_value("model"), Some("ddp"));
        assert!(back.column("c").is_err());
    }

    #[test]
    fn unversioned_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(Table::read(&p).is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for v in [1e-300, 4.2012345678901e-12, 1.0, 6.02e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}

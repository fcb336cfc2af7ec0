//! Self-describing CSV tables, JSON documents and the hash manifest.
//!
//! CSV files open with `#` comment lines (what the table is, the config hash,
//! units) followed by a single header row; gnuplot reads them with
//! `set datafile separator comma`. Numbers use Rust's shortest round-trip
//! exponent form, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.push_cells(row.into_iter().map(number).collect());
    }

    /// A row of preformatted cells; commas inside a cell become semicolons.
    pub fn push_cells(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows
            .push(row.into_iter().map(|c| c.replace(',', ";")).collect());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}

pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        "nan".to_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub files: Vec<FileEntry>,
}

/// Writes files into one directory and remembers their hashes.
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(CliError::io(&path))?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(FileEntry {
            path: name.to_owned(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    /// Hashes a file that something else wrote under the root.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let path = self.root.join(name);
        let bytes = fs::read(&path).map_err(CliError::io(&path))?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(FileEntry {
            path: name.to_owned(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write(name, table.render().as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::numeric)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Entries so far, sorted by path.
    pub fn entries(&self) -> Vec<FileEntry> {
        let mut e = self.entries.clone();
        e.sort_by(|a, b| a.path.cmp(&b.path));
        e
    }

    /// Writes `manifest.json` covering every file written through `self`.
    pub fn finish(mut self, config_sha256: &str) -> Result<Manifest> {
        let manifest = Manifest {
            config_sha256: config_sha256.to_owned(),
            files: self.entries(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(CliError::numeric)?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(CliError::io(&path))?;
        self.entries.clear();
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileStatus {
    Ok,
    Missing,
    Changed { expected: String, found: String },
}

/// Re-hashes every file listed in `dir/manifest.json`. Nested manifests
/// (sweep points) are followed.
pub fn verify(dir: &Path) -> Result<Vec<(PathBuf, FileStatus)>> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Verify(format!("{}: {e}", path.display())))?;
    let mut report = Vec::new();
    for entry in &manifest.files {
        let file = dir.join(&entry.path);
        let status = match fs::read(&file) {
            Ok(bytes) => {
                let found = sha256_hex(&bytes);
                if found == entry.sha256 {
                    FileStatus::Ok
                } else {
                    FileStatus::Changed {
                        expected: entry.sha256.clone(),
                        found,
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => FileStatus::Missing,
            Err(e) => {
                return Err(CliError::Io {
                    path: file,
                    source: e,
                })
            }
        };
        let nested = status == FileStatus::Ok
            && entry.path != MANIFEST
            && Path::new(&entry.path).file_name() == Some(MANIFEST.as_ref());
        report.push((file.clone(), status));
        if nested {
            if let Some(parent) = file.parent() {
                report.extend(verify(parent)?);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["t", "w"]);
        t.comment("demo");
        t.push(vec![0.0, 1.0]);
        t.push(vec![2.5e-3, f64::NAN]);
        assert_eq!(t.render(), "# demo\nt,w\n0e0,1e0\n2.5e-3,nan\n");
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a.txt", b"alpha").unwrap();
        out.write("b.txt", b"beta").unwrap();
        out.finish("abc").unwrap();
        assert!(verify(dir.path())
            .unwrap()
            .iter()
            .all(|(_, s)| *s == FileStatus::Ok));
        fs::write(dir.path().join("a.txt"), b"alpha!").unwrap();
        fs::remove_file(dir.path().join("b.txt")).unwrap();
        let report = verify(dir.path()).unwrap();
        assert!(matches!(report[0].1, FileStatus::Changed { .. }));
        assert_eq!(report[1].1, FileStatus::Missing);
    }
}

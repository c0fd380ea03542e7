//! CSV emission: rectangular tables, 17-significant-digit floats and
//! atomic writes.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// A rectangular table with an optional leading comment line.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub comment: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(comment: impl Into<String>, header: &[&str]) -> Self {
        Self {
            comment: Some(comment.into()),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<Vec<u8>> {
        let mut out = String::new();
        if let Some(c) = &self.comment {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                bail!(
                    "row {i} has {} cells, header has {} columns",
                    row.len(),
                    self.header.len()
                );
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out.into_bytes())
    }
}

/// 17 significant digits: parses back to the identical double.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write through a temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut tmp = PathBuf::from(path);
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    tmp.set_file_name(name);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming into place: {}", path.display()))?;
    Ok(())
}

/// Write a batch of files; if any write fails, remove the ones already
/// placed so a failed command leaves no partial output set.
pub fn emit_all(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut written: Vec<&PathBuf> = Vec::new();
    for (path, bytes) in files {
        if let Err(e) = write_atomic(path, bytes) {
            for w in written {
                let _ = std::fs::remove_file(w);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(())
}

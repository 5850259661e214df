//! Artifact writing. Every file goes to a temporary sibling first and is
//! renamed into place once complete.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fraccap_core::export::fmt_f64;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write<F>(&self, name: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp{}", std::process::id()));
        let result = (|| {
            let file = File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            let file = w.into_inner().map_err(|e| CliError::io(&tmp, e.into_error()))?;
            file.sync_all().map_err(|e| CliError::io(&tmp, e))?;
            fs::rename(&tmp, &target).map_err(|e| CliError::io(&target, e))
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result.map(|_| target)
    }

    pub fn write_table(&self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        self.write(name, |w| table.write(w))
    }

    pub fn write_summary(&self, summary: &Summary) -> Result<PathBuf, CliError> {
        self.write("summary.txt", |w| {
            for (k, v) in &summary.0 {
                writeln!(w, "{k} = {v}").map_err(|e| CliError::io("summary.txt", e))?;
            }
            Ok(())
        })
    }
}

/// In-memory CSV table with string cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, w: &mut dyn Write) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| CliError::Core(e.into());
        out.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            out.write_record(row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| CliError::io("csv output", e))
    }
}

/// `key = value` lines, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary(pub Vec<(String, String)>);

impl Summary {
    pub fn add(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn add_f64(&mut self, key: &str, value: f64) {
        self.add(key, fmt_f64(value));
    }

    pub fn add_list(&mut self, key: &str, values: &[f64]) {
        self.add(key, join(values));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_atomically_and_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(&dir.path().join("nested")).unwrap();
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(0.1)]);
        out.write_table("t.csv", &t).unwrap();
        let text = fs::read_to_string(out.path("t.csv")).unwrap();
        assert_eq!(text, "a,b\n1,1.0000000000000001e-1\n");
        let failed = out.write("bad.csv", |_| Err(CliError::Config("boom".into())));
        assert!(failed.is_err());
        let names: Vec<_> = fs::read_dir(out.path(""))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from("t.csv")]);
    }
}

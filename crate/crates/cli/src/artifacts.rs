//! Artifact directory `out/<run-id>/` with a manifest, a summary and CSV
//! tables. Contents are collected in memory and written at the end so a
//! rerun with the same configuration reproduces every file byte for byte.

use serde::Serialize;
use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) {
        let mut body = serde_json::to_vec_pretty(value).expect("artifact serializes");
        body.push(b'\n');
        self.files.insert(name.to_string(), body);
    }

    /// CSV with a header row; rows are serialized field by field.
    pub fn csv<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for row in rows {
            w.serialize(row).expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory flush");
        self.files.insert(name.to_string(), body);
    }

    /// Nests another set under `prefix/`.
    pub fn nest(&mut self, prefix: &str, other: Artifacts) {
        for (name, body) in other.files {
            self.files.insert(format!("{prefix}/{name}"), body);
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.files.keys().cloned().collect()
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        for (name, body) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, body)?;
        }
        Ok(())
    }
}

pub fn run_dir(out: &Path, run_id: &str) -> PathBuf {
    out.join(run_id)
}

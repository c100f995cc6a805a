//! Artifact files: CSV tables, plot series and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

/// 17 significant digits; Rust float formatting is locale independent.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// `x,y` series.
    pub fn series(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut t = Self::new(&["x", "y"]);
        for (x, y) in points {
            t.push(vec![real(x), real(y)]);
        }
        t
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Failed paths summed over all levels and studies.
    pub failures: usize,
    pub artifacts: Vec<ArtifactEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Files whose checksum no longer matches (missing files included).
    pub fn mismatches(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| fs::read(dir.join(&a.file)).map_or(true, |b| sha256_hex(&b) != a.sha256))
            .map(|a| a.file.clone())
            .collect()
    }
}

/// Writes artifacts in call order and records their checksums.
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `name` is relative to the output directory and uses `/`.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.entries.retain(|e| e.file != name);
        self.entries.push(ArtifactEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &Table) -> io::Result<()> {
        self.write(name, &table.to_bytes())
    }

    pub fn finish(self, subcommand: &str, config_sha256: String, seed: u64, failures: usize) -> io::Result<Manifest> {
        let m = Manifest {
            subcommand: subcommand.to_string(),
            config_sha256,
            seed,
            failures,
            artifacts: self.entries,
        };
        let mut text = serde_json::to_string_pretty(&m).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_carry_17_significant_digits() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(1.0), "1.0000000000000000e0");
        assert_eq!(real(-2.5e-300), "-2.5000000000000000e-300");
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, 5e-324] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_bytes(), b"a,b\n1,2\n");
        assert_eq!(Table::series([(1.0, 2.0)]).to_bytes(), b"x,y\n1.0000000000000000e0,2.0000000000000000e0\n");
    }

    #[test]
    fn manifest_round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::create(dir.path()).unwrap();
        w.write("a.csv", b"x\n").unwrap();
        w.write("plots/b.csv", b"y\n").unwrap();
        let m = w.finish("all", sha256_hex(b"cfg"), 7, 0).unwrap();
        let back = Manifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        assert!(back.mismatches(dir.path()).is_empty());
        fs::write(dir.path().join("plots/b.csv"), b"z\n").unwrap();
        assert_eq!(back.mismatches(dir.path()), ["plots/b.csv"]);
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

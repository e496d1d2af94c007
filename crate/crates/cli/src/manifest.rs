//! Run manifest: written with status `running` before any work starts and
//! rewritten as `complete` or `failed` at the end, so an interrupted run
//! leaves a manifest that still says `running`.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

/// Outcome of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub label: String,
    pub seed: u64,
    pub elapsed_s: f64,
    /// Empty when the point succeeded.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub status: Status,
    pub started_unix_s: f64,
    pub finished_unix_s: Option<f64>,
    pub elapsed_s: Option<f64>,
    pub error: Option<String>,
    /// Exact config used, after command-line overrides.
    pub config: toml::Table,
    pub points: Vec<PointRecord>,
    pub files: Vec<FileEntry>,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

/// Manifest that lives in an output directory and tracks its files.
pub struct RunManifest {
    dir: PathBuf,
    start: Instant,
    files: Vec<PathBuf>,
    pub manifest: Manifest,
}

impl RunManifest {
    /// Creates `dir` and writes the initial manifest.
    pub fn begin(dir: &Path, command: &str, config: toml::Table) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let manifest = Manifest {
            tool: "mqrc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            status: Status::Running,
            started_unix_s: unix_now(),
            finished_unix_s: None,
            elapsed_s: None,
            error: None,
            config,
            points: Vec::new(),
            files: Vec::new(),
        };
        let run = Self { dir: dir.to_path_buf(), start: Instant::now(), files: Vec::new(), manifest };
        run.write()?;
        Ok(run)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path of an output file, registered for the inventory.
    pub fn output(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        if !self.files.contains(&p) {
            self.files.push(p.clone());
        }
        p
    }

    pub fn record(&mut self, point: PointRecord) -> Result<()> {
        self.manifest.points.push(point);
        self.write()
    }

    fn write(&self) -> Result<()> {
        let path = self.dir.join(MANIFEST_NAME);
        let tmp = self.dir.join(format!("{MANIFEST_NAME}.tmp"));
        std::fs::write(&tmp, serde_json::to_string_pretty(&self.manifest)?)
            .with_context(|| format!("writing {}", tmp.display()))?;
        std::fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// Checksums every registered file that exists and writes the final
    /// manifest.
    pub fn finish(mut self, outcome: &Result<()>) -> Result<Manifest> {
        let mut files = Vec::new();
        for p in &self.files {
            if p.exists() {
                let (bytes, sha256) = sha256_file(p)?;
                let rel = p.strip_prefix(&self.dir).unwrap_or(p).to_string_lossy().into_owned();
                files.push(FileEntry { path: rel, bytes, sha256 });
            }
        }
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let m = &mut self.manifest;
        m.files = files;
        m.finished_unix_s = Some(unix_now());
        m.elapsed_s = Some(self.start.elapsed().as_secs_f64());
        match outcome {
            Ok(()) => m.status = Status::Complete,
            Err(e) => {
                m.status = Status::Failed;
                m.error = Some(format!("{e:#}"));
            }
        }
        self.write()?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifecycle_and_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunManifest::begin(dir.path(), "test", toml::Table::new()).unwrap();
        assert_eq!(read_manifest(dir.path()).unwrap().status, Status::Running);
        let out = run.output("a.csv");
        std::fs::write(&out, b"abc").unwrap();
        run.output("never-written.csv");
        run.record(PointRecord { index: 0, label: "p".into(), seed: 1, elapsed_s: 0.0, errors: vec![] }).unwrap();
        let m = run.finish(&Ok(())).unwrap();
        assert_eq!(m.status, Status::Complete);
        assert_eq!(m.files.len(), 1);
        // sha256("abc")
        assert_eq!(m.files[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(read_manifest(dir.path()).unwrap(), m);
    }

    #[test]
    fn failure_is_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunManifest::begin(dir.path(), "test", toml::Table::new()).unwrap();
        let m = run.finish(&Err(anyhow::anyhow!("boom"))).unwrap();
        assert_eq!(m.status, Status::Failed);
        assert_eq!(m.error.as_deref(), Some("boom"));
    }
}

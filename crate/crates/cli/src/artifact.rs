//! On-disk formats. JSON carries full structure; CSV carries the point data
//! (`re,im,residual`) for plotting. Both are written from the same values
//! so they round-trip to each other exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use specpol::c64;

use crate::error::{CliError, Result};

pub const SCHEMA: &str = "specpol-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(i64, i64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    FirstOrder,
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

impl Point {
    pub fn z(&self) -> c64 {
        c64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSetFile {
    pub schema: String,
    /// File name of the manifest that lists this file.
    pub manifest: String,
    pub model: ModelDescriptor,
    #[serde(rename = "N")]
    pub n: usize,
    pub kind: Kind,
    pub tolerance: f64,
    /// Sorted by `(re, im)`.
    pub points: Vec<Point>,
    /// `[re − |im|, re + |im|]` per point.
    pub enclosures: Vec<(f64, f64)>,
}

impl PointSetFile {
    pub fn new(
        manifest: &str,
        model: ModelDescriptor,
        n: usize,
        kind: Kind,
        tolerance: f64,
        mut points: Vec<Point>,
    ) -> Self {
        points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let enclosures = points
            .iter()
            .map(|p| (p.re - p.im.abs(), p.re + p.im.abs()))
            .collect();
        PointSetFile {
            schema: SCHEMA.into(),
            manifest: manifest.into(),
            model,
            n,
            kind,
            tolerance,
            points,
            enclosures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    #[serde(rename = "N_values")]
    pub n_values: Vec<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub backend: String,
    pub wall_time_s: f64,
    pub artifacts: Vec<ArtifactRecord>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            schema: SCHEMA.into(),
            command: command.into(),
            parameters: BTreeMap::new(),
            n_values: Vec::new(),
            tolerances: BTreeMap::new(),
            backend: specpol::eig::BACKEND.into(),
            wall_time_s: 0.0,
            artifacts: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    pub fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.into(), value);
        self
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Encode(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn points_csv(points: &[Point]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p).map_err(|e| CliError::Encode(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Encode(e.to_string()))
}

/// CSV with a header row followed by `rows`; `None` cells stay empty.
pub fn table_csv(header: &[String], rows: &[Vec<Option<f64>>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| CliError::Encode(e.to_string());
    w.write_record(header).map_err(enc)?;
    for row in rows {
        w.write_record(row.iter().map(|c| c.map(|x| x.to_string()).unwrap_or_default()))
            .map_err(enc)?;
    }
    w.into_inner().map_err(|e| CliError::Encode(e.to_string()))
}

pub fn read_points_csv(path: &Path) -> Result<Vec<Point>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Encode(e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| CliError::Encode(e.to_string())))
        .collect()
}

pub fn read_point_set(path: &Path) -> Result<PointSetFile> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Encode(e.to_string()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes one run's data files into a directory and records their
/// checksums for the manifest. Every file name starts with `stem`, so runs
/// with different stems can share a directory. Safe to share between
/// worker threads.
pub struct ArtifactSink {
    dir: PathBuf,
    stem: String,
    written: Mutex<Vec<ArtifactRecord>>,
}

impl ArtifactSink {
    pub fn create(dir: &Path, stem: &str) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(ArtifactSink {
            dir: dir.to_path_buf(),
            stem: stem.into(),
            written: Mutex::new(Vec::new()),
        })
    }

    pub fn manifest_name(&self) -> String {
        format!("{}.manifest.json", self.stem)
    }

    /// Writes `{stem}_{suffix}`.
    pub fn write(&self, suffix: &str, bytes: &[u8]) -> Result<PathBuf> {
        let name = format!("{}_{suffix}", self.stem);
        let path = self.dir.join(&name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.lock().unwrap().push(ArtifactRecord {
            path: name,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Writes the manifest last, with artifacts in name order.
    pub fn finish(self, mut manifest: RunManifest) -> Result<PathBuf> {
        let path = self.dir.join(self.manifest_name());
        let mut records = self.written.into_inner().unwrap();
        records.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.artifacts = records;
        fs::write(&path, to_json(&manifest)?).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

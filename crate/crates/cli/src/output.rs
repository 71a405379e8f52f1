//! CSV/JSON artifact writing and the run manifest that references every written file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};
use transverse_core::ModelSpec;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// 17 significant digits, so values round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn csv_body(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

const TOLERANCE_KEYS: &[&str] = &[
    "tol", "x_inf", "k_tol", "fd_step", "jump_tol", "fit_half_width", "dt", "kappa", "fit_lo_factor", "fit_hi",
];
const GRID_KEYS: &[&str] = &[
    "n", "half_length", "nx", "ny", "lx", "ly", "nk", "nre", "nim", "nodes", "nt", "re_min", "re_max", "im_min",
    "im_max",
];

#[derive(Debug, Serialize)]
pub struct ModelInfo {
    pub name: String,
    pub p: u32,
    pub c: f64,
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub model: Option<ModelInfo>,
    pub parameters: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, String>,
    pub grid: BTreeMap<String, String>,
    pub config_file_sha256: Option<String>,
    /// Hash of the command name and every resolved parameter.
    pub config_sha256: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputEntry>,
}

/// Collects the artifacts of one command and writes the manifest last.
pub struct Outputs {
    dir: PathBuf,
    command: String,
    started: Instant,
    entries: Vec<OutputEntry>,
}

impl Outputs {
    pub fn new(dir: &Path, command: &str) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            started: Instant::now(),
            entries: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.entries.push(OutputEntry {
            file: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> anyhow::Result<PathBuf> {
        self.write_bytes(name, csv_body(header, rows).as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn finish(
        self,
        model: Option<&ModelSpec>,
        resolved: &BTreeMap<String, String>,
        config_file_sha256: Option<String>,
    ) -> anyhow::Result<PathBuf> {
        let mut parameters = BTreeMap::new();
        let mut tolerances = BTreeMap::new();
        let mut grid = BTreeMap::new();
        for (k, v) in resolved {
            let bucket = if TOLERANCE_KEYS.contains(&k.as_str()) {
                &mut tolerances
            } else if GRID_KEYS.contains(&k.as_str()) {
                &mut grid
            } else {
                &mut parameters
            };
            bucket.insert(k.clone(), v.clone());
        }
        let canonical = serde_json::to_vec(&(&self.command, resolved))?;
        let manifest = RunManifest {
            tool: "transverse",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.clone(),
            model: model.map(|m| ModelInfo {
                name: m.name.to_string(),
                p: m.p,
                c: m.c,
            }),
            parameters,
            tolerances,
            grid,
            config_file_sha256,
            config_sha256: sha256_hex(&canonical),
            threads: rayon::current_num_threads(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.entries,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.command));
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

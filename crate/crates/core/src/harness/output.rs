//! CSV/JSON writers, the checksum manifest, and a reader for the tables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ResolvedRun;
use crate::analysis::{EfficacyResult, FtPoint, Histogram, TpmDistribution};
use crate::error::{Error, Result};
use crate::trajectory::TrajectoryRecord;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub files: Vec<ManifestEntry>,
}

impl OutputBundle {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// 17 significant digits, enough to round-trip every `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), num)
}

fn digest_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Writes files into one directory and keeps their checksums.
pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl OutputWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        let (sha256, bytes) = digest_file(&path)?;
        self.files.push(ManifestEntry {
            name: name.to_string(),
            sha256,
            bytes,
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    /// Writes the manifest echoing the resolved configuration.
    pub fn finish(self, run: &ResolvedRun, command: &str) -> Result<OutputBundle> {
        let manifest = serde_json::json!({
            "command": command,
            "config": run.config,
            "derived": run.derived_json(),
            "files": self.files,
        });
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(OutputBundle {
            dir: self.dir,
            files: self.files,
        })
    }
}

/// Re-hashes every file listed in `dir/manifest.json`.
pub fn verify_manifest(dir: &Path) -> Result<OutputBundle> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    let files: Vec<ManifestEntry> =
        serde_json::from_value(value["files"].clone()).map_err(|source| Error::Json {
            path: path.clone(),
            source,
        })?;
    for entry in &files {
        let (sha, bytes) = digest_file(&dir.join(&entry.name))?;
        if sha != entry.sha256 || bytes != entry.bytes {
            return Err(Error::Parse {
                path: dir.join(&entry.name),
                reason: format!("checksum {sha} does not match manifest {}", entry.sha256),
            });
        }
    }
    Ok(OutputBundle {
        dir: dir.to_path_buf(),
        files,
    })
}

/// Recorded ledger points; `current` is the readout at `t_us` (NaN at `t = 0`).
pub fn write_trajectories(w: &mut dyn Write, records: &[TrajectoryRecord]) -> io::Result<()> {
    writeln!(w, "traj_id,t_us,current,U,W,Q,Sigma")?;
    for (id, r) in records.iter().enumerate() {
        for (k, &i) in r.indices.iter().enumerate() {
            let current = if i == 0 { f64::NAN } else { r.currents[i - 1] };
            writeln!(
                w,
                "{id},{},{},{},{},{},{}",
                num(r.times[k]),
                num(current),
                num(r.energy[k]),
                num(r.work[k]),
                num(r.heat[k]),
                num(r.entropy[k])
            )?;
        }
    }
    Ok(())
}

pub fn write_endpoints(w: &mut dyn Write, records: &[TrajectoryRecord]) -> io::Result<()> {
    writeln!(w, "traj_id,n,m,eps_n,eps_m,log_pF,log_pB,Sigma_final")?;
    for (id, r) in records.iter().enumerate() {
        writeln!(
            w,
            "{id},{},{},{},{},{},{},{}",
            r.n,
            r.m,
            num(r.eps_n),
            num(r.eps_m),
            opt(r.log_pf),
            opt(r.log_pb),
            num(r.sigma_final())
        )?;
    }
    Ok(())
}

pub(super) fn write_ft_points(w: &mut dyn Write, points: &[FtPoint]) -> io::Result<()> {
    writeln!(w, "delta_u,log_ratio,n,m")?;
    for p in points {
        writeln!(w, "{},{},{},{}", num(p.delta_u), num(p.log_ratio), p.n, p.m)?;
    }
    Ok(())
}

pub(super) fn write_histogram(w: &mut dyn Write, h: &Histogram) -> io::Result<()> {
    writeln!(w, "bin_lo,bin_hi,count")?;
    for (k, c) in h.counts.iter().enumerate() {
        writeln!(w, "{},{},{c}", num(h.edges[k]), num(h.edges[k + 1]))?;
    }
    Ok(())
}

pub(super) fn write_sweep(w: &mut dyn Write, points: &[(f64, EfficacyResult)]) -> io::Result<()> {
    writeln!(w, "gamma1_over_kappa,efficacy,stderr")?;
    for (g, e) in points {
        writeln!(w, "{},{},{}", num(*g), num(e.mean), num(e.stderr))?;
    }
    Ok(())
}

pub(super) fn write_tpm(w: &mut dyn Write, t: &TpmDistribution) -> io::Result<()> {
    writeln!(w, "n,m,prob,work,crooks_residual")?;
    for tr in &t.transitions {
        writeln!(
            w,
            "{},{},{},{},{}",
            tr.n,
            tr.m,
            num(tr.prob),
            num(tr.work),
            num(tr.crooks_residual)
        )?;
    }
    Ok(())
}

/// A numeric CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            reason: "missing header".into(),
        })?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                reason: format!("line {}: {e}", line_no + 2),
            })?;
        if row.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                reason: format!(
                    "line {} has {} fields, header has {}",
                    line_no + 2,
                    row.len(),
                    header.len()
                ),
            });
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

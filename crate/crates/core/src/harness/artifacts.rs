//! Run artifacts: metrics CSVs, weights checkpoints and manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{Algo, EpisodeRecord, Hyperparams};
use crate::neural::{save_weights, Mlp};
use crate::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const SINR_FILE: &str = "sinr.csv";
pub const WEIGHTS_FILE: &str = "weights.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Header of the per-episode metrics file.
pub const METRICS_COLUMNS: [&str; 6] = ["episode", "total_reward", "steps", "success", "outage_count", "epsilon"];

pub fn code_version() -> &'static str {
    concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"))
}

pub fn write_metrics_csv(records: &[EpisodeRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| csv_to_io(e, path.as_ref()))?;
    w.write_record(METRICS_COLUMNS)?;
    for r in records {
        w.write_record([
            r.episode.to_string(),
            format!("{:?}", r.total_reward),
            r.steps.to_string(),
            r.success.to_string(),
            r.outage_count.to_string(),
            format!("{:?}", r.epsilon),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

/// Reads a metrics file back. `mean_sinr_db` is not stored there and comes back as 0.
pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<EpisodeRecord>> {
    let mut r = csv::Reader::from_path(path.as_ref()).map_err(|e| csv_to_io(e, path.as_ref()))?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(METRICS_COLUMNS) {
        return Err(Error::Invalid(format!("{}: unexpected metrics header {:?}", path.as_ref().display(), headers)));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Mean SINR per episode, kept apart so the metrics file has the declared columns only.
pub fn write_sinr_csv(records: &[EpisodeRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| csv_to_io(e, path.as_ref()))?;
    w.write_record(["episode", "mean_sinr_db"])?;
    for r in records {
        w.write_record([r.episode.to_string(), format!("{:?}", r.mean_sinr_db)])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_sinr_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path.as_ref()).map_err(|e| csv_to_io(e, path.as_ref()))?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Everything needed to reproduce one training run. Deliberately free of
/// timestamps and absolute paths so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub kind: String,
    pub algo: Algo,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub env_hash: String,
    /// Checksum of the weights the run started from, when it did not start from scratch.
    pub source_weights: Option<String>,
    pub episodes: usize,
    pub converged_at: Option<usize>,
    pub weights_checksum: String,
}

pub fn write_manifest(manifest: &RunManifest, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(path.as_ref(), json + "\n").map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.as_ref().display())))
}

/// Files written for a finished run inside `dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub dir: PathBuf,
    pub metrics: PathBuf,
    pub sinr: PathBuf,
    pub weights: PathBuf,
    pub manifest: PathBuf,
}

impl RunFiles {
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        Self { metrics: dir.join(METRICS_FILE), sinr: dir.join(SINR_FILE), weights: dir.join(WEIGHTS_FILE), manifest: dir.join(MANIFEST_FILE), dir }
    }
}

/// Writes metrics, SINR, weights and manifest into `dir`, creating it if needed.
pub fn write_run(dir: impl AsRef<Path>, records: &[EpisodeRecord], net: &Mlp, manifest: &RunManifest) -> Result<RunFiles> {
    let files = RunFiles::in_dir(dir.as_ref());
    std::fs::create_dir_all(&files.dir).map_err(|e| Error::io(&files.dir, e))?;
    write_metrics_csv(records, &files.metrics)?;
    write_sinr_csv(records, &files.sinr)?;
    save_weights(net, &files.weights)?;
    write_manifest(manifest, &files.manifest)?;
    Ok(files)
}

fn csv_to_io(e: csv::Error, path: &Path) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Invalid(format!("{}: {other:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<EpisodeRecord> {
        (0..5)
            .map(|i| EpisodeRecord {
                episode: i,
                total_reward: -1.0 / 3.0 + i as f64,
                steps: 10 + i,
                success: i % 2 == 0,
                outage_count: i,
                epsilon: 0.998f64.powi(i as i32 + 1),
                mean_sinr_db: 0.1 * i as f64,
            })
            .collect()
    }

    #[test]
    fn metrics_round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(METRICS_FILE);
        let recs = records();
        write_metrics_csv(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "episode,total_reward,steps,success,outage_count,epsilon");
        let back = read_metrics_csv(&path).unwrap();
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(
                (a.episode, a.total_reward, a.steps, a.success, a.outage_count, a.epsilon),
                (b.episode, b.total_reward, b.steps, b.success, b.outage_count, b.epsilon)
            );
        }
        let sinr = dir.path().join(SINR_FILE);
        write_sinr_csv(&recs, &sinr).unwrap();
        assert_eq!(read_sinr_csv(&sinr).unwrap()[3], (3, 0.1 * 3.0));
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "episode,reward\n0,1\n").unwrap();
        assert!(read_metrics_csv(&path).is_err());
    }
}

//! Smoothed learning curves for plotting.

use std::path::{Path, PathBuf};

use crate::agent::EpisodeRecord;
use crate::harness::artifacts::{read_metrics_csv, read_sinr_csv, METRICS_FILE, SINR_FILE};
use crate::{Error, Result};

/// Trailing moving average. The first `window - 1` entries average over the
/// shorter prefix that exists so far.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..xs.len())
        .map(|i| {
            let slice = &xs[(i + 1).saturating_sub(w)..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Smoothed series of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub reward: Vec<f64>,
    pub success: Vec<f64>,
    pub sinr: Vec<f64>,
}

impl Curve {
    pub fn from_records(records: &[EpisodeRecord], window: usize) -> Self {
        let col = |f: fn(&EpisodeRecord) -> f64| moving_average(&records.iter().map(f).collect::<Vec<_>>(), window);
        Self { reward: col(|r| r.total_reward), success: col(|r| r.success as u8 as f64), sinr: col(|r| r.mean_sinr_db) }
    }

    pub fn len(&self) -> usize {
        self.reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reward.is_empty()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::Invalid(format!("{}: {e}", path.as_ref().display())))?;
        w.write_record(["episode", "reward", "success_rate", "mean_sinr_db"])?;
        for i in 0..self.len() {
            w.write_record([i.to_string(), format!("{:?}", self.reward[i]), format!("{:?}", self.success[i]), format!("{:?}", self.sinr[i])])?;
        }
        w.flush().map_err(|e| Error::io(path.as_ref(), e))
    }
}

/// Mean, minimum and maximum across curves at each episode; shorter runs
/// drop out once they end.
pub fn aggregate(series: &[&[f64]]) -> Vec<(usize, f64, f64, f64, usize)> {
    let len = series.iter().map(|s| s.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = series.iter().filter_map(|s| s.get(i).copied()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (i, mean, lo, hi, vals.len())
        })
        .collect()
}

fn write_aggregate(rows: &[(usize, f64, f64, f64, usize)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    w.write_record(["episode", "mean", "min", "max", "runs"])?;
    for (i, mean, lo, hi, n) in rows {
        w.write_record([i.to_string(), format!("{mean:?}"), format!("{lo:?}"), format!("{hi:?}"), n.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads the records of a run directory, joining the SINR file when present.
pub fn load_run_records(dir: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut records = read_metrics_csv(dir.join(METRICS_FILE))?;
    let sinr_path = dir.join(SINR_FILE);
    if sinr_path.exists() {
        for (ep, s) in read_sinr_csv(&sinr_path)? {
            if let Some(r) = records.iter_mut().find(|r| r.episode == ep) {
                r.mean_sinr_db = s;
            }
        }
    }
    Ok(records)
}

/// Writes `<out>/<label>.csv` per run directory plus `<out>/aggregate_<series>.csv`
/// across all of them. Returns the files written.
pub fn export_curves(runs: &[(String, PathBuf)], window: usize, out: &Path) -> Result<Vec<PathBuf>> {
    if runs.is_empty() {
        return Err(Error::Invalid("no runs to export".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    let mut curves = Vec::new();
    for (label, dir) in runs {
        let curve = Curve::from_records(&load_run_records(dir)?, window);
        let path = out.join(format!("{label}.csv"));
        curve.write_csv(&path)?;
        written.push(path);
        curves.push(curve);
    }
    let series: [(&str, fn(&Curve) -> &[f64]); 3] = [("reward", |c| &c.reward), ("success_rate", |c| &c.success), ("mean_sinr_db", |c| &c.sinr)];
    for (name, get) in series {
        let path = out.join(format!("aggregate_{name}.csv"));
        write_aggregate(&aggregate(&curves.iter().map(get).collect::<Vec<_>>()), &path)?;
        written.push(path);
    }
    Ok(written)
}

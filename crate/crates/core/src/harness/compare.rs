//! Paired baseline-versus-treatment convergence statistics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::training_complete;
use crate::harness::artifacts::read_metrics_csv;
use crate::Result;

/// Episodes-to-convergence of both arms for one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedPair {
    pub seed: u64,
    pub baseline: Option<usize>,
    pub treatment: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: Vec<SeedPair>,
    /// Seeds dropped from the speedup because an arm never converged.
    pub excluded: Vec<u64>,
    pub median_baseline: Option<f64>,
    pub median_treatment: Option<f64>,
    /// Median over included seeds of `baseline - treatment`.
    pub median_delta: Option<f64>,
    /// `(median_baseline - median_treatment) / median_baseline`, in percent.
    pub speedup_percent: Option<f64>,
    /// Seeds where the treatment converged no later than the baseline. A
    /// converged treatment beats a non-converged baseline; two
    /// non-converged arms count as a tie.
    pub treatment_no_later: usize,
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

impl ComparisonReport {
    pub fn from_pairs(pairs: Vec<SeedPair>) -> Self {
        let mut excluded = Vec::new();
        let (mut base, mut treat, mut delta) = (Vec::new(), Vec::new(), Vec::new());
        let mut no_later = 0;
        for p in &pairs {
            match (p.baseline, p.treatment) {
                (Some(b), Some(t)) => {
                    base.push(b as f64);
                    treat.push(t as f64);
                    delta.push(b as f64 - t as f64);
                    no_later += (t <= b) as usize;
                }
                (b, t) => {
                    excluded.push(p.seed);
                    no_later += (t.is_some() || b.is_none()) as usize;
                }
            }
        }
        let median_baseline = median(&base);
        let median_treatment = median(&treat);
        let speedup_percent = match (median_baseline, median_treatment) {
            (Some(b), Some(t)) if b > 0.0 => Some(100.0 * (b - t) / b),
            _ => None,
        };
        Self { median_delta: median(&delta), pairs, excluded, median_baseline, median_treatment, speedup_percent, treatment_no_later: no_later }
    }

    /// Rebuilds the report from metrics files, re-deriving each convergence
    /// episode from the raw success column.
    pub fn from_metrics_files(files: &[(u64, &Path, &Path)], window: usize, threshold: f64) -> Result<Self> {
        let mut pairs = Vec::new();
        for &(seed, base, treat) in files {
            pairs.push(SeedPair { seed, baseline: convergence_from_csv(base, window, threshold)?, treatment: convergence_from_csv(treat, window, threshold)? });
        }
        Ok(Self::from_pairs(pairs))
    }
}

/// First episode count at which the success criterion holds in a metrics file.
pub fn convergence_from_csv(path: &Path, window: usize, threshold: f64) -> Result<Option<usize>> {
    let records = read_metrics_csv(path)?;
    let successes: Vec<bool> = records.iter().map(|r| r.success).collect();
    Ok((1..=successes.len()).find(|&n| training_complete(&successes[..n], window, threshold)))
}

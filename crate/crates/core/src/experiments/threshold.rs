use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_csv, TrialRecord};
use crate::error::{Error, Result};

/// One line of the threshold CSV. The fit is repeated on every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub n: usize,
    pub sigma_threshold: f64,
    pub log_n: f64,
    pub log_sigma_threshold: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdFit {
    /// Least-squares slope of `log σ_threshold` against `log n`.
    pub slope: f64,
    pub intercept: f64,
    pub rows: Vec<ThresholdRow>,
}

/// For each `n`, the `σ` at which the mean `frob_dist_scaled` first rises
/// through `level`, interpolated linearly between grid points, followed by a
/// power-law fit across `n`.
pub fn threshold_regression(records: &[TrialRecord], level: f64) -> Result<ThresholdFit> {
    if !level.is_finite() {
        return Err(Error::invalid(format!(
            "crossing level must be finite, got {level}"
        )));
    }
    if let Some(r) = records.iter().find(|r| r.solver != records[0].solver) {
        return Err(Error::invalid(format!(
            "records mix solvers {} and {}",
            records[0].solver, r.solver
        )));
    }
    // n -> sigma bits -> (sum, count); nonnegative floats sort like their bits.
    let mut cells: BTreeMap<usize, BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    for r in records {
        let cell = cells
            .entry(r.n)
            .or_default()
            .entry(r.sigma.to_bits())
            .or_default();
        cell.0 += r.frob_dist_scaled;
        cell.1 += 1;
    }
    if cells.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least two distinct n for a slope, got {}",
            cells.len()
        )));
    }

    let mut thresholds = Vec::new();
    let mut missing = Vec::new();
    for (&n, by_sigma) in &cells {
        let curve: Vec<(f64, f64)> = by_sigma
            .iter()
            .map(|(&bits, &(sum, count))| (f64::from_bits(bits), sum / count as f64))
            .collect();
        match first_crossing(&curve, level) {
            Some(s) => thresholds.push((n, s)),
            None => missing.push(n),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCrossing(missing));
    }

    let xs: Vec<f64> = thresholds.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = thresholds.iter().map(|&(_, s)| s.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let rows = thresholds
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(&(n, s), (&x, &y))| ThresholdRow {
            n,
            sigma_threshold: s,
            log_n: x,
            log_sigma_threshold: y,
            slope,
            intercept,
        })
        .collect();
    Ok(ThresholdFit {
        slope,
        intercept,
        rows,
    })
}

pub fn write_threshold_csv(path: &Path, fit: &ThresholdFit) -> Result<()> {
    write_csv(path, &fit.rows, None)
}

/// `curve` is sorted by `σ`. A curve that starts at or above `level` has no
/// bracketing pair and counts as missing.
fn first_crossing(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((s0, m0), (s1, m1)) = (w[0], w[1]);
        (m0 < level && m1 >= level).then(|| s0 + (level - m0) * (s1 - s0) / (m1 - m0))
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

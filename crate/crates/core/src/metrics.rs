//! Reconstruction distances and clustering scores.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// Scores for one method on one series.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReconstructionReport {
    pub euclid: f64,
    pub mse: f64,
    pub dtw: f64,
    pub euclid_diff: f64,
    pub dtw_diff: f64,
    pub tau_c: f64,
    pub tau_d: f64,
    pub k: usize,
    pub n: usize,
    pub runtime_ms: f64,
    pub dist_count: u64,
}

impl ReconstructionReport {
    /// Computes all distances between `original` and `reconstruction`.
    pub fn score(original: &TimeSeries, reconstruction: &TimeSeries, n: usize, k: usize) -> Result<Self> {
        let (tau_c, tau_d) = rates(n, original.steps(), k)?;
        let d_orig = difference(original)?;
        let d_rec = difference(reconstruction)?;
        Ok(Self {
            euclid: euclid(original, reconstruction)?,
            mse: mse(original, reconstruction)?,
            dtw: dtw(original, reconstruction)?,
            euclid_diff: euclid(&d_orig, &d_rec)?,
            dtw_diff: dtw(&d_orig, &d_rec)?,
            tau_c,
            tau_d,
            k,
            n,
            runtime_ms: 0.0,
            dist_count: 0,
        })
    }
}

fn same_len(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

fn sum_sq(a: &TimeSeries, b: &TimeSeries) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclid(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    same_len(a, b)?;
    Ok(sum_sq(a, b).sqrt())
}

pub fn mse(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    same_len(a, b)?;
    Ok(sum_sq(a, b) / a.len() as f64)
}

/// Dynamic time warping with squared local cost and no window; returns the
/// square root of the optimal accumulated cost.
pub fn dtw(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    // keep the shorter series along the rolling row
    let (long, short) = if a.len() >= b.len() { (a.values(), b.values()) } else { (b.values(), a.values()) };
    let m = short.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in long {
        curr[0] = f64::INFINITY;
        for j in 1..=m {
            let cost = (x - short[j - 1]).powi(2);
            curr[j] = cost + prev[j - 1].min(prev[j]).min(curr[j - 1]);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m].sqrt())
}

/// First differences; one value shorter than the input.
pub fn difference(series: &TimeSeries) -> Result<TimeSeries> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            required: 2,
            actual: series.len(),
        });
    }
    TimeSeries::new(series.values().windows(2).map(|w| w[1] - w[0]).collect())
}

fn comb2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index of two labelings.
///
/// When both partitions are trivial in the same way (the denominator
/// vanishes) the partitions agree and 1 is returned.
pub fn adjusted_rand(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::LengthMismatch {
            expected: labels_a.len(),
            actual: labels_b.len(),
        });
    }
    if labels_a.len() < 2 {
        return Err(Error::invalid("labels", "at least two items are required"));
    }
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
        *cells.entry((a, b)).or_default() += 1;
    }
    let index: f64 = cells.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = sum_a * sum_b / comb2(labels_a.len());
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Compression rate `n/N` and digitization rate `k/n`.
pub fn rates(n: usize, big_n: usize, k: usize) -> Result<(f64, f64)> {
    if n == 0 || n > big_n {
        return Err(Error::invalid("n", format!("need 1 <= n <= N, got n={n}, N={big_n}")));
    }
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok((n as f64 / big_n as f64, k as f64 / n as f64))
}

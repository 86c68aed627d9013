//! ABBA digitization: k-means++ on the scaled pieces, either at a fixed `k` or
//! at the smallest `k` whose clusters meet the variance tolerance.

use crate::error::{Error, Result};
use crate::model::{scale_pieces, Codebook, Piece, ScalingMeta, Symbol, TimeSeries};
use crate::pipeline::{assemble_model, build_codebook, prepare, FabbaConfig, FabbaModel};

use super::kmeans::{kmeans_pp_with, KMeansOptions, KMeansResult};

#[derive(Clone, Debug)]
pub struct AbbaDigitization {
    pub labels: Vec<usize>,
    pub codebook: Codebook,
    pub scaling: ScalingMeta,
    /// Number of clusters requested from k-means.
    pub k: usize,
    pub kmeans: KMeansResult,
}

impl AbbaDigitization {
    pub fn symbols(&self) -> Vec<Symbol> {
        self.labels.iter().map(|&l| Symbol(l as u32)).collect()
    }
}

/// Largest per-cluster variance of the unscaled lengths and increments.
pub fn cluster_variances(pieces: &[Piece], labels: &[usize], k: usize) -> (f64, f64) {
    let mut means = vec![(0.0f64, 0.0f64); k];
    let mut counts = vec![0usize; k];
    for (p, &l) in pieces.iter().zip(labels) {
        means[l].0 += p.len as f64;
        means[l].1 += p.inc;
        counts[l] += 1;
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        if c > 0 {
            m.0 /= c as f64;
            m.1 /= c as f64;
        }
    }
    let mut sums = vec![(0.0f64, 0.0f64); k];
    for (p, &l) in pieces.iter().zip(labels) {
        sums[l].0 += (p.len as f64 - means[l].0).powi(2);
        sums[l].1 += (p.inc - means[l].1).powi(2);
    }
    sums.iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .fold((0.0f64, 0.0f64), |(vl, vi), (s, &c)| {
            (vl.max(s.0 / c as f64), vi.max(s.1 / c as f64))
        })
}

/// `max(scl·Var_len, Var_inc) <= tol_s²`.
pub fn satisfies_tolerance(pieces: &[Piece], labels: &[usize], k: usize, scl: f64, tol_s: f64) -> bool {
    let (var_len, var_inc) = cluster_variances(pieces, labels, k);
    (scl * var_len).max(var_inc) <= tol_s * tol_s
}

fn digitize_at(
    pieces: &[Piece],
    points: &[[f64; 2]],
    scaling: ScalingMeta,
    k: usize,
    seed: u64,
    opts: KMeansOptions,
) -> Result<AbbaDigitization> {
    let kmeans = kmeans_pp_with(points, k, seed, opts)?;
    let codebook = build_codebook(pieces, &kmeans.labels, k)?;
    Ok(AbbaDigitization {
        labels: kmeans.labels.clone(),
        codebook,
        scaling,
        k,
        kmeans,
    })
}

fn scaled(pieces: &[Piece], scl: f64) -> Result<(Vec<[f64; 2]>, ScalingMeta)> {
    let (pts, meta) = scale_pieces(pieces, scl)?;
    Ok((pts.iter().map(|p| p.coords()).collect(), meta))
}

/// k-means++ digitization at exactly `k` clusters.
pub fn abba_digitize_k(pieces: &[Piece], k: usize, scl: f64, seed: u64) -> Result<AbbaDigitization> {
    let (points, meta) = scaled(pieces, scl)?;
    digitize_at(pieces, &points, meta, k, seed, KMeansOptions::default())
}

/// Scans `k = 1, 2, ...` and returns the first clustering that meets the
/// variance tolerance `tol_s`.
pub fn abba_digitize(pieces: &[Piece], tol_s: f64, scl: f64, seed: u64) -> Result<AbbaDigitization> {
    if !(tol_s.is_finite() && tol_s > 0.0) {
        return Err(Error::invalid("tol_s", format!("must be finite and > 0, got {tol_s}")));
    }
    let (points, meta) = scaled(pieces, scl)?;
    let n = pieces.len();
    for k in 1..n {
        let d = digitize_at(pieces, &points, meta, k, seed, KMeansOptions::default())?;
        if satisfies_tolerance(pieces, &d.labels, k, scl, tol_s) {
            return Ok(d);
        }
    }
    digitize_at(pieces, &points, meta, n, seed, KMeansOptions::default())
}

/// Full ABBA transform with the number of symbols fixed to `k`.
pub fn abba_transform_k(series: &TimeSeries, cfg: &FabbaConfig, k: usize, seed: u64) -> Result<FabbaModel> {
    let (work, pieces, m, s) = prepare(series, cfg)?;
    let d = abba_digitize_k(&pieces, k, cfg.scl, seed)?;
    assemble_model(
        d.symbols(),
        d.codebook,
        d.scaling,
        work.first(),
        cfg.normalize.then_some((m, s)),
        work.steps(),
        0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::fabba_inverse;

    #[test]
    fn identical_pieces_need_one_cluster() {
        let pieces = vec![Piece { len: 3, inc: 1.5 }; 8];
        let d = abba_digitize(&pieces, 0.1, 1.0, 0).unwrap();
        assert_eq!(d.k, 1);
    }

    #[test]
    fn vanishing_tolerance_needs_singletons() {
        let pieces: Vec<Piece> = (1..=6).map(|i| Piece { len: i, inc: i as f64 * 0.7 - 2.0 }).collect();
        let d = abba_digitize(&pieces, 1e-9, 1.0, 0).unwrap();
        assert_eq!(d.k, 6);
    }

    #[test]
    fn two_blobs_stop_at_two() {
        // increments at ±v around two levels, lengths constant: within-blob
        // variance of inc is exactly 0.01
        let mut pieces = Vec::new();
        for &level in &[-5.0, 5.0] {
            for s in [-0.1, 0.1, -0.1, 0.1] {
                pieces.push(Piece { len: 4, inc: level + s });
            }
        }
        let tol_s = 0.0101f64.sqrt();
        let d = abba_digitize(&pieces, tol_s, 1.0, 3).unwrap();
        assert_eq!(d.k, 2);
        assert!(satisfies_tolerance(&pieces, &d.labels, 2, 1.0, tol_s));
        assert!(!satisfies_tolerance(&pieces, &[0; 8], 1, 1.0, tol_s));
        let (vl, vi) = cluster_variances(&pieces, &d.labels, 2);
        assert_eq!(vl, 0.0);
        assert!((vi - 0.01).abs() < 1e-12);
    }

    #[test]
    fn fixed_k_model_reconstructs_full_length() {
        let s = TimeSeries::new((0..400).map(|i| (i as f64 / 15.0).sin()).collect()).unwrap();
        let cfg = FabbaConfig::new(0.05, 0.5);
        let m = abba_transform_k(&s, &cfg, 4, 1).unwrap();
        assert!(m.k() <= 4);
        assert_eq!(fabba_inverse(&m).unwrap().len(), s.len());
    }

    #[test]
    fn bad_tolerance() {
        assert!(abba_digitize(&[Piece { len: 1, inc: 0.0 }], 0.0, 1.0, 0).is_err());
    }
}

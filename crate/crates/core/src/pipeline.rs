//! End-to-end symbolic transform and its inverse.
//!
//! Forward: compression → scaling → aggregation → one symbol per piece.
//! Backward: symbols → group centers → integer lengths → polygonal chain.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate, AggregationResult, SortStrategy};
use crate::compression::{compress, inverse_compress, CompressionConfig};
use crate::error::{Error, Result};
use crate::model::{
    mean, scale_pieces, std_dev, Center, Codebook, Piece, ScalingMeta, Symbol, SymbolicSeries, TimeSeries,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FabbaConfig {
    pub tol: f64,
    pub alpha: f64,
    pub scl: f64,
    pub sorting: SortStrategy,
    /// Z-normalize the series before compression.
    pub normalize: bool,
    pub max_len: Option<usize>,
}

impl FabbaConfig {
    pub fn new(tol: f64, alpha: f64) -> Self {
        Self {
            tol,
            alpha,
            scl: 1.0,
            sorting: SortStrategy::Norm2,
            normalize: false,
            max_len: None,
        }
    }

    pub fn scl(mut self, scl: f64) -> Self {
        self.scl = scl;
        self
    }

    pub fn sorting(mut self, sorting: SortStrategy) -> Self {
        self.sorting = sorting;
        self
    }

    pub fn normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn max_len(mut self, max_len: Option<usize>) -> Self {
        self.max_len = max_len;
        self
    }

    fn compression(&self) -> Result<CompressionConfig> {
        let cfg = CompressionConfig::new(self.tol)?;
        match self.max_len {
            Some(m) => cfg.with_max_len(m),
            None => Ok(cfg),
        }
    }
}

/// A fitted symbolic representation of one series.
#[derive(Clone, Debug, PartialEq)]
pub struct FabbaModel {
    pub symbolic: SymbolicSeries,
    /// Number of pieces `n`.
    pub pieces_count: usize,
    /// Distance evaluations spent during aggregation.
    pub dist_count: u64,
    /// Number of time steps `N` of the encoded series.
    pub series_len: usize,
}

impl FabbaModel {
    pub fn new(symbolic: SymbolicSeries, series_len: usize, dist_count: u64) -> Result<Self> {
        let pieces_count = symbolic.symbols().len();
        if pieces_count == 0 || pieces_count > series_len {
            return Err(Error::invalid(
                "model",
                format!("{pieces_count} symbols cannot describe a series of {series_len} steps"),
            ));
        }
        Ok(Self {
            symbolic,
            pieces_count,
            dist_count,
            series_len,
        })
    }

    /// Number of distinct symbols `k`.
    pub fn k(&self) -> usize {
        self.symbolic.alphabet_size()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            symbols: self.symbolic.symbols().iter().map(|s| s.id()).collect(),
            codebook: self
                .symbolic
                .codebook()
                .iter()
                .map(|(s, c)| (s.id(), [c.len, c.inc]))
                .collect(),
            scaling: *self.symbolic.scaling(),
            series_len: self.series_len,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses a model document. The distance counter is not stored and
    /// comes back as zero.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        let mut codebook = Codebook::new();
        for (id, [len, inc]) in doc.codebook {
            codebook.insert(Symbol(id), Center { len, inc })?;
        }
        let symbols = doc.symbols.into_iter().map(Symbol).collect();
        let symbolic = SymbolicSeries::new(symbols, codebook, doc.scaling)?;
        Self::new(symbolic, doc.series_len, 0)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    symbols: Vec<u32>,
    codebook: BTreeMap<u32, [f64; 2]>,
    scaling: ScalingMeta,
    series_len: usize,
}

/// Result of grouping a piece sequence.
#[derive(Clone, Debug)]
pub struct Digitization {
    pub symbols: Vec<Symbol>,
    pub codebook: Codebook,
    /// Scaling used; `start_value` and normalization fields are unset.
    pub scaling: ScalingMeta,
    pub aggregation: AggregationResult,
}

/// Codebook of unscaled member means for a labelled piece sequence.
pub fn build_codebook(pieces: &[Piece], labels: &[usize], k: usize) -> Result<Codebook> {
    if labels.len() != pieces.len() {
        return Err(Error::LengthMismatch {
            expected: pieces.len(),
            actual: labels.len(),
        });
    }
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
    for (p, &g) in pieces.iter().zip(labels) {
        let entry = sums.get_mut(g).ok_or(Error::LabelOutOfRange { label: g, groups: k })?;
        entry.0 += p.len as f64;
        entry.1 += p.inc;
        entry.2 += 1;
    }
    let mut codebook = Codebook::new();
    for (g, (len, inc, count)) in sums.into_iter().enumerate() {
        if count == 0 {
            continue;
        }
        let c = count as f64;
        codebook.insert(
            Symbol(g as u32),
            Center {
                len: len / c,
                inc: inc / c,
            },
        )?;
    }
    Ok(codebook)
}

/// Groups pieces with the sorted aggregation and assigns one symbol per piece.
pub fn digitize(pieces: &[Piece], alpha: f64, scl: f64, sorting: SortStrategy) -> Result<Digitization> {
    let (points, scaling) = scale_pieces(pieces, scl)?;
    let aggregation = aggregate(&points, alpha, sorting)?;
    let codebook = build_codebook(pieces, &aggregation.labels, aggregation.k())?;
    let symbols = aggregation.labels.iter().map(|&g| Symbol(g as u32)).collect();
    Ok(Digitization {
        symbols,
        codebook,
        scaling,
        aggregation,
    })
}

/// Z-normalization parameters `(mean, std)`; a zero std is replaced by 1.
pub fn normalization(values: &[f64]) -> Result<(f64, f64)> {
    let std = std_dev(values)?;
    Ok((mean(values), if std == 0.0 { 1.0 } else { std }))
}

/// Z-normalizes a series, returning the parameters used.
pub fn z_normalize(series: &TimeSeries) -> Result<(TimeSeries, f64, f64)> {
    let (m, s) = normalization(series.values())?;
    let values = series.values().iter().map(|v| (v - m) / s).collect();
    Ok((TimeSeries::new(values)?, m, s))
}

/// Applies normalization (when configured) and compression.
pub fn prepare(series: &TimeSeries, cfg: &FabbaConfig) -> Result<(TimeSeries, Vec<Piece>, f64, f64)> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            required: 2,
            actual: series.len(),
        });
    }
    let (work, m, s) = if cfg.normalize {
        z_normalize(series)?
    } else {
        (series.clone(), 0.0, 1.0)
    };
    let pieces = compress(&work, &cfg.compression()?)?;
    Ok((work, pieces, m, s))
}

/// Builds a model from already-grouped pieces.
pub fn assemble_model(
    symbols: Vec<Symbol>,
    codebook: Codebook,
    mut scaling: ScalingMeta,
    start_value: f64,
    normalized: Option<(f64, f64)>,
    series_len: usize,
    dist_count: u64,
) -> Result<FabbaModel> {
    scaling.start_value = start_value;
    match normalized {
        Some((m, s)) => {
            scaling.normalize = true;
            scaling.mean = m;
            scaling.std = s;
        }
        None => {
            scaling.normalize = false;
            scaling.mean = 0.0;
            scaling.std = 1.0;
        }
    }
    FabbaModel::new(SymbolicSeries::new(symbols, codebook, scaling)?, series_len, dist_count)
}

/// Full forward transform.
pub fn fabba_transform(series: &TimeSeries, cfg: &FabbaConfig) -> Result<FabbaModel> {
    let (work, pieces, m, s) = prepare(series, cfg)?;
    let d = digitize(&pieces, cfg.alpha, cfg.scl, cfg.sorting)?;
    assemble_model(
        d.symbols,
        d.codebook,
        d.scaling,
        work.first(),
        cfg.normalize.then_some((m, s)),
        work.steps(),
        d.aggregation.dist_count,
    )
}

/// Replaces each symbol by its group center `(len, inc)`.
pub fn inverse_digitize(symbolic: &SymbolicSeries) -> Result<Vec<(f64, f64)>> {
    symbolic
        .symbols()
        .iter()
        .map(|&s| {
            symbolic
                .codebook()
                .get(s)
                .map(|c| (c.len, c.inc))
                .ok_or(Error::UnknownSymbol(s.id()))
        })
        .collect()
}

/// Rounds real lengths to integers with a carried rounding error so that the
/// lengths add up to `target_total` exactly. Increments pass through.
pub fn quantize_lengths(tuples: &[(f64, f64)], target_total: usize) -> Result<Vec<Piece>> {
    if tuples.is_empty() || tuples.len() > target_total {
        return Err(Error::CannotQuantize {
            pieces: tuples.len(),
            target: target_total,
        });
    }
    if let Some(index) = tuples.iter().position(|t| !(t.0.is_finite() && t.0 > 0.0)) {
        return Err(Error::InvalidPiece { index });
    }
    let mut carry = 0.0;
    let mut lens: Vec<usize> = tuples
        .iter()
        .map(|&(len, _)| {
            let q = (len + carry).round().max(1.0);
            carry += len - q;
            q as usize
        })
        .collect();

    let total: usize = lens.iter().sum();
    if total < target_total {
        *lens.last_mut().unwrap() += target_total - total;
    } else {
        // Shrink from the end; earlier pieces only absorb what the last
        // one cannot give up without dropping below length 1.
        let mut excess = total - target_total;
        for len in lens.iter_mut().rev() {
            if excess == 0 {
                break;
            }
            let give = excess.min(*len - 1);
            *len -= give;
            excess -= give;
        }
    }
    Ok(lens
        .into_iter()
        .zip(tuples)
        .map(|(len, &(_, inc))| Piece { len, inc })
        .collect())
}

/// Reconstructs a series of exactly `series_len + 1` values from a model.
pub fn fabba_inverse(model: &FabbaModel) -> Result<TimeSeries> {
    let centers = inverse_digitize(&model.symbolic)?;
    let pieces = quantize_lengths(&centers, model.series_len)?;
    let meta = model.symbolic.scaling();
    let chain = inverse_compress(meta.start_value, &pieces)?;
    if meta.normalize {
        TimeSeries::new(chain.values().iter().map(|v| v * meta.std + meta.mean).collect())
    } else {
        Ok(chain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::CompressionConfig;
    use proptest::prelude::*;

    fn series(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v).unwrap()
    }

    #[test]
    fn ramp_is_one_symbol() {
        let s = series((0..=10).map(f64::from).collect());
        let m = fabba_transform(&s, &FabbaConfig::new(0.1, 0.5)).unwrap();
        assert_eq!(m.pieces_count, 1);
        assert_eq!(m.k(), 1);
        assert_eq!(m.symbolic.codebook().get(Symbol(0)), Some(Center { len: 10.0, inc: 10.0 }));
        assert_eq!(fabba_inverse(&m).unwrap(), s);
    }

    #[test]
    fn alternating_steps_give_two_alternating_symbols() {
        let s = series((0..40).map(|i| (i % 2) as f64).collect());
        let m = fabba_transform(&s, &FabbaConfig::new(0.01, 0.5)).unwrap();
        assert_eq!(m.pieces_count, 39);
        assert_eq!(m.k(), 2);
        let syms = m.symbolic.symbols();
        assert!(syms.windows(2).all(|w| w[0] != w[1]));
        assert_eq!(m.symbolic.codebook().get(syms[0]).unwrap().inc, 1.0);
        assert_eq!(m.symbolic.codebook().get(syms[1]).unwrap().inc, -1.0);
    }

    #[test]
    fn inverse_digitize_lookup() {
        let mut cb = Codebook::new();
        cb.insert(Symbol(0), Center { len: 2.0, inc: 1.0 }).unwrap();
        cb.insert(Symbol(1), Center { len: 3.0, inc: -1.0 }).unwrap();
        let meta = scale_pieces(&[Piece { len: 1, inc: 0.0 }], 1.0).unwrap().1;
        let s = SymbolicSeries::new(vec![Symbol(0), Symbol(0), Symbol(1)], cb.clone(), meta).unwrap();
        assert_eq!(inverse_digitize(&s).unwrap(), vec![(2.0, 1.0), (2.0, 1.0), (3.0, -1.0)]);
        let one = SymbolicSeries::new(vec![Symbol(1)], cb, meta).unwrap();
        assert_eq!(inverse_digitize(&one).unwrap(), vec![(3.0, -1.0)]);
    }

    #[test]
    fn unknown_symbol_is_rejected() {
        let mut cb = Codebook::new();
        cb.insert(Symbol(0), Center { len: 2.0, inc: 1.0 }).unwrap();
        let meta = scale_pieces(&[Piece { len: 1, inc: 0.0 }], 1.0).unwrap().1;
        assert!(matches!(
            SymbolicSeries::new(vec![Symbol(3)], cb, meta),
            Err(Error::UnknownSymbol(3))
        ));
    }

    #[test]
    fn quantize_examples() {
        let q = quantize_lengths(&[(2.4, 0.0), (2.4, 1.0), (2.4, 2.0)], 7).unwrap();
        assert_eq!(q.iter().map(|p| p.len).collect::<Vec<_>>(), vec![2, 3, 2]);
        assert_eq!(q.iter().map(|p| p.inc).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0]);

        let exact = quantize_lengths(&[(3.0, 1.0), (1.0, 2.0), (5.0, 3.0)], 9).unwrap();
        assert_eq!(exact.iter().map(|p| p.len).collect::<Vec<_>>(), vec![3, 1, 5]);

        assert_eq!(quantize_lengths(&[(0.6, 4.0)], 1).unwrap(), vec![Piece { len: 1, inc: 4.0 }]);
        assert!(matches!(
            quantize_lengths(&[(1.0, 0.0), (1.0, 0.0)], 1),
            Err(Error::CannotQuantize { .. })
        ));
    }

    #[test]
    fn quantize_shrinks_earlier_pieces_when_last_is_minimal() {
        let q = quantize_lengths(&[(3.6, 0.0), (1.0, 0.0)], 3).unwrap();
        assert_eq!(q.iter().map(|p| p.len).collect::<Vec<_>>(), vec![2, 1]);
    }

    proptest! {
        #[test]
        fn quantize_always_hits_target(lens in prop::collection::vec(0.5f64..20.0, 1..50), slack in 0usize..30) {
            let tuples: Vec<(f64, f64)> = lens.iter().map(|&l| (l, 0.0)).collect();
            let target = (lens.iter().sum::<f64>().round() as usize).max(lens.len()) + slack;
            let q = quantize_lengths(&tuples, target).unwrap();
            prop_assert_eq!(q.iter().map(|p| p.len).sum::<usize>(), target);
            prop_assert!(q.iter().all(|p| p.len >= 1));
        }

        #[test]
        fn output_length_is_series_len_plus_one(
            values in prop::collection::vec(-10.0f64..10.0, 2..200),
            tol in 0.01f64..2.0,
            alpha in 0.01f64..2.0,
            normalize in any::<bool>(),
        ) {
            let s = series(values);
            let cfg = FabbaConfig::new(tol, alpha).normalize(normalize);
            let m = fabba_transform(&s, &cfg).unwrap();
            prop_assert!(m.k() <= m.pieces_count);
            let r = fabba_inverse(&m).unwrap();
            prop_assert_eq!(r.len(), s.len());
        }

        #[test]
        fn json_round_trip_preserves_every_bit(
            values in prop::collection::vec(-1e3f64..1e3, 2..150),
            alpha in 0.01f64..1.0,
        ) {
            let m = fabba_transform(&series(values), &FabbaConfig::new(0.1, alpha).normalize(true)).unwrap();
            let text = m.to_json().unwrap();
            let back = FabbaModel::from_json(&text).unwrap();
            prop_assert_eq!(back.to_json().unwrap(), text);
            prop_assert_eq!(fabba_inverse(&back).unwrap(), fabba_inverse(&m).unwrap());
        }
    }

    fn min_pairwise_scaled_distance(pieces: &[Piece], scl: f64) -> f64 {
        let (pts, _) = scale_pieces(pieces, scl).unwrap();
        let mut best = f64::INFINITY;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let d = pts[a].dist(&pts[b]);
                if d > 0.0 {
                    best = best.min(d);
                }
            }
        }
        best
    }

    #[test]
    fn tiny_alpha_is_lossless() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let mut acc = 0.0;
            let s = series(
                (0..300)
                    .map(|_| {
                        acc += rng.random_range(-1.0..1.0);
                        acc
                    })
                    .collect(),
            );
            let pieces = compress(&s, &CompressionConfig::new(0.2).unwrap()).unwrap();
            let alpha = min_pairwise_scaled_distance(&pieces, 1.0) / 2.0;
            let m = fabba_transform(&s, &FabbaConfig::new(0.2, alpha)).unwrap();
            let tuples = inverse_digitize(&m.symbolic).unwrap();
            for (t, p) in tuples.iter().zip(&pieces) {
                assert_eq!(*t, (p.len as f64, p.inc));
            }
            let direct = inverse_compress(s.first(), &pieces).unwrap();
            assert_eq!(fabba_inverse(&m).unwrap(), direct);
        }
    }

    #[test]
    fn normalized_model_round_trips_scale() {
        let s = series((0..200).map(|i| 100.0 + 30.0 * (i as f64 / 10.0).sin()).collect());
        let m = fabba_transform(&s, &FabbaConfig::new(0.05, 0.01).normalize(true)).unwrap();
        assert!(m.symbolic.scaling().normalize);
        let r = fabba_inverse(&m).unwrap();
        assert!((r.first() - s.first()).abs() < 1e-9);
        let err = r.values().iter().zip(s.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 10.0, "max error {err}");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let s = series((0..120).map(|i| ((i * 7) % 13) as f64 * 0.37 - 1.1).collect());
        let m = fabba_transform(&s, &FabbaConfig::new(0.1, 0.3).normalize(true)).unwrap();
        let text = m.to_json().unwrap();
        let back = FabbaModel::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(back.symbolic, m.symbolic);
        assert_eq!(fabba_inverse(&back).unwrap(), fabba_inverse(&m).unwrap());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["symbols", "codebook", "scaling", "series_len"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        for key in ["sigma_len", "sigma_inc", "scl", "start_value", "normalize", "mean", "std"] {
            assert!(v["scaling"].get(key).is_some(), "missing scaling.{key}");
        }
    }

    #[test]
    fn transform_is_deterministic() {
        let s = series((0..500).map(|i| (i as f64 * 0.05).sin() + 0.1 * (i as f64 * 0.9).cos()).collect());
        for sorting in SortStrategy::ALL {
            let cfg = FabbaConfig::new(0.05, 0.2).sorting(sorting);
            assert_eq!(fabba_transform(&s, &cfg).unwrap(), fabba_transform(&s, &cfg).unwrap());
        }
    }
}

//! Shared domain types: series, pieces, scaled points, and the symbolic
//! representation with its codebook.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered sequence of finite real values `t_0..t_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    name: Option<String>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, name: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Number of stored values, `N + 1`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a series holds at least one value.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of time steps `N`.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }
}

/// One segment of a polygonal chain: `len` time steps, `inc` value change.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub len: usize,
    pub inc: f64,
}

impl Piece {
    pub fn new(len: usize, inc: f64) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidPiece { index: 0 });
        }
        Ok(Self { len, inc })
    }
}

/// A piece mapped into the 2-d space where grouping happens.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledPoint {
    pub x: f64,
    pub y: f64,
    /// Position of the originating piece in the unsorted sequence.
    pub origin_index: usize,
}

impl ScaledPoint {
    pub fn new(x: f64, y: f64, origin_index: usize) -> Self {
        Self { x, y, origin_index }
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn dist(&self, other: &ScaledPoint) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Everything needed to undo scaling and normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingMeta {
    pub sigma_len: f64,
    pub sigma_inc: f64,
    pub scl: f64,
    /// First value of the (possibly normalized) series.
    pub start_value: f64,
    pub normalize: bool,
    pub mean: f64,
    pub std: f64,
}

impl ScalingMeta {
    /// Maps a scaled `(x, y)` back to `(len, inc)`.
    ///
    /// With `scl == 0` the length coordinate carries no information and
    /// `None` is returned for it.
    pub fn unscale(&self, x: f64, y: f64) -> (Option<f64>, f64) {
        let len = (self.scl != 0.0).then(|| x * self.sigma_len / self.scl);
        (len, y * self.sigma_inc)
    }
}

/// Symbol identifier. Ids are assigned in group-formation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub u32);

impl Symbol {
    pub fn id(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&symbol_label(self.0))
    }
}

/// Display label for a rank: 0..25 map to 'a'..'z', larger values to `s<id>`.
pub fn symbol_label(id: u32) -> String {
    if id < 26 {
        char::from(b'a' + id as u8).to_string()
    } else {
        format!("s{id}")
    }
}

/// Unscaled group mean `(len, inc)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Center {
    pub len: f64,
    pub inc: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Codebook {
    entries: BTreeMap<Symbol, Center>,
}

impl Codebook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, symbol: Symbol, center: Center) -> Result<()> {
        if !(center.len.is_finite() && center.len > 0.0 && center.inc.is_finite()) {
            return Err(Error::invalid(
                "center",
                format!("center ({}, {}) for symbol {} is not valid", center.len, center.inc, symbol.0),
            ));
        }
        self.entries.insert(symbol, center);
        Ok(())
    }

    pub fn get(&self, symbol: Symbol) -> Option<Center> {
        self.entries.get(&symbol).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, Center)> + '_ {
        self.entries.iter().map(|(s, c)| (*s, *c))
    }
}

/// A symbol string together with the data required to invert it.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicSeries {
    symbols: Vec<Symbol>,
    codebook: Codebook,
    scaling: ScalingMeta,
}

impl SymbolicSeries {
    pub fn new(symbols: Vec<Symbol>, codebook: Codebook, scaling: ScalingMeta) -> Result<Self> {
        if codebook.is_empty() {
            return Err(Error::invalid("codebook", "at least one entry is required"));
        }
        if let Some(missing) = symbols.iter().find(|s| codebook.get(**s).is_none()) {
            return Err(Error::UnknownSymbol(missing.0));
        }
        Ok(Self {
            symbols,
            codebook,
            scaling,
        })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn scaling(&self) -> &ScalingMeta {
        &self.scaling
    }

    /// Number of distinct symbols `k`.
    pub fn alphabet_size(&self) -> usize {
        self.codebook.len()
    }

    /// Maps internal ids to display ranks: most frequent symbol first,
    /// ties broken by formation order.
    pub fn display_ranks(&self) -> BTreeMap<Symbol, u32> {
        let mut counts: BTreeMap<Symbol, usize> = self.codebook.iter().map(|(s, _)| (s, 0)).collect();
        for s in &self.symbols {
            *counts.entry(*s).or_insert(0) += 1;
        }
        let mut order: Vec<(Symbol, usize)> = counts.into_iter().collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        order
            .into_iter()
            .enumerate()
            .map(|(rank, (s, _))| (s, rank as u32))
            .collect()
    }

    pub fn display_symbols(&self) -> Vec<String> {
        let ranks = self.display_ranks();
        self.symbols.iter().map(|s| symbol_label(ranks[s])).collect()
    }

    /// Concatenated display string; space-separated once the alphabet
    /// outgrows single letters.
    pub fn display_string(&self) -> String {
        let labels = self.display_symbols();
        if self.alphabet_size() <= 26 {
            labels.concat()
        } else {
            labels.join(" ")
        }
    }
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySequence);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Scales pieces to `(scl·len/σ_len, inc/σ_inc)`. A zero σ is replaced by 1.
///
/// The returned [`ScalingMeta`] has `start_value = 0` and no normalization;
/// callers that know the series fill those in.
pub fn scale_pieces(pieces: &[Piece], scl: f64) -> Result<(Vec<ScaledPoint>, ScalingMeta)> {
    if pieces.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(scl.is_finite() && scl >= 0.0) {
        return Err(Error::invalid("scl", format!("must be finite and >= 0, got {scl}")));
    }
    let lens: Vec<f64> = pieces.iter().map(|p| p.len as f64).collect();
    let incs: Vec<f64> = pieces.iter().map(|p| p.inc).collect();
    let guard = |s: f64| if s == 0.0 { 1.0 } else { s };
    let sigma_len = guard(std_dev(&lens)?);
    let sigma_inc = guard(std_dev(&incs)?);

    let points = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let x = if scl == 0.0 { 0.0 } else { scl * p.len as f64 / sigma_len };
            ScaledPoint::new(x, p.inc / sigma_inc, i)
        })
        .collect();
    let meta = ScalingMeta {
        sigma_len,
        sigma_inc,
        scl,
        start_value: 0.0,
        normalize: false,
        mean: 0.0,
        std: 1.0,
    };
    Ok((points, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn std_dev_examples() {
        assert_eq!(std_dev(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(std_dev(&[0.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(std_dev(&[]), Err(Error::EmptySequence)));
    }

    #[test]
    fn std_dev_matches_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        // two-pass oracle, accumulated in index order
        let mut m = 0.0;
        for v in &values {
            m += v;
        }
        m /= 100.0;
        let mut ss = 0.0;
        for v in &values {
            ss += (v - m).powi(2);
        }
        let oracle = (ss / 100.0).sqrt();
        let got = std_dev(&values).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn scale_equal_lengths_uses_guard() {
        let pieces = [Piece { len: 2, inc: 1.0 }, Piece { len: 2, inc: -1.0 }];
        let (pts, meta) = scale_pieces(&pieces, 1.0).unwrap();
        assert_eq!(meta.sigma_len, 1.0);
        assert_eq!(meta.sigma_inc, 1.0);
        assert_eq!((pts[0].x, pts[0].y), (2.0, 1.0));
        assert_eq!((pts[1].x, pts[1].y), (2.0, -1.0));
    }

    #[test]
    fn scale_hand_computed() {
        let pieces = [Piece { len: 1, inc: 0.0 }, Piece { len: 3, inc: 4.0 }];
        let (pts, meta) = scale_pieces(&pieces, 1.0).unwrap();
        assert_eq!((meta.sigma_len, meta.sigma_inc), (1.0, 2.0));
        assert_eq!((pts[0].x, pts[0].y), (1.0, 0.0));
        assert_eq!((pts[1].x, pts[1].y), (3.0, 2.0));
        assert_eq!(pts[1].origin_index, 1);
    }

    #[test]
    fn scl_zero_collapses_lengths() {
        let pieces = [
            Piece { len: 1, inc: 0.5 },
            Piece { len: 7, inc: 0.5 },
            Piece { len: 3, inc: -2.0 },
        ];
        let (pts, _) = scale_pieces(&pieces, 0.0).unwrap();
        assert!(pts.iter().all(|p| p.x == 0.0));
        assert_eq!(pts[0].coords(), pts[1].coords());
    }

    #[test]
    fn unscale_inverts_scaling() {
        let pieces = [
            Piece { len: 3, inc: 0.25 },
            Piece { len: 9, inc: -4.5 },
            Piece { len: 4, inc: 1.75 },
        ];
        let (pts, meta) = scale_pieces(&pieces, 0.7).unwrap();
        for (p, piece) in pts.iter().zip(&pieces) {
            let (len, inc) = meta.unscale(p.x, p.y);
            assert!((len.unwrap() - piece.len as f64).abs() < 1e-12);
            assert!((inc - piece.inc).abs() < 1e-12);
        }
    }

    #[test]
    fn time_series_rejects_bad_input() {
        assert!(matches!(TimeSeries::new(vec![]), Err(Error::EmptySequence)));
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn display_labels() {
        assert_eq!(symbol_label(0), "a");
        assert_eq!(symbol_label(25), "z");
        assert_eq!(symbol_label(26), "s26");
    }

    #[test]
    fn display_orders_by_frequency() {
        let mut cb = Codebook::new();
        cb.insert(Symbol(0), Center { len: 1.0, inc: 1.0 }).unwrap();
        cb.insert(Symbol(1), Center { len: 1.0, inc: -1.0 }).unwrap();
        let meta = scale_pieces(&[Piece { len: 1, inc: 1.0 }], 1.0).unwrap().1;
        let s = SymbolicSeries::new(vec![Symbol(0), Symbol(1), Symbol(1)], cb, meta).unwrap();
        assert_eq!(s.display_string(), "baa");
    }
}

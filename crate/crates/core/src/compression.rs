//! Adaptive polygonal-chain compression and its exact inverse.
//!
//! A piece starting at knot `s` is extended greedily while the squared
//! deviation of the series from the straight line between the two knots stays
//! within `(len - 1)·tol²`.

use crate::error::{Error, Result};
use crate::model::{Piece, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionConfig {
    pub tol: f64,
    /// Upper bound on the length of a single piece. `None` means no cap.
    pub max_len: Option<usize>,
}

impl CompressionConfig {
    pub fn new(tol: f64) -> Result<Self> {
        let cfg = Self { tol, max_len: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_len(mut self, max_len: usize) -> Result<Self> {
        self.max_len = Some(max_len);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid("tol", format!("must be finite and > 0, got {}", self.tol)));
        }
        if self.max_len == Some(0) {
            return Err(Error::invalid("max_len", "must be at least 1"));
        }
        Ok(())
    }
}

/// Squared deviation of `values[start..=end]` from the chord joining its endpoints.
pub fn piece_residual(values: &[f64], start: usize, end: usize) -> f64 {
    let len = (end - start) as f64;
    let t0 = values[start];
    let slope = (values[end] - t0) / len;
    values[start..=end]
        .iter()
        .enumerate()
        .map(|(u, &t)| {
            let line = t0 + slope * u as f64;
            (line - t).powi(2)
        })
        .sum()
}

/// Running sums for the chord residual of a growing piece, in coordinates
/// shifted so the start knot sits at the origin.
struct RunningResidual {
    /// Σ u·d_u
    cross: f64,
    /// Σ d_u²
    square: f64,
}

impl RunningResidual {
    fn new() -> Self {
        Self {
            cross: 0.0,
            square: 0.0,
        }
    }

    fn push(&mut self, u: usize, d: f64) {
        self.cross += u as f64 * d;
        self.square += d * d;
    }

    /// Residual for a piece whose last shifted value `d_last` sits at offset `m`.
    fn residual(&self, m: usize, d_last: f64) -> f64 {
        let mf = m as f64;
        let slope = d_last / mf;
        let sum_u2 = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 6.0;
        (slope * slope * sum_u2 - 2.0 * slope * self.cross + self.square).max(0.0)
    }
}

/// Decides the bound for `values[start..=end]`. The running-sum value is used
/// unless it lands too close to the bound for cancellation to be ruled out.
fn within_bound(values: &[f64], start: usize, end: usize, running: &RunningResidual, bound: f64) -> bool {
    let m = end - start;
    let approx = running.residual(m, values[end] - values[start]);
    let scale = running.square.max(bound).max(f64::MIN_POSITIVE);
    if (approx - bound).abs() > 1e-9 * scale {
        approx <= bound
    } else {
        piece_residual(values, start, end) <= bound
    }
}

/// Compresses a series into a polygonal chain of pieces.
pub fn compress(series: &TimeSeries, cfg: &CompressionConfig) -> Result<Vec<Piece>> {
    cfg.validate()?;
    let values = series.values();
    if values.len() < 2 {
        return Err(Error::SeriesTooShort {
            required: 2,
            actual: values.len(),
        });
    }
    let last = values.len() - 1;
    let tol2 = cfg.tol * cfg.tol;
    let max_len = cfg.max_len.unwrap_or(last);

    let mut pieces = Vec::new();
    let mut start = 0;
    while start < last {
        let limit = last.min(start + max_len);
        let mut running = RunningResidual::new();
        let mut end = start + 1;
        running.push(1, values[end] - values[start]);
        while end < limit {
            let candidate = end + 1;
            let m = candidate - start;
            running.push(m, values[candidate] - values[start]);
            let bound = (m - 1) as f64 * tol2;
            if !within_bound(values, start, candidate, &running, bound) {
                break;
            }
            end = candidate;
        }
        pieces.push(Piece {
            len: end - start,
            inc: values[end] - values[start],
        });
        start = end;
    }
    Ok(pieces)
}

/// Rebuilds the polygonal chain from its first value and pieces.
pub fn inverse_compress(start_value: f64, pieces: &[Piece]) -> Result<TimeSeries> {
    if pieces.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(index) = pieces.iter().position(|p| p.len == 0) {
        return Err(Error::InvalidPiece { index });
    }
    let total: usize = pieces.iter().map(|p| p.len).sum();
    let mut out = Vec::with_capacity(total + 1);
    out.push(start_value);
    let mut knot = start_value;
    for p in pieces {
        let step = p.inc / p.len as f64;
        for u in 1..p.len {
            out.push(knot + step * u as f64);
        }
        knot += p.inc;
        out.push(knot);
    }
    TimeSeries::new(out)
}

/// Checks every piece against the compression bound on the original series.
pub fn residual_check(series: &TimeSeries, pieces: &[Piece], tol: f64) -> Result<bool> {
    let total: usize = pieces.iter().map(|p| p.len).sum();
    if total != series.steps() {
        return Err(Error::LengthMismatch {
            expected: series.steps(),
            actual: total,
        });
    }
    if let Some(index) = pieces.iter().position(|p| p.len == 0) {
        return Err(Error::InvalidPiece { index });
    }
    let values = series.values();
    let tol2 = tol * tol;
    let mut start = 0;
    for p in pieces {
        let end = start + p.len;
        if piece_residual(values, start, end) > (p.len - 1) as f64 * tol2 {
            return Ok(false);
        }
        start = end;
    }
    Ok(true)
}

//! SAX and 1d-SAX: segment means (and slopes) quantized against Gaussian
//! breakpoints after z-normalization.

use crate::error::{Error, Result};
use crate::model::TimeSeries;
use crate::pipeline::normalization;

use super::normal::gaussian_breakpoints;

/// Variance of the slope distribution for a segment of length `L` is
/// `SLOPE_VARIANCE / L`.
pub const SLOPE_VARIANCE: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SaxConfig {
    pub n_segments: usize,
    pub alphabet_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OneDSaxConfig {
    pub n_segments: usize,
    pub mean_alphabet: usize,
    pub slope_alphabet: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaxEncoding {
    pub symbols: Vec<usize>,
    pub mean: f64,
    pub std: f64,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneDSaxEncoding {
    /// `(mean cell, slope cell)` per segment.
    pub symbols: Vec<(usize, usize)>,
    pub mean: f64,
    pub std: f64,
    pub length: usize,
}

fn check_alphabet(name: &'static str, a: usize) -> Result<()> {
    if a < 2 {
        return Err(Error::invalid(name, format!("alphabet size must be at least 2, got {a}")));
    }
    Ok(())
}

fn check_segments(n_segments: usize, length: usize) -> Result<()> {
    if n_segments == 0 || n_segments > length {
        return Err(Error::invalid(
            "n_segments",
            format!("need 1 <= n_segments <= {length}, got {n_segments}"),
        ));
    }
    Ok(())
}

/// Half-open index ranges of `n_segments` near-equal segments; the leading
/// segments take one extra element each when the length does not divide.
pub fn segment_bounds(length: usize, n_segments: usize) -> Vec<(usize, usize)> {
    let base = length / n_segments;
    let extra = length % n_segments;
    let mut start = 0;
    (0..n_segments)
        .map(|i| {
            let end = start + base + usize::from(i < extra);
            let r = (start, end);
            start = end;
            r
        })
        .collect()
}

/// Cell of `v` among sorted breakpoints: the number of breakpoints `<= v`.
fn cell(breakpoints: &[f64], v: f64) -> usize {
    breakpoints.partition_point(|&b| b <= v)
}

/// Representative value of each cell of a standard normal split at
/// `breakpoints`: interior cells use their midpoint, outer cells extend the
/// neighbouring half-gap outwards. With a single breakpoint (two cells) the
/// half-normal means `±sqrt(2/π)` are used.
pub fn cell_levels(breakpoints: &[f64]) -> Vec<f64> {
    let b = breakpoints;
    match b.len() {
        0 => vec![0.0],
        1 => {
            let h = (2.0 / std::f64::consts::PI).sqrt();
            vec![b[0] - h, b[0] + h]
        }
        m => {
            let mut levels = Vec::with_capacity(m + 1);
            levels.push(b[0] - 0.5 * (b[1] - b[0]));
            levels.extend(b.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            levels.push(b[m - 1] + 0.5 * (b[m - 1] - b[m - 2]));
            levels
        }
    }
}

fn z_values(series: &TimeSeries) -> Result<(Vec<f64>, f64, f64)> {
    let (m, s) = normalization(series.values())?;
    Ok((series.values().iter().map(|v| (v - m) / s).collect(), m, s))
}

/// Quantizes already-normalized values.
pub fn sax_encode_normalized(values: &[f64], cfg: &SaxConfig) -> Result<Vec<usize>> {
    check_alphabet("alphabet_size", cfg.alphabet_size)?;
    check_segments(cfg.n_segments, values.len())?;
    let bps = gaussian_breakpoints(cfg.alphabet_size);
    Ok(segment_bounds(values.len(), cfg.n_segments)
        .into_iter()
        .map(|(a, b)| {
            let m = values[a..b].iter().sum::<f64>() / (b - a) as f64;
            cell(&bps, m)
        })
        .collect())
}

pub fn sax_transform(series: &TimeSeries, cfg: &SaxConfig) -> Result<SaxEncoding> {
    check_segments(cfg.n_segments, series.len())?;
    let (z, mean, std) = z_values(series)?;
    Ok(SaxEncoding {
        symbols: sax_encode_normalized(&z, cfg)?,
        mean,
        std,
        length: series.len(),
    })
}

/// Piecewise-constant reconstruction, de-normalized with `mean` and `std`.
pub fn sax_inverse(symbols: &[usize], cfg: &SaxConfig, mean: f64, std: f64, length: usize) -> Result<TimeSeries> {
    check_alphabet("alphabet_size", cfg.alphabet_size)?;
    check_segments(cfg.n_segments, length)?;
    if symbols.len() != cfg.n_segments {
        return Err(Error::LengthMismatch {
            expected: cfg.n_segments,
            actual: symbols.len(),
        });
    }
    let levels = cell_levels(&gaussian_breakpoints(cfg.alphabet_size));
    let mut out = Vec::with_capacity(length);
    for (&s, (a, b)) in symbols.iter().zip(segment_bounds(length, cfg.n_segments)) {
        let level = *levels.get(s).ok_or(Error::UnknownSymbol(s as u32))?;
        out.extend(std::iter::repeat_n(level * std + mean, b - a));
    }
    TimeSeries::new(out)
}

fn slope_scale(segment_len: usize) -> f64 {
    (SLOPE_VARIANCE / segment_len as f64).sqrt()
}

/// Least-squares `(mean, slope)` of a segment against centered time.
fn fit_segment(values: &[f64]) -> (f64, f64) {
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    let center = (len - 1.0) / 2.0;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, v) in values.iter().enumerate() {
        let tc = t as f64 - center;
        num += tc * (v - mean);
        den += tc * tc;
    }
    (mean, if den > 0.0 { num / den } else { 0.0 })
}

pub fn onedsax_encode_normalized(values: &[f64], cfg: &OneDSaxConfig) -> Result<Vec<(usize, usize)>> {
    check_alphabet("mean_alphabet", cfg.mean_alphabet)?;
    check_alphabet("slope_alphabet", cfg.slope_alphabet)?;
    check_segments(cfg.n_segments, values.len())?;
    let mean_bps = gaussian_breakpoints(cfg.mean_alphabet);
    let slope_bps = gaussian_breakpoints(cfg.slope_alphabet);
    Ok(segment_bounds(values.len(), cfg.n_segments)
        .into_iter()
        .map(|(a, b)| {
            let (m, slope) = fit_segment(&values[a..b]);
            (cell(&mean_bps, m), cell(&slope_bps, slope / slope_scale(b - a)))
        })
        .collect())
}

pub fn onedsax_transform(series: &TimeSeries, cfg: &OneDSaxConfig) -> Result<OneDSaxEncoding> {
    check_segments(cfg.n_segments, series.len())?;
    let (z, mean, std) = z_values(series)?;
    Ok(OneDSaxEncoding {
        symbols: onedsax_encode_normalized(&z, cfg)?,
        mean,
        std,
        length: series.len(),
    })
}

/// Piecewise-linear reconstruction: each segment is a line through its
/// de-quantized mean at the segment center with the de-quantized slope.
pub fn onedsax_inverse(
    symbols: &[(usize, usize)],
    cfg: &OneDSaxConfig,
    mean: f64,
    std: f64,
    length: usize,
) -> Result<TimeSeries> {
    check_alphabet("mean_alphabet", cfg.mean_alphabet)?;
    check_alphabet("slope_alphabet", cfg.slope_alphabet)?;
    check_segments(cfg.n_segments, length)?;
    if symbols.len() != cfg.n_segments {
        return Err(Error::LengthMismatch {
            expected: cfg.n_segments,
            actual: symbols.len(),
        });
    }
    let mean_levels = cell_levels(&gaussian_breakpoints(cfg.mean_alphabet));
    let slope_levels = cell_levels(&gaussian_breakpoints(cfg.slope_alphabet));
    let mut out = Vec::with_capacity(length);
    for (&(ms, ss), (a, b)) in symbols.iter().zip(segment_bounds(length, cfg.n_segments)) {
        let level = *mean_levels.get(ms).ok_or(Error::UnknownSymbol(ms as u32))?;
        let slope = *slope_levels.get(ss).ok_or(Error::UnknownSymbol(ss as u32))? * slope_scale(b - a);
        let center = (b - a - 1) as f64 / 2.0;
        out.extend((0..b - a).map(|t| (level + slope * (t as f64 - center)) * std + mean));
    }
    TimeSeries::new(out)
}

/// Splits a symbol budget `k` into `(mean_alphabet, slope_alphabet)` with
/// `mean = ceil(sqrt(k))` and `slope = ceil(k / mean)`.
pub fn split_symbol_budget(k: usize) -> Result<(usize, usize)> {
    if k < 4 {
        return Err(Error::invalid("k", format!("symbol budget must be at least 4, got {k}")));
    }
    let mut mean = (k as f64).sqrt().ceil() as usize;
    // guard against sqrt rounding on perfect squares
    while mean > 1 && (mean - 1) * (mean - 1) >= k {
        mean -= 1;
    }
    while mean * mean < k {
        mean += 1;
    }
    Ok((mean, k.div_ceil(mean)))
}

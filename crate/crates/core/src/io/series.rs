use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// A series with its class label, as stored in UCR archive files.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSeries {
    pub label: String,
    pub series: TimeSeries,
}

fn parse_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_values<'a>(
    fields: impl Iterator<Item = &'a str>,
    path: &Path,
    line: usize,
) -> Result<Vec<f64>> {
    let mut values = fields
        .map(|f| {
            let f = f.trim();
            f.parse::<f64>()
                .map_err(|_| parse_error(path, line, format!("invalid number `{f}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    // UCR pads variable-length series with trailing NaNs
    while values.last().is_some_and(|v| v.is_nan()) {
        values.pop();
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(parse_error(path, line, format!("non-finite value at column {}", i + 1)));
    }
    if values.is_empty() {
        return Err(parse_error(path, line, "no values"));
    }
    Ok(values)
}

/// One series per non-blank line, comma-separated. `path` is only used in
/// error messages.
pub fn parse_series_csv(text: &str, path: &Path) -> Result<Vec<TimeSeries>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| TimeSeries::new(parse_values(l.split(','), path, i + 1)?))
        .collect()
}

pub fn read_series_csv(path: impl AsRef<Path>) -> Result<Vec<TimeSeries>> {
    let path = path.as_ref();
    parse_series_csv(&fs::read_to_string(path)?, path)
}

pub fn write_series_csv(path: impl AsRef<Path>, series: &[TimeSeries]) -> Result<()> {
    let mut out = Vec::new();
    for s in series {
        let row: Vec<String> = s.values().iter().map(f64::to_string).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(fs::write(path, out)?)
}

/// UCR archive layout: class label, then the values, tab-separated.
pub fn parse_ucr_tsv(text: &str, path: &Path) -> Result<Vec<LabeledSeries>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let mut fields = l.split('\t');
            let label = fields.next().unwrap_or_default().trim().to_string();
            let series = TimeSeries::new(parse_values(fields, path, i + 1)?)?;
            Ok(LabeledSeries { label, series })
        })
        .collect()
}

pub fn read_ucr_tsv(path: impl AsRef<Path>) -> Result<Vec<LabeledSeries>> {
    let path = path.as_ref();
    parse_ucr_tsv(&fs::read_to_string(path)?, path)
}

/// Loads every `.csv` and `.tsv` file in `dir` (sorted by file name). Series
/// are named `<file stem>:<row>` with rows counted from 0.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<TimeSeries>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    let mut corpus = Vec::new();
    for path in files {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let series = match ext.as_deref() {
            Some("csv") => read_series_csv(&path)?,
            Some("tsv") => read_ucr_tsv(&path)?.into_iter().map(|l| l.series).collect(),
            _ => continue,
        };
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
        corpus.extend(series.into_iter().enumerate().map(|(i, s)| s.with_name(format!("{stem}:{i}"))));
    }
    if corpus.is_empty() {
        return Err(Error::invalid(
            "corpus",
            format!("no .csv or .tsv series found in {}", dir.display()),
        ));
    }
    Ok(corpus)
}

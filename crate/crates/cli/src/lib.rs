//! Command-line front end: compress/reconstruct series, run the image codec,
//! and drive the benchmark harness.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fabba::aggregation::SortStrategy;
use fabba::bench::{
    parameter_sweep, performance_profile, run_comparison, theta_grid, write_profiles_csv, write_reports_csv,
    write_sweep_csv, ComparisonConfig, SweepConfig,
};
use fabba::io::{flatten_image, load_corpus, read_ppm, read_series_csv, unflatten_image, write_ppm, write_series_csv};
use fabba::metrics::rates;
use fabba::pipeline::{fabba_inverse, fabba_transform, FabbaConfig, FabbaModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fabba", version, about = "Symbolic time-series compression by sorted aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a symbolic model to a single series stored as one CSV row.
    Compress(CompressArgs),
    /// Rebuild a series from a model file.
    Reconstruct(ReconstructArgs),
    /// Lossy round trip of a binary PPM image through the symbolic model.
    Image(ImageArgs),
    /// Compare fABBA, ABBA, SAX and 1d-SAX on a corpus directory.
    Bench(BenchArgs),
    /// Average fABBA scores over a grid of alpha values.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct TransformFlags {
    /// Compression tolerance.
    #[arg(long, default_value_t = 0.1, value_parser = positive)]
    tol: f64,
    /// Aggregation radius.
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    alpha: f64,
    /// Weight of piece lengths relative to increments.
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    scl: f64,
    /// Sorting used by the aggregation: norm2, norm1 or lexicographic.
    #[arg(long, default_value_t = SortStrategy::Norm2)]
    sorting: SortStrategy,
}

#[derive(Debug, Args)]
struct CompressArgs {
    input: PathBuf,
    #[command(flatten)]
    flags: TransformFlags,
    /// Z-normalize the series before compression.
    #[arg(long)]
    normalize: bool,
    /// Model output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    model: PathBuf,
    /// Series output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImageArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 0.1, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 0.001, value_parser = positive)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    scl: f64,
    #[arg(long, default_value_t = SortStrategy::Norm2)]
    sorting: SortStrategy,
    /// Work on raw pixel values instead of the z-normalized series.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    out: PathBuf,
    /// JSON report with compression statistics.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    corpus: PathBuf,
    #[arg(long, default_value_t = 0.1, value_parser = positive)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    scl: f64,
    #[arg(long, default_value_t = SortStrategy::Norm2)]
    sorting: SortStrategy,
    /// Seed for the k-means baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score used for the performance profiles: dtw, euclid, dtw_diff or euclid_diff.
    #[arg(long, default_value = "dtw", value_parser = ["dtw", "euclid", "dtw_diff", "euclid_diff"])]
    metric: String,
    /// Largest profile threshold.
    #[arg(long, default_value_t = 10.0, value_parser = at_least_one)]
    theta_max: f64,
    /// Number of profile thresholds.
    #[arg(long, default_value_t = 91)]
    theta_count: usize,
    /// Skip z-normalization of the series.
    #[arg(long)]
    no_normalize: bool,
    /// Evaluate series one at a time (stable timings).
    #[arg(long)]
    serial: bool,
    /// Write zero runtimes so that outputs are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    corpus: PathBuf,
    /// Either a comma-separated list or `start..end` (inclusive, step 0.1)
    /// or `start..end:step`.
    #[arg(long, default_value = "0.1..0.9", value_parser = alpha_list)]
    alphas: AlphaList,
    /// Comma-separated sortings.
    #[arg(long, default_value = "norm2", value_delimiter = ',')]
    sortings: Vec<SortStrategy>,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    scl: f64,
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct AlphaList(Vec<f64>);

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    number(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err(format!("must be > 0, got {v}")) })
}

fn non_negative(s: &str) -> Result<f64, String> {
    number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err(format!("must be >= 0, got {v}")) })
}

fn at_least_one(s: &str) -> Result<f64, String> {
    number(s).and_then(|v| if v >= 1.0 { Ok(v) } else { Err(format!("must be >= 1, got {v}")) })
}

fn alpha_list(s: &str) -> Result<AlphaList, String> {
    let values = if let Some((start, rest)) = s.split_once("..") {
        let (end, step) = match rest.split_once(':') {
            Some((e, st)) => (e, positive(st)?),
            None => (rest, 0.1),
        };
        let (start, end) = (positive(start)?, positive(end)?);
        if end < start {
            return Err(format!("empty range {start}..{end}"));
        }
        // integer stepping keeps grid points such as 0.3 exact to the last digit
        let count = ((end - start) / step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let v = start + step * i as f64;
                (v * 1e12).round() / 1e12
            })
            .collect()
    } else {
        s.split(',').map(positive).collect::<Result<Vec<_>, _>>()?
    };
    Ok(AlphaList(values))
}

/// Report written by the `image` subcommand.
#[derive(Debug, Serialize)]
pub struct ImageReport {
    pub width: usize,
    pub height: usize,
    pub tol: f64,
    pub alpha: f64,
    pub scl: f64,
    pub sorting: String,
    pub normalized: bool,
    /// Series length minus one.
    pub steps: usize,
    pub pieces: usize,
    pub symbols: usize,
    pub tau_c: f64,
    pub tau_d: f64,
    pub mean_abs_error: f64,
    pub max_abs_error: u8,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Compress(a) => compress(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Image(a) => image(a),
        Command::Bench(a) => bench(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn compress(a: CompressArgs) -> Result<()> {
    let rows = read_series_csv(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let [series] = rows.as_slice() else {
        bail!("{} holds {} series; expected exactly one", a.input.display(), rows.len());
    };
    let cfg = FabbaConfig::new(a.flags.tol, a.flags.alpha)
        .scl(a.flags.scl)
        .sorting(a.flags.sorting)
        .normalize(a.normalize);
    let model = fabba_transform(series, &cfg)?;
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "{}", model.to_json()?)?;
    w.flush()?;
    eprintln!(
        "{} values -> {} pieces, {} symbols",
        series.len(),
        model.pieces_count,
        model.k()
    );
    Ok(())
}

fn reconstruct(a: ReconstructArgs) -> Result<()> {
    let text = fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model = FabbaModel::from_json(&text).with_context(|| format!("parsing {}", a.model.display()))?;
    let series = fabba_inverse(&model)?;
    match &a.out {
        Some(p) => write_series_csv(p, std::slice::from_ref(&series))?,
        None => {
            let row: Vec<String> = series.values().iter().map(f64::to_string).collect();
            println!("{}", row.join(","));
        }
    }
    Ok(())
}

/// Runs the image codec and returns the reconstruction with its report.
pub fn image_round_trip(
    img: &fabba::io::ImageTensor,
    cfg: &FabbaConfig,
) -> fabba::Result<(fabba::io::ImageTensor, ImageReport)> {
    let series = flatten_image(img);
    let model = fabba_transform(&series, cfg)?;
    let recon = fabba_inverse(&model)?;
    let out = unflatten_image(&recon, img.width(), img.height())?;
    let (tau_c, tau_d) = rates(model.pieces_count, series.steps(), model.k())?;
    let diffs = img.pixels().iter().zip(out.pixels()).map(|(a, b)| a.abs_diff(*b));
    let max_abs_error = diffs.clone().max().unwrap_or(0);
    let mean_abs_error = diffs.map(f64::from).sum::<f64>() / img.pixels().len() as f64;
    let report = ImageReport {
        width: img.width(),
        height: img.height(),
        tol: cfg.tol,
        alpha: cfg.alpha,
        scl: cfg.scl,
        sorting: cfg.sorting.to_string(),
        normalized: cfg.normalize,
        steps: series.steps(),
        pieces: model.pieces_count,
        symbols: model.k(),
        tau_c,
        tau_d,
        mean_abs_error,
        max_abs_error,
    };
    Ok((out, report))
}

fn image(a: ImageArgs) -> Result<()> {
    let img = read_ppm(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let cfg = FabbaConfig::new(a.tol, a.alpha)
        .scl(a.scl)
        .sorting(a.sorting)
        .normalize(!a.no_normalize);
    let (out, report) = image_round_trip(&img, &cfg)?;
    write_ppm(&out, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(p) = &a.report {
        fs::write(p, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!(
        "tau_c={:.4} tau_d={:.4} mean abs error {:.3}",
        report.tau_c, report.tau_d, report.mean_abs_error
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus).with_context(|| format!("loading {}", a.corpus.display()))?;
    let cfg = ComparisonConfig {
        scl: a.scl,
        sorting: a.sorting,
        seed: a.seed,
        normalize: !a.no_normalize,
        parallel: !a.serial,
        ..ComparisonConfig::new(a.alpha)
    };
    let mut cmp = run_comparison(&corpus, &cfg)?;
    if a.no_timing {
        cmp.reports.iter_mut().for_each(|r| r.report.runtime_ms = 0.0);
    }
    if cmp.reports.is_empty() {
        bail!("all {} series were excluded by tolerance escalation", corpus.len());
    }
    let table = cmp.profile_table(|r| match a.metric.as_str() {
        "euclid" => r.euclid,
        "dtw_diff" => r.dtw_diff,
        "euclid_diff" => r.euclid_diff,
        _ => r.dtw,
    })?;
    let thetas = theta_grid(1.0, a.theta_max, a.theta_count.max(1));
    let rho = performance_profile(&table, &thetas)?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let reports = a.out_dir.join("reports.csv");
    let mut w = BufWriter::new(File::create(&reports)?);
    write_reports_csv(&mut w, &cmp.reports)?;
    w.flush()?;
    let profiles = a.out_dir.join("profiles.csv");
    let mut w = BufWriter::new(File::create(&profiles)?);
    write_profiles_csv(&mut w, &table.solvers, &thetas, &rho)?;
    w.flush()?;
    eprintln!(
        "{} series evaluated, {} excluded; wrote {} and {}",
        table.problems.len(),
        cmp.excluded.len(),
        reports.display(),
        profiles.display()
    );
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus).with_context(|| format!("loading {}", a.corpus.display()))?;
    let cfg = SweepConfig {
        scl: a.scl,
        normalize: !a.no_normalize,
        parallel: !a.serial,
        ..SweepConfig::default()
    };
    let mut rows = parameter_sweep(&corpus, &a.alphas.0, &a.sortings, &cfg)?;
    if a.no_timing {
        rows.iter_mut().for_each(|r| r.runtime_ms = 0.0);
    }
    let mut w = output(a.out.as_deref())?;
    write_sweep_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_ranges() {
        assert_eq!(alpha_list("0.1..0.5").unwrap().0, vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(alpha_list("1..2:0.5").unwrap().0, vec![1.0, 1.5, 2.0]);
        assert_eq!(alpha_list("0.3,0.1").unwrap().0, vec![0.3, 0.1]);
        assert_eq!(alpha_list("0.1..0.9").unwrap().0.len(), 9);
        assert!(alpha_list("0.5..0.1").is_err());
        assert!(alpha_list("a,b").is_err());
        assert!(alpha_list("0,1").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(dispatch(["fabba", "compress", "x.csv", "--bogus"]), EXIT_USAGE);
        assert_eq!(dispatch(["fabba", "compress", "x.csv", "--tol", "-1"]), EXIT_USAGE);
        assert_eq!(dispatch(["fabba", "frobnicate"]), EXIT_USAGE);
        assert_eq!(dispatch(["fabba", "compress", "x.csv", "--sorting", "norm3"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(dispatch(["fabba", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_input_is_a_data_error() {
        assert_eq!(dispatch(["fabba", "reconstruct", "/nonexistent/model.json"]), EXIT_DATA);
    }
}

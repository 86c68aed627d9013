//! Evaluation harness: tolerance escalation, same-n-same-k comparison against
//! the baselines, parameter sweeps and Dolan–Moré performance profiles.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::aggregation::SortStrategy;
use crate::baselines::{
    abba_digitize_k, onedsax_inverse, onedsax_transform, sax_inverse, sax_transform, split_symbol_budget,
    OneDSaxConfig, SaxConfig,
};
use crate::compression::{compress, CompressionConfig};
use crate::error::{Error, Result};
use crate::metrics::ReconstructionReport;
use crate::model::{Piece, TimeSeries};
use crate::pipeline::{assemble_model, digitize, fabba_inverse, z_normalize, FabbaModel};

/// Tolerance grid and acceptance rate for [`escalate_tolerance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Escalation {
    /// Tolerances tried are `step, 2·step, ..., steps·step`.
    pub step: f64,
    pub steps: usize,
    /// Largest acceptable compression rate `n / N`.
    pub target_rate: f64,
}

impl Default for Escalation {
    fn default() -> Self {
        Self {
            step: 0.05,
            steps: 10,
            target_rate: 0.2,
        }
    }
}

impl Escalation {
    /// The `i`-th tolerance (1-based), computed as a quotient so that grid
    /// values such as 0.15 are the nearest doubles rather than `3·0.05`.
    pub fn tol(&self, i: usize) -> f64 {
        let inv = (1.0 / self.step).round();
        if (inv * self.step - 1.0).abs() < 1e-12 {
            i as f64 / inv
        } else {
            i as f64 * self.step
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EscalationOutcome {
    Accepted { tol: f64, pieces: Vec<Piece> },
    Excluded,
}

/// Smallest tolerance on the grid whose compression rate meets the target.
pub fn escalate_tolerance(series: &TimeSeries, esc: &Escalation) -> Result<EscalationOutcome> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            required: 2,
            actual: series.len(),
        });
    }
    let big_n = series.steps() as f64;
    for i in 1..=esc.steps {
        let tol = esc.tol(i);
        let pieces = compress(series, &CompressionConfig::new(tol)?)?;
        if pieces.len() as f64 / big_n <= esc.target_rate {
            return Ok(EscalationOutcome::Accepted { tol, pieces });
        }
    }
    Ok(EscalationOutcome::Excluded)
}

/// Solver × problem score matrix; `None` marks a failure.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable {
    pub solvers: Vec<String>,
    pub problems: Vec<String>,
    /// `scores[solver][problem]`, smaller is better.
    pub scores: Vec<Vec<Option<f64>>>,
}

impl ProfileTable {
    pub fn new(solvers: Vec<String>, problems: Vec<String>, scores: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if scores.len() != solvers.len() {
            return Err(Error::LengthMismatch {
                expected: solvers.len(),
                actual: scores.len(),
            });
        }
        for row in &scores {
            if row.len() != problems.len() {
                return Err(Error::LengthMismatch {
                    expected: problems.len(),
                    actual: row.len(),
                });
            }
            if let Some(bad) = row.iter().flatten().find(|s| !(s.is_finite() && **s >= 0.0)) {
                return Err(Error::invalid("scores", format!("scores must be finite and >= 0, got {bad}")));
            }
        }
        Ok(Self {
            solvers,
            problems,
            scores,
        })
    }

    /// Performance ratios `s_ij / min_i s_ij`; failures are `+∞`. When the best
    /// score is 0, solvers matching it get ratio 1 and the rest `+∞`.
    pub fn ratios(&self) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![vec![f64::INFINITY; self.problems.len()]; self.solvers.len()];
        for (j, problem) in self.problems.iter().enumerate() {
            let best = self
                .scores
                .iter()
                .filter_map(|row| row[j])
                .min_by(f64::total_cmp)
                .ok_or_else(|| Error::AllSolversFailed {
                    problem: problem.clone(),
                })?;
            for (i, row) in self.scores.iter().enumerate() {
                if let Some(s) = row[j] {
                    out[i][j] = if s == best {
                        1.0
                    } else if best == 0.0 {
                        f64::INFINITY
                    } else {
                        s / best
                    };
                }
            }
        }
        Ok(out)
    }
}

/// `rho[solver][t]`: fraction of problems on which the solver's ratio is
/// strictly below `thetas[t]`.
pub fn performance_profile(table: &ProfileTable, thetas: &[f64]) -> Result<Vec<Vec<f64>>> {
    if let Some(t) = thetas.iter().find(|t| t.is_nan() || **t < 1.0) {
        return Err(Error::invalid("thetas", format!("thresholds must be >= 1, got {t}")));
    }
    let ratios = table.ratios()?;
    let np = table.problems.len() as f64;
    Ok(ratios
        .iter()
        .map(|row| {
            thetas
                .iter()
                .map(|&theta| row.iter().filter(|&&r| r < theta).count() as f64 / np)
                .collect()
        })
        .collect())
}

/// Evenly spaced grid `from, ..., to` with `count` points.
pub fn theta_grid(from: f64, to: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..count)
            .map(|i| from + (to - from) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Fabba,
    Abba,
    Sax,
    OneDSax,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fabba, Method::Abba, Method::Sax, Method::OneDSax];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fabba => "fABBA",
            Method::Abba => "ABBA",
            Method::Sax => "SAX",
            Method::OneDSax => "1d-SAX",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodReport {
    pub series_id: String,
    pub method: Method,
    pub tol: f64,
    pub alpha: f64,
    pub report: ReconstructionReport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonConfig {
    pub alpha: f64,
    pub scl: f64,
    pub sorting: SortStrategy,
    pub seed: u64,
    /// Z-normalize each series before escalation.
    pub normalize: bool,
    /// Evaluate series on the rayon pool; turn off for stable timings.
    pub parallel: bool,
    pub escalation: Escalation,
}

impl ComparisonConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            scl: 1.0,
            sorting: SortStrategy::Norm2,
            seed: 0,
            normalize: true,
            parallel: true,
            escalation: Escalation::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Comparison {
    /// Sorted by series id, then method.
    pub reports: Vec<MethodReport>,
    pub excluded: Vec<String>,
}

impl Comparison {
    /// Problems are series ids, solvers the four methods.
    pub fn profile_table(&self, score: impl Fn(&ReconstructionReport) -> f64) -> Result<ProfileTable> {
        let mut problems: Vec<String> = self.reports.iter().map(|r| r.series_id.clone()).collect();
        problems.dedup();
        let mut scores = vec![vec![None; problems.len()]; Method::ALL.len()];
        let mut j = 0;
        for (idx, r) in self.reports.iter().enumerate() {
            if idx > 0 && self.reports[idx - 1].series_id != r.series_id {
                j += 1;
            }
            let s = score(&r.report);
            let i = Method::ALL.iter().position(|&m| m == r.method).unwrap();
            scores[i][j] = (s.is_finite() && s >= 0.0).then_some(s);
        }
        ProfileTable::new(Method::ALL.iter().map(|m| m.name().to_string()).collect(), problems, scores)
    }
}

/// Identifier of the `i`-th corpus entry: its name, or `series<i>`.
pub fn series_id(series: &TimeSeries, i: usize) -> String {
    series.name().map_or_else(|| format!("series{i}"), str::to_string)
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn fabba_from_pieces(
    work: &TimeSeries,
    pieces: &[Piece],
    cfg: &ComparisonConfig,
) -> Result<(FabbaModel, f64)> {
    let t0 = Instant::now();
    let d = digitize(pieces, cfg.alpha, cfg.scl, cfg.sorting)?;
    let ms = elapsed_ms(t0);
    let model = assemble_model(
        d.symbols,
        d.codebook,
        d.scaling,
        work.first(),
        None,
        work.steps(),
        d.aggregation.dist_count,
    )?;
    Ok((model, ms))
}

fn abba_from_pieces(
    work: &TimeSeries,
    pieces: &[Piece],
    k: usize,
    cfg: &ComparisonConfig,
) -> Result<(FabbaModel, f64)> {
    let t0 = Instant::now();
    let d = abba_digitize_k(pieces, k, cfg.scl, cfg.seed)?;
    let ms = elapsed_ms(t0);
    let model = assemble_model(d.symbols(), d.codebook, d.scaling, work.first(), None, work.steps(), 0)?;
    Ok((model, ms))
}

fn evaluate_series(id: &str, series: &TimeSeries, cfg: &ComparisonConfig) -> Result<Option<Vec<MethodReport>>> {
    let work = if cfg.normalize {
        z_normalize(series)?.0
    } else {
        series.clone()
    };
    let (tol, pieces) = match escalate_tolerance(&work, &cfg.escalation)? {
        EscalationOutcome::Accepted { tol, pieces } => (tol, pieces),
        EscalationOutcome::Excluded => return Ok(None),
    };
    let n = pieces.len();

    let (fabba, fabba_ms) = fabba_from_pieces(&work, &pieces, cfg)?;
    let k = fabba.k();
    let (abba, abba_ms) = abba_from_pieces(&work, &pieces, k, cfg)?;

    let t0 = Instant::now();
    let sax_cfg = SaxConfig {
        n_segments: n,
        alphabet_size: k.max(2),
    };
    let enc = sax_transform(&work, &sax_cfg)?;
    let sax = sax_inverse(&enc.symbols, &sax_cfg, enc.mean, enc.std, enc.length)?;
    let sax_ms = elapsed_ms(t0);

    let t0 = Instant::now();
    let (mean_alphabet, slope_alphabet) = if k >= 4 { split_symbol_budget(k)? } else { (2, 2) };
    let one_cfg = OneDSaxConfig {
        n_segments: n,
        mean_alphabet,
        slope_alphabet,
    };
    let enc = onedsax_transform(&work, &one_cfg)?;
    let one = onedsax_inverse(&enc.symbols, &one_cfg, enc.mean, enc.std, enc.length)?;
    let one_ms = elapsed_ms(t0);

    let runs = [
        (Method::Fabba, fabba_inverse(&fabba)?, fabba_ms, fabba.dist_count),
        (Method::Abba, fabba_inverse(&abba)?, abba_ms, 0),
        (Method::Sax, sax, sax_ms, 0),
        (Method::OneDSax, one, one_ms, 0),
    ];
    runs.into_iter()
        .map(|(method, recon, ms, dist)| {
            let mut report = ReconstructionReport::score(&work, &recon, n, k)?;
            report.runtime_ms = ms;
            report.dist_count = dist;
            Ok(MethodReport {
                series_id: id.to_string(),
                method,
                tol,
                alpha: cfg.alpha,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn for_each_series<T: Send>(
    corpus: &[TimeSeries],
    parallel: bool,
    f: impl Fn(usize, &TimeSeries) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if parallel {
        corpus.par_iter().enumerate().map(|(i, s)| f(i, s)).collect()
    } else {
        corpus.iter().enumerate().map(|(i, s)| f(i, s)).collect()
    }
}

/// Runs fABBA, ABBA, SAX and 1d-SAX with the same number of pieces `n` and
/// symbols `k` on every series that survives tolerance escalation.
pub fn run_comparison(corpus: &[TimeSeries], cfg: &ComparisonConfig) -> Result<Comparison> {
    if corpus.is_empty() {
        return Err(Error::EmptySequence);
    }
    let results = for_each_series(corpus, cfg.parallel, |i, s| {
        let id = series_id(s, i);
        evaluate_series(&id, s, cfg).map(|r| (id, r))
    })?;
    let mut out = Comparison::default();
    for (id, r) in results {
        match r {
            Some(reports) => out.reports.extend(reports),
            None => out.excluded.push(id),
        }
    }
    out.reports
        .sort_by(|a, b| a.series_id.cmp(&b.series_id).then(a.method.cmp(&b.method)));
    out.excluded.sort();
    Ok(out)
}

/// One averaged row of a parameter sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub sorting: SortStrategy,
    pub tau_d: f64,
    pub euclid: f64,
    pub dtw: f64,
    pub runtime_ms: f64,
    pub dist_count: f64,
    pub k: f64,
    /// Series contributing to the averages.
    pub series: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepConfig {
    pub scl: f64,
    pub normalize: bool,
    pub parallel: bool,
    pub escalation: Escalation,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scl: 1.0,
            normalize: true,
            parallel: true,
            escalation: Escalation::default(),
        }
    }
}

/// Averages fABBA scores over the corpus for each `(alpha, sorting)` pair.
/// Tolerances are escalated once per series and shared by all rows.
pub fn parameter_sweep(
    corpus: &[TimeSeries],
    alphas: &[f64],
    sortings: &[SortStrategy],
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if corpus.is_empty() {
        return Err(Error::EmptySequence);
    }
    let prepared: Vec<Option<(TimeSeries, Vec<Piece>)>> = for_each_series(corpus, cfg.parallel, |_, s| {
        let work = if cfg.normalize {
            z_normalize(s)?.0
        } else {
            s.clone()
        };
        Ok(match escalate_tolerance(&work, &cfg.escalation)? {
            EscalationOutcome::Accepted { pieces, .. } => Some((work, pieces)),
            EscalationOutcome::Excluded => None,
        })
    })?;
    let kept: Vec<TimeSeries> = prepared.iter().flatten().map(|(w, _)| w.clone()).collect();
    let pieces: Vec<&Vec<Piece>> = prepared.iter().flatten().map(|(_, p)| p).collect();

    let mut rows = Vec::with_capacity(alphas.len() * sortings.len());
    for &sorting in sortings {
        for &alpha in alphas {
            let ccfg = ComparisonConfig {
                alpha,
                scl: cfg.scl,
                sorting,
                ..ComparisonConfig::new(alpha)
            };
            let reports = for_each_series(&kept, cfg.parallel, |i, work| {
                let (model, ms) = fabba_from_pieces(work, pieces[i], &ccfg)?;
                let mut r = ReconstructionReport::score(work, &fabba_inverse(&model)?, pieces[i].len(), model.k())?;
                r.runtime_ms = ms;
                r.dist_count = model.dist_count;
                Ok(r)
            })?;
            let m = reports.len().max(1) as f64;
            let avg = |f: &dyn Fn(&ReconstructionReport) -> f64| reports.iter().map(f).sum::<f64>() / m;
            rows.push(SweepRow {
                alpha,
                sorting,
                tau_d: avg(&|r| r.tau_d),
                euclid: avg(&|r| r.euclid),
                dtw: avg(&|r| r.dtw),
                runtime_ms: avg(&|r| r.runtime_ms),
                dist_count: avg(&|r| r.dist_count as f64),
                k: avg(&|r| r.k as f64),
                series: reports.len(),
            });
        }
    }
    Ok(rows)
}

/// Seeded corpus alternating noisy sines and Gaussian random walks.
pub fn synthetic_corpus(count: usize, len: usize, seed: u64) -> Result<Vec<TimeSeries>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, 1.0).unwrap();
    let noise = Normal::new(0.0, 0.01).unwrap();
    (0..count)
        .map(|i| {
            let values: Vec<f64> = if i % 2 == 0 {
                let periods = rng.random_range(1.0..6.0);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let amp = rng.random_range(0.5..3.0);
                (0..len)
                    .map(|t| {
                        let x = std::f64::consts::TAU * periods * t as f64 / len as f64 + phase;
                        amp * x.sin() + noise.sample(&mut rng)
                    })
                    .collect()
            } else {
                let mut acc = 0.0;
                (0..len)
                    .map(|_| {
                        acc += step.sample(&mut rng);
                        acc
                    })
                    .collect()
            };
            let kind = if i % 2 == 0 { "sine" } else { "walk" };
            Ok(TimeSeries::new(values)?.with_name(format!("{kind}{i:03}")))
        })
        .collect()
}

pub const REPORT_HEADER: &str = "series_id,method,n,k,tol,alpha,euclid,dtw,euclid_diff,dtw_diff,runtime_ms,dist_count";

pub fn write_reports_csv<W: Write>(mut w: W, reports: &[MethodReport]) -> Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        let x = &r.report;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.series_id,
            r.method,
            x.n,
            x.k,
            r.tol,
            r.alpha,
            x.euclid,
            x.dtw,
            x.euclid_diff,
            x.dtw_diff,
            x.runtime_ms,
            x.dist_count
        )?;
    }
    Ok(())
}

pub const PROFILE_HEADER: &str = "theta,solver,rho";

pub fn write_profiles_csv<W: Write>(mut w: W, solvers: &[String], thetas: &[f64], rho: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{PROFILE_HEADER}")?;
    for (solver, row) in solvers.iter().zip(rho) {
        for (t, r) in thetas.iter().zip(row) {
            writeln!(w, "{t},{solver},{r}")?;
        }
    }
    Ok(())
}

pub const SWEEP_HEADER: &str = "alpha,sorting,tau_d,euclid,dtw,runtime_ms,dist_count,k,series";

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.alpha, r.sorting, r.tau_d, r.euclid, r.dtw, r.runtime_ms, r.dist_count, r.k, r.series
        )?;
    }
    Ok(())
}

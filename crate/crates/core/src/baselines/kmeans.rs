//! k-means++ seeding followed by Lloyd iterations, on 2-d points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Independent seeded runs; the lowest-inertia run wins.
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            restarts: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub centers: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    /// Final within-cluster sum of squares.
    pub inertia: f64,
    /// Number of assignment steps performed.
    pub iterations: usize,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn seed_centers(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target just past the running sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every remaining point coincides with a center
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        centers.push(points[next]);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
    }
    centers
}

fn assign(points: &[[f64; 2]], centers: &[[f64; 2]], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.iter().enumerate() {
            let d = sq_dist(p, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        *label = best;
        inertia += best_d;
    }
    inertia
}

fn update(points: &[[f64; 2]], labels: &[usize], centers: &mut [[f64; 2]]) {
    let k = centers.len();
    let mut sums = vec![[0.0f64; 2]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l][0] += p[0];
        sums[l][1] += p[1];
        counts[l] += 1;
    }
    let mut taken = vec![false; points.len()];
    for c in 0..k {
        if counts[c] > 0 {
            centers[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
        }
    }
    // Empty clusters move onto the point worst served by its current center.
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = points
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i] && counts[labels[*i]] > 1)
            .map(|(i, p)| (i, sq_dist(p, &centers[labels[i]])))
            .filter(|&(_, d)| d > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        if let Some((i, _)) = far {
            taken[i] = true;
            counts[labels[i]] -= 1;
            centers[c] = points[i];
        }
    }
}

fn run_once(points: &[[f64; 2]], k: usize, seed: u64, max_iter: usize) -> KMeansResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, k, &mut rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut next = vec![0usize; points.len()];
    let mut history = Vec::new();
    let mut inertia;
    loop {
        inertia = assign(points, &centers, &mut next);
        history.push(inertia);
        let converged = next == labels;
        std::mem::swap(&mut labels, &mut next);
        if converged || history.len() >= max_iter {
            break;
        }
        update(points, &labels, &mut centers);
    }
    KMeansResult {
        centers,
        labels,
        inertia,
        iterations: history.len(),
        inertia_history: history,
    }
}

/// k-means++ with default options.
pub fn kmeans_pp(points: &[[f64; 2]], k: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_pp_with(points, k, seed, KMeansOptions::default())
}

pub fn kmeans_pp_with(points: &[[f64; 2]], k: usize, seed: u64, opts: KMeansOptions) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::invalid(
            "k",
            format!("need 1 <= k <= n, got k={k}, n={}", points.len()),
        ));
    }
    if opts.max_iter == 0 || opts.restarts == 0 {
        return Err(Error::invalid("options", "max_iter and restarts must be positive"));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..opts.restarts {
        let run = run_once(points, k, seed.wrapping_add(r as u64), opts.max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

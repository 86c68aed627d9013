//! Greedy sorting-based aggregation of scaled pieces.
//!
//! Points are sorted once; the first unassigned point in sorted order starts a
//! new group and absorbs every later unassigned point within Euclidean
//! distance `alpha`. Because the points are sorted, the scan for a group can
//! stop as soon as the sort key proves that no later point can be that close.
//! Group centers are the member means, computed once all points are assigned.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ScaledPoint;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SortStrategy {
    /// Ascending `x`, ties by ascending `y`. Bins are the distinct `x` values.
    Lexicographic,
    /// Ascending Manhattan norm.
    Norm1,
    /// Ascending Euclidean norm.
    #[default]
    Norm2,
}

impl SortStrategy {
    pub const ALL: [SortStrategy; 3] = [SortStrategy::Lexicographic, SortStrategy::Norm1, SortStrategy::Norm2];

    pub fn name(self) -> &'static str {
        match self {
            SortStrategy::Lexicographic => "lexicographic",
            SortStrategy::Norm1 => "norm1",
            SortStrategy::Norm2 => "norm2",
        }
    }

    fn primary_key(self, p: &ScaledPoint) -> f64 {
        match self {
            SortStrategy::Lexicographic => p.x,
            SortStrategy::Norm1 => p.x.abs() + p.y.abs(),
            SortStrategy::Norm2 => (p.x * p.x + p.y * p.y).sqrt(),
        }
    }
}

impl fmt::Display for SortStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SortStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lexicographic" | "lexi" | "lex" => Ok(SortStrategy::Lexicographic),
            "norm1" | "1-norm" | "l1" => Ok(SortStrategy::Norm1),
            "norm2" | "2-norm" | "l2" => Ok(SortStrategy::Norm2),
            other => Err(Error::invalid(
                "sorting",
                format!("unknown strategy `{other}` (expected lexicographic, norm1 or norm2)"),
            )),
        }
    }
}

/// Returns the permutation of `points` (as slice indices) in sorted order.
///
/// Remaining ties are broken by ascending `origin_index`, so the result is
/// fully deterministic.
pub fn sort_points(points: &[ScaledPoint], strategy: SortStrategy) -> Vec<usize> {
    let keys: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let secondary = if strategy == SortStrategy::Lexicographic { p.y } else { 0.0 };
            (strategy.primary_key(p), secondary)
        })
        .collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        keys[a]
            .0
            .total_cmp(&keys[b].0)
            .then(keys[a].1.total_cmp(&keys[b].1))
            .then(points[a].origin_index.cmp(&points[b].origin_index))
    });
    order
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregationResult {
    /// Group id of each point, indexed by `origin_index`.
    pub labels: Vec<usize>,
    /// Sorted order as indices into the input slice.
    pub order: Vec<usize>,
    /// Position in `order` of each group's starting point.
    pub starting_points: Vec<usize>,
    /// Group means in scaled coordinates.
    pub centers: Vec<[f64; 2]>,
    pub group_sizes: Vec<usize>,
    /// Number of non-trivial distance evaluations.
    pub dist_count: u64,
    pub alpha: f64,
}

impl AggregationResult {
    /// Number of groups `k`.
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Coordinates of the starting points, one per group.
    pub fn starting_point_coords(&self, points: &[ScaledPoint]) -> Vec<[f64; 2]> {
        self.starting_points.iter().map(|&pos| points[self.order[pos]].coords()).collect()
    }
}

/// Rounding allowance for the early-stop tests, so that a stop is only taken
/// when the computed distance would also exceed `alpha`.
fn slack(a: f64, b: f64, alpha: f64) -> f64 {
    8.0 * f64::EPSILON * (a.abs() + b.abs() + alpha)
}

fn check_origins(points: &[ScaledPoint]) -> Result<()> {
    let mut seen = vec![false; points.len()];
    for p in points {
        if p.origin_index >= points.len() || std::mem::replace(&mut seen[p.origin_index], true) {
            return Err(Error::invalid(
                "points",
                "origin indices must be a permutation of 0..n",
            ));
        }
    }
    Ok(())
}

const UNASSIGNED: usize = usize::MAX;

/// Groups points with the greedy sorted scan.
pub fn aggregate(points: &[ScaledPoint], alpha: f64, strategy: SortStrategy) -> Result<AggregationResult> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be finite and > 0, got {alpha}")));
    }
    if points.is_empty() {
        return Err(Error::EmptySequence);
    }
    check_origins(points)?;

    let n = points.len();
    let order = sort_points(points, strategy);
    let sorted: Vec<ScaledPoint> = order.iter().map(|&i| points[i]).collect();
    let keys: Vec<f64> = sorted.iter().map(|p| strategy.primary_key(p)).collect();

    // For lexicographic sorting: first position past the bin of each position.
    let bin_end = if strategy == SortStrategy::Lexicographic {
        let mut ends = vec![n; n];
        for pos in (0..n.saturating_sub(1)).rev() {
            ends[pos] = if sorted[pos + 1].x == sorted[pos].x { ends[pos + 1] } else { pos + 1 };
        }
        ends
    } else {
        Vec::new()
    };
    let norm_bound = match strategy {
        SortStrategy::Norm1 => std::f64::consts::SQRT_2 * alpha,
        _ => alpha,
    };

    let mut group_of = vec![UNASSIGNED; n];
    let mut starting_points = Vec::new();
    let mut dist_count = 0u64;

    for i in 0..n {
        if group_of[i] != UNASSIGNED {
            continue;
        }
        let group = starting_points.len();
        starting_points.push(i);
        group_of[i] = group;
        let sp = sorted[i];

        let mut j = i + 1;
        while j < n {
            let key_gap = keys[j] - keys[i];
            match strategy {
                SortStrategy::Lexicographic => {
                    if key_gap > alpha + slack(keys[j], keys[i], alpha) {
                        break;
                    }
                    let y_gap = sorted[j].y - sp.y;
                    if sorted[j].x == sp.x && y_gap > alpha + slack(sorted[j].y, sp.y, alpha) {
                        // rest of this bin is out of reach; later bins may not be
                        j = bin_end[j];
                        continue;
                    }
                }
                SortStrategy::Norm1 | SortStrategy::Norm2 => {
                    if key_gap > norm_bound + slack(keys[j], keys[i], alpha) {
                        break;
                    }
                }
            }
            if group_of[j] == UNASSIGNED {
                dist_count += 1;
                if sp.dist(&sorted[j]) <= alpha {
                    group_of[j] = group;
                }
            }
            j += 1;
        }
    }

    let k = starting_points.len();
    let mut sums = vec![[0.0f64; 2]; k];
    let mut group_sizes = vec![0usize; k];
    let mut labels = vec![0usize; n];
    for (pos, p) in sorted.iter().enumerate() {
        let g = group_of[pos];
        sums[g][0] += p.x;
        sums[g][1] += p.y;
        group_sizes[g] += 1;
        labels[p.origin_index] = g;
    }
    let centers = sums
        .iter()
        .zip(&group_sizes)
        .map(|(s, &c)| [s[0] / c as f64, s[1] / c as f64])
        .collect();

    Ok(AggregationResult {
        labels,
        order,
        starting_points,
        centers,
        group_sizes,
        dist_count,
        alpha,
    })
}

fn check_labels(points: &[ScaledPoint], labels: &[usize], groups: usize) -> Result<()> {
    if labels.len() != points.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            actual: labels.len(),
        });
    }
    if let Some(p) = points.iter().find(|p| p.origin_index >= labels.len()) {
        return Err(Error::invalid(
            "points",
            format!("origin index {} out of range", p.origin_index),
        ));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= groups) {
        return Err(Error::LabelOutOfRange { label, groups });
    }
    Ok(())
}

fn sq_dist(p: &ScaledPoint, c: &[f64; 2]) -> f64 {
    (p.x - c[0]).powi(2) + (p.y - c[1]).powi(2)
}

/// Within-group sum of squared distances to the given centers.
///
/// `labels` is indexed by `origin_index`; `centers` may be the group means or
/// the starting points.
pub fn wcss_from(points: &[ScaledPoint], labels: &[usize], centers: &[[f64; 2]]) -> Result<f64> {
    check_labels(points, labels, centers.len())?;
    Ok(points.iter().map(|p| sq_dist(p, &centers[labels[p.origin_index]])).sum())
}

/// Per-group mean squared distance to the group center.
pub fn group_variances(points: &[ScaledPoint], labels: &[usize], centers: &[[f64; 2]]) -> Result<Vec<f64>> {
    check_labels(points, labels, centers.len())?;
    let mut sums = vec![0.0; centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for p in points {
        let g = labels[p.origin_index];
        sums[g] += sq_dist(p, &centers[g]);
        counts[g] += 1;
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect())
}

impl PartialOrd for SortStrategy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SortStrategy {
    fn cmp(&self, other: &Self) -> Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<ScaledPoint> {
        coords.iter().enumerate().map(|(i, &(x, y))| ScaledPoint::new(x, y, i)).collect()
    }

    /// Algorithm 1 without any early stopping.
    fn naive_labels(points: &[ScaledPoint], alpha: f64, strategy: SortStrategy) -> Vec<usize> {
        let order = sort_points(points, strategy);
        let mut group = vec![usize::MAX; points.len()];
        let mut next = 0;
        for a in 0..order.len() {
            if group[a] != usize::MAX {
                continue;
            }
            group[a] = next;
            for b in a + 1..order.len() {
                if group[b] == usize::MAX && points[order[a]].dist(&points[order[b]]) <= alpha {
                    group[b] = next;
                }
            }
            next += 1;
        }
        let mut labels = vec![0; points.len()];
        for (pos, &i) in order.iter().enumerate() {
            labels[points[i].origin_index] = group[pos];
        }
        labels
    }

    #[test]
    fn sort_by_norm_examples() {
        let p = pts(&[(3.0, 0.0), (0.0, 1.0), (2.0, 0.0)]);
        assert_eq!(sort_points(&p, SortStrategy::Norm2), vec![1, 2, 0]);
        let same = pts(&[(1.0, 1.0); 4]);
        for s in SortStrategy::ALL {
            assert_eq!(sort_points(&same, s), vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn lexicographic_sorts_x_then_y() {
        let p = pts(&[(2.0, -1.0), (1.0, 5.0), (2.0, -3.0), (1.0, 0.0)]);
        assert_eq!(sort_points(&p, SortStrategy::Lexicographic), vec![3, 1, 2, 0]);
    }

    #[test]
    fn large_alpha_gives_one_group() {
        let p = pts(&[(0.0, 0.0), (1.0, 2.0), (-3.0, 1.0), (2.0, -2.0)]);
        for s in SortStrategy::ALL {
            let r = aggregate(&p, 10.0, s).unwrap();
            assert_eq!(r.k(), 1);
            assert!(r.labels.iter().all(|&l| l == 0));
            assert_eq!(r.group_sizes, vec![4]);
        }
    }

    #[test]
    fn spaced_points_are_singletons_with_few_distance_calls() {
        let p: Vec<_> = (0..50).map(|i| ScaledPoint::new(i as f64 * 2.0, 0.0, i)).collect();
        let r = aggregate(&p, 1.0, SortStrategy::Norm2).unwrap();
        assert_eq!(r.k(), 50);
        assert_eq!(r.starting_points, (0..50).collect::<Vec<_>>());
        // each scan stops after one look ahead and never measures a distance
        assert_eq!(r.dist_count, 0);
    }

    #[test]
    fn three_blob_configuration() {
        // blob of four near the origin, a lone point, and four further out
        let p = pts(&[
            (0.1, 0.0),
            (0.0, 0.2),
            (0.2, 0.1),
            (0.15, 0.15),
            (2.0, 2.0),
            (5.0, 0.0),
            (5.1, 0.1),
            (5.0, 0.2),
            (4.9, 0.1),
        ]);
        for s in SortStrategy::ALL {
            let r = aggregate(&p, 0.5, s).unwrap();
            assert_eq!(r.k(), 3, "{s}");
            assert_eq!(r.labels, naive_labels(&p, 0.5, s));
            assert_eq!(r.labels[0], r.labels[3]);
            assert_eq!(r.labels[5], r.labels[8]);
            assert_ne!(r.labels[4], r.labels[0]);
        }
    }

    #[test]
    fn lexicographic_in_bin_stop_keeps_next_bin() {
        // sp (0,0); (0,5) is out of reach in the same bin but (0.5,0.1) in
        // the next bin is still within alpha
        let p = pts(&[(0.0, 0.0), (0.0, 5.0), (0.5, 0.1)]);
        let r = aggregate(&p, 1.0, SortStrategy::Lexicographic).unwrap();
        assert_eq!(r.labels, vec![0, 1, 0]);
        assert_eq!(r.labels, naive_labels(&p, 1.0, SortStrategy::Lexicographic));
    }

    #[test]
    fn invalid_inputs() {
        let p = pts(&[(0.0, 0.0)]);
        assert!(aggregate(&p, 0.0, SortStrategy::Norm2).is_err());
        assert!(aggregate(&p, -1.0, SortStrategy::Norm2).is_err());
        assert!(aggregate(&[], 1.0, SortStrategy::Norm2).is_err());
        let dup = vec![ScaledPoint::new(0.0, 0.0, 0), ScaledPoint::new(1.0, 0.0, 0)];
        assert!(aggregate(&dup, 1.0, SortStrategy::Norm2).is_err());
    }

    #[test]
    fn wcss_examples() {
        let p = pts(&[(1.0, 1.0), (2.0, 2.0)]);
        assert_eq!(wcss_from(&p, &[0, 1], &[[1.0, 1.0], [2.0, 2.0]]).unwrap(), 0.0);
        let d = 3.0f64;
        let q = pts(&[(0.0, 0.0), (d, 0.0)]);
        let w = wcss_from(&q, &[0, 0], &[[d / 2.0, 0.0]]).unwrap();
        assert!((w - d * d / 2.0).abs() < 1e-15);
        assert!(matches!(
            wcss_from(&q, &[0, 2], &[[0.0, 0.0]]),
            Err(Error::LabelOutOfRange { label: 2, .. })
        ));
    }

    #[test]
    fn singleton_variance_is_zero() {
        let p = pts(&[(4.0, -1.0)]);
        assert_eq!(group_variances(&p, &[0], &[[4.0, -1.0]]).unwrap(), vec![0.0]);
    }

    fn point_set() -> impl Strategy<Value = Vec<ScaledPoint>> {
        prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..120).prop_map(|c| pts(&c))
    }

    fn strategy() -> impl Strategy<Value = SortStrategy> {
        prop::sample::select(SortStrategy::ALL.to_vec())
    }

    fn oracle_wcss(points: &[ScaledPoint], labels: &[usize], centers: &[[f64; 2]]) -> f64 {
        let mut total = 0.0;
        for (g, c) in centers.iter().enumerate() {
            for p in points {
                if labels[p.origin_index] == g {
                    total += (p.x - c[0]).powi(2) + (p.y - c[1]).powi(2);
                }
            }
        }
        total
    }

    proptest! {
        #[test]
        fn matches_naive_scan(points in point_set(), alpha in 0.05f64..3.0, s in strategy()) {
            let r = aggregate(&points, alpha, s).unwrap();
            prop_assert_eq!(&r.labels, &naive_labels(&points, alpha, s));
            let n = points.len() as u64;
            prop_assert!(r.dist_count <= n * (n - 1) / 2);
            prop_assert_eq!(r.group_sizes.iter().sum::<usize>(), points.len());
            prop_assert!(r.starting_points.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn variance_and_wcss_bounds(points in point_set(), alpha in 0.05f64..3.0, s in strategy()) {
            let r = aggregate(&points, alpha, s).unwrap();
            let a2 = alpha * alpha;
            for v in group_variances(&points, &r.labels, &r.centers).unwrap() {
                prop_assert!(v <= a2);
            }
            let n = points.len() as f64;
            let k = r.k() as f64;
            let sp = wcss_from(&points, &r.labels, &r.starting_point_coords(&points)).unwrap();
            let mu = wcss_from(&points, &r.labels, &r.centers).unwrap();
            prop_assert!(sp <= a2 * (n - k));
            prop_assert!(mu <= a2 * n);
            prop_assert!(mu <= sp * (1.0 + 1e-12) + 1e-300);
            let oracle = oracle_wcss(&points, &r.labels, &r.centers);
            prop_assert!((mu - oracle).abs() <= 1e-10 * oracle.max(1e-300));
        }

        #[test]
        fn deterministic(points in point_set(), alpha in 0.05f64..3.0, s in strategy()) {
            prop_assert_eq!(aggregate(&points, alpha, s).unwrap(), aggregate(&points, alpha, s).unwrap());
        }
    }

    #[test]
    fn sort_matches_full_sort_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let p: Vec<_> = (0..1000)
            .map(|i| ScaledPoint::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), i))
            .collect();
        for s in SortStrategy::ALL {
            let mut oracle: Vec<(f64, f64, usize)> = p
                .iter()
                .map(|q| match s {
                    SortStrategy::Lexicographic => (q.x, q.y, q.origin_index),
                    SortStrategy::Norm1 => (q.x.abs() + q.y.abs(), 0.0, q.origin_index),
                    SortStrategy::Norm2 => ((q.x * q.x + q.y * q.y).sqrt(), 0.0, q.origin_index),
                })
                .collect();
            oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let got: Vec<usize> = sort_points(&p, s).into_iter().map(|i| p[i].origin_index).collect();
            assert_eq!(got, oracle.iter().map(|o| o.2).collect::<Vec<_>>());
        }
    }
}

//! Gromov–Hausdorff distances between finite metric spaces: exact values for
//! tiny spaces, embedding-matched upper bounds for cluster-sized ones, and a
//! coarse grid discrepancy between counting measures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::AtomicMeasure;
use crate::metrics::cluster_bfs;
use crate::percolation::{ClusterId, ClusterLabeling};

pub const EXACT_CAP: usize = 36;

#[derive(Debug, Error, PartialEq)]
pub enum GhError {
    #[error("|X|·|Y| = {0} exceeds the exhaustive cap {EXACT_CAP}")]
    TooLarge(usize),
    #[error("both spaces need embeddings")]
    NoEmbedding,
    #[error("point {index} of space {space} has no partner within the match radius")]
    Uncovered { space: usize, index: usize },
    #[error("not a metric: {0}")]
    NotMetric(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    pub points: Vec<u64>,
    pub dist: Vec<Vec<f64>>,
    pub embedding: Option<Vec<(f64, f64)>>,
}

impl FiniteMetricSpace {
    /// Checks zero diagonal, symmetry and the triangle inequality (1e-9).
    pub fn new(points: Vec<u64>, dist: Vec<Vec<f64>>, embedding: Option<Vec<(f64, f64)>>) -> Result<Self, GhError> {
        let n = points.len();
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(GhError::NotMetric("distance matrix shape".into()));
        }
        if embedding.as_ref().is_some_and(|e| e.len() != n) {
            return Err(GhError::NotMetric("embedding length".into()));
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(GhError::NotMetric(format!("d({i},{i}) != 0")));
            }
            for j in 0..n {
                if dist[i][j] < 0.0 || dist[i][j] != dist[j][i] {
                    return Err(GhError::NotMetric(format!("d({i},{j})")));
                }
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + 1e-9 {
                        return Err(GhError::NotMetric(format!("triangle {i} {j} {k}")));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { points, dist, embedding })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points on a line at the given positions.
    pub fn on_line(xs: &[f64]) -> Self {
        let dist = xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect();
        FiniteMetricSpace {
            points: (0..xs.len() as u64).collect(),
            dist,
            embedding: Some(xs.iter().map(|&x| (x, 0.0)).collect()),
        }
    }
}

/// Largest `|d_X(x, x') − d_Y(y, y')|` over pairs from the relation.
pub fn distortion(x: &FiniteMetricSpace, y: &FiniteMetricSpace, rel: &[(usize, usize)]) -> f64 {
    let mut worst = 0.0f64;
    for (i, &(a, b)) in rel.iter().enumerate() {
        for &(c, d) in &rel[i + 1..] {
            worst = worst.max((x.dist[a][c] - y.dist[b][d]).abs());
        }
    }
    worst
}

/// Whether some correspondence has distortion at most `eps`: a clique of
/// pairwise compatible pairs covering both spaces.
fn correspondence_within(x: &FiniteMetricSpace, y: &FiniteMetricSpace, eps: f64) -> bool {
    let (m, k) = (x.len(), y.len());
    let ok = |p: (usize, usize), q: (usize, usize)| (x.dist[p.0][q.0] - y.dist[p.1][q.1]).abs() <= eps;
    fn search(
        chosen: &mut Vec<(usize, usize)>,
        cov_x: &mut [u32],
        cov_y: &mut [u32],
        m: usize,
        k: usize,
        ok: &dyn Fn((usize, usize), (usize, usize)) -> bool,
    ) -> bool {
        // Branch on the first uncovered element over every pair that covers it.
        let target = if let Some(a) = (0..m).find(|&a| cov_x[a] == 0) {
            Some((Some(a), None))
        } else {
            (0..k).find(|&b| cov_y[b] == 0).map(|b| (None, Some(b)))
        };
        let Some((ta, tb)) = target else { return true };
        let cands: Vec<(usize, usize)> = match (ta, tb) {
            (Some(a), _) => (0..k).map(|b| (a, b)).collect(),
            (_, Some(b)) => (0..m).map(|a| (a, b)).collect(),
            _ => unreachable!(),
        };
        for p in cands {
            if chosen.iter().all(|&q| ok(p, q)) {
                chosen.push(p);
                cov_x[p.0] += 1;
                cov_y[p.1] += 1;
                if search(chosen, cov_x, cov_y, m, k, ok) {
                    return true;
                }
                chosen.pop();
                cov_x[p.0] -= 1;
                cov_y[p.1] -= 1;
            }
        }
        false
    }
    search(&mut Vec::new(), &mut vec![0; m], &mut vec![0; k], m, k, &ok)
}

/// `½ · min` over correspondences of the distortion, by search over the
/// finitely many candidate values.
pub fn gh_exact_small(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<f64, GhError> {
    let size = x.len() * y.len();
    if size > EXACT_CAP {
        return Err(GhError::TooLarge(size));
    }
    if x.is_empty() || y.is_empty() {
        return Ok(if x.is_empty() && y.is_empty() { 0.0 } else { f64::INFINITY });
    }
    let mut cands = vec![0.0];
    for a in 0..x.len() {
        for c in 0..x.len() {
            for b in 0..y.len() {
                for d in 0..y.len() {
                    cands.push((x.dist[a][c] - y.dist[b][d]).abs());
                }
            }
        }
    }
    cands.sort_by(|p, q| p.total_cmp(q));
    cands.dedup();
    // The largest candidate always admits the full product correspondence.
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if correspondence_within(x, y, cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cands[lo] / 2.0)
}

/// Half the distortion of `{(x, y) : |π(x) − π(y)| ≤ match_radius}`.
pub fn gh_upper_by_embedding(x: &FiniteMetricSpace, y: &FiniteMetricSpace, match_radius: f64) -> Result<f64, GhError> {
    let (ex, ey) = match (&x.embedding, &y.embedding) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(GhError::NoEmbedding),
    };
    let mut rel = Vec::new();
    for (i, p) in ex.iter().enumerate() {
        for (j, q) in ey.iter().enumerate() {
            if (p.0 - q.0).hypot(p.1 - q.1) <= match_radius {
                rel.push((i, j));
            }
        }
    }
    if let Some(i) = (0..x.len()).find(|&i| !rel.iter().any(|r| r.0 == i)) {
        return Err(GhError::Uncovered { space: 0, index: i });
    }
    if let Some(j) = (0..y.len()).find(|&j| !rel.iter().any(|r| r.1 == j)) {
        return Err(GhError::Uncovered { space: 1, index: j });
    }
    Ok(distortion(x, y, &rel) / 2.0)
}

/// GH upper bound from the correspondence pairing every point with its
/// nearest embedded partner in the other space, in both directions.
pub fn gh_upper_nearest(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<f64, GhError> {
    let (ex, ey) = match (&x.embedding, &y.embedding) {
        (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => (a, b),
        _ => return Err(GhError::NoEmbedding),
    };
    let nearest = |p: &(f64, f64), to: &[(f64, f64)]| {
        (0..to.len()).min_by(|&i, &j| (p.0 - to[i].0).hypot(p.1 - to[i].1).total_cmp(&(p.0 - to[j].0).hypot(p.1 - to[j].1))).unwrap()
    };
    let mut rel: Vec<(usize, usize)> = ex.iter().enumerate().map(|(i, p)| (i, nearest(p, ey))).collect();
    rel.extend(ey.iter().enumerate().map(|(j, q)| (nearest(q, ex), j)));
    rel.sort_unstable();
    rel.dedup();
    Ok(distortion(x, y, &rel) / 2.0)
}

/// Smallest match radius at which every point of either embedded space has a
/// partner in the other.
pub fn covering_radius(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<f64, GhError> {
    let (ex, ey) = match (&x.embedding, &y.embedding) {
        (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => (a, b),
        _ => return Err(GhError::NoEmbedding),
    };
    let reach = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        from.iter()
            .map(|p| to.iter().map(|q| (p.0 - q.0).hypot(p.1 - q.1)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(reach(ex, ey).max(reach(ey, ex)))
}

/// L1 distance between the masses two measures put on a `grid × grid`
/// partition of the unit square (positions `site / n`). A coarse surrogate,
/// not the Prokhorov metric.
pub fn measure_discrepancy(mu1: &AtomicMeasure, mu2: &AtomicMeasure, grid: usize) -> f64 {
    let bins = |mu: &AtomicMeasure| {
        let mut m = vec![0.0; grid * grid];
        for &(s, w) in &mu.atoms {
            let cell = |c: i32| (((c as f64 + 0.5) / mu.n as f64 * grid as f64).floor() as usize).min(grid - 1);
            m[cell(s.b) * grid + cell(s.a)] += w;
        }
        m
    };
    bins(mu1).iter().zip(bins(mu2)).map(|(a, b)| (a - b).abs()).sum()
}

/// Farthest-point net of `k` sites of a cluster (first point: the cluster's
/// lowest row-major site), as a geodesic metric space scaled by `1 / scale`,
/// embedded at `site / n` in Euclidean coordinates.
pub fn cluster_net(lab: &ClusterLabeling, id: ClusterId, k: usize, scale: f64) -> FiniteMetricSpace {
    let bx = lab.domain();
    let members = lab.member_indices(id);
    let mut chosen = vec![members[0] as usize];
    let mut rows = vec![cluster_bfs(lab, bx.site(members[0] as usize))];
    let mut nearest: Vec<u32> = members.iter().map(|&i| rows[0][i as usize]).collect();
    while chosen.len() < k.min(members.len()) {
        let (pos, _) = nearest.iter().enumerate().max_by_key(|&(p, &d)| (d, std::cmp::Reverse(p))).unwrap();
        let site = members[pos] as usize;
        chosen.push(site);
        let row = cluster_bfs(lab, bx.site(site));
        for (p, &i) in members.iter().enumerate() {
            nearest[p] = nearest[p].min(row[i as usize]);
        }
        rows.push(row);
    }
    let dist = rows.iter().map(|row| chosen.iter().map(|&j| row[j] as f64 / scale).collect()).collect();
    let n = bx.side as f64;
    let embedding = chosen
        .iter()
        .map(|&i| {
            let (ex, ey) = bx.site(i).euclid();
            (ex / n, ey / n)
        })
        .collect();
    FiniteMetricSpace { points: chosen.iter().map(|&i| i as u64).collect(), dist, embedding: Some(embedding) }
}

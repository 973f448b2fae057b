//! Chemical distance and the path-diameter metric on clusters.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::lattice::TriCoord;
use crate::percolation::{diameter2, ClusterLabeling};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("site {0} lies outside the box")]
    OutsideBox(TriCoord),
    #[error("sites {0} and {1} are not in the same open cluster")]
    Disconnected(TriCoord, TriCoord),
}

/// Graph distance, with an explicit infinite value off-cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(u64),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<u64> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

// JSON: a number, or the string "inf".
impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Distance::Finite(d) => s.serialize_u64(*d),
            Distance::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Distance::Finite(n)),
            Raw::S(s) if s == "inf" => Ok(Distance::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad distance {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub x: TriCoord,
    pub y: TriCoord,
    pub d_geo: Distance,
    pub d_path_lo: f64,
    pub d_path_hi: f64,
    pub d_res: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledSample {
    pub x: TriCoord,
    pub y: TriCoord,
    pub n: u32,
    pub d_geo: Option<f64>,
    pub d_path_lo: f64,
    pub d_path_hi: f64,
    pub d_res: Option<f64>,
}

/// BFS hop counts from `source` through its cluster (`u32::MAX` elsewhere),
/// indexed row-major over the labeling's box.
pub fn cluster_bfs(lab: &ClusterLabeling, source: TriCoord) -> Vec<u32> {
    cluster_bfs_where(lab, source, |_| true)
}

/// As [`cluster_bfs`], visiting only sites accepted by `allow`.
pub(crate) fn cluster_bfs_where(lab: &ClusterLabeling, source: TriCoord, allow: impl Fn(usize) -> bool) -> Vec<u32> {
    let bx = lab.domain();
    let mut dist = vec![u32::MAX; bx.len()];
    let Some(si) = bx.try_index(source) else { return dist };
    if !allow(si) {
        return dist;
    }
    let id = lab.label_at(si);
    dist[si] = 0;
    let mut q = VecDeque::from([si]);
    while let Some(i) = q.pop_front() {
        let s = bx.site(i);
        for t in s.neighbors6() {
            if let Some(j) = bx.try_index(t) {
                if dist[j] == u32::MAX && allow(j) && lab.label_at(j) == id {
                    dist[j] = dist[i] + 1;
                    q.push_back(j);
                }
            }
        }
    }
    dist
}

/// Hop count between two sites inside the cluster of `x` (either color).
pub fn geodesic_distance(lab: &ClusterLabeling, x: TriCoord, y: TriCoord) -> Result<Distance, MetricError> {
    let bx = lab.domain();
    let (Some(xi), Some(yi)) = (bx.try_index(x), bx.try_index(y)) else {
        return Err(MetricError::OutsideBox(if bx.contains(x) { y } else { x }));
    };
    if lab.label_at(xi) != lab.label_at(yi) {
        return Ok(Distance::Infinite);
    }
    let d = cluster_bfs(lab, x)[yi];
    Ok(Distance::Finite(d as u64))
}

/// Certified bracket `(lo, hi)` for the path metric, in units of `1/n`.
///
/// Lenses are Euclidean: `lens(r) = {z : |z−x| ≤ r, |z−y| ≤ r}`. A path of
/// Euclidean diameter `D` lies in `lens(D)`, so the least `r` with `x` and `y`
/// connected inside `lens(r)` is a lower bound; any connecting path inside
/// that lens has diameter at most `2r`, and its diameter is the upper bound.
pub fn path_metric_bracket(lab: &ClusterLabeling, x: TriCoord, y: TriCoord, n: u32) -> Result<(f64, f64), MetricError> {
    let (r2, path) = path_metric_witness(lab, x, y)?;
    let d2 = diameter2(&path);
    Ok(((r2 as f64).sqrt() / n as f64, (d2 as f64).sqrt() / n as f64))
}

/// Least squared lens radius and a witness path realizing it.
pub(crate) fn path_metric_witness(lab: &ClusterLabeling, x: TriCoord, y: TriCoord) -> Result<(i64, Vec<TriCoord>), MetricError> {
    let bx = lab.domain();
    let (Some(xi), Some(yi)) = (bx.try_index(x), bx.try_index(y)) else {
        return Err(MetricError::OutsideBox(if bx.contains(x) { y } else { x }));
    };
    let id = lab.label_at(xi);
    if lab.label_at(yi) != id || id.color != crate::percolation::Color::Open {
        return Err(MetricError::Disconnected(x, y));
    }
    let weight = |i: usize| {
        let s = bx.site(i);
        s.euclid_dist2(x).max(s.euclid_dist2(y))
    };
    let mut cands: Vec<i64> = lab.member_indices(id).iter().map(|&i| weight(i as usize)).collect();
    cands.sort_unstable();
    cands.dedup();
    let floor = weight(xi).max(weight(yi));
    let start = cands.partition_point(|&w| w < floor);
    let reach = |r2: i64| cluster_bfs_where(lab, x, |i| weight(i) <= r2);
    // The full cluster (largest candidate) always connects.
    let (mut lo, mut hi) = (start, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if reach(cands[mid])[yi] != u32::MAX {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let r2 = cands[lo];
    let dist = reach(r2);
    let mut path = vec![y];
    let mut cur = yi;
    while cur != xi {
        let s = bx.site(cur);
        let next = s
            .neighbors6()
            .into_iter()
            .filter_map(|t| bx.try_index(t))
            .find(|&j| dist[j] != u32::MAX && dist[j] + 1 == dist[cur])
            .expect("BFS predecessor");
        path.push(bx.site(next));
        cur = next;
    }
    path.reverse();
    Ok((r2, path))
}

/// Divide chemical and resistance distances by their normalizing constants.
/// The path bracket is already in rescaled Euclidean units.
pub fn rescale(sample: &MetricSample, q_geo: f64, q_res: f64, n: u32) -> RescaledSample {
    assert!(q_geo > 0.0 && q_res > 0.0, "normalizers must be positive");
    RescaledSample {
        x: sample.x,
        y: sample.y,
        n,
        d_geo: sample.d_geo.finite().map(|d| d as f64 / q_geo),
        d_path_lo: sample.d_path_lo,
        d_path_hi: sample.d_path_hi,
        d_res: sample.d_res.map(|r| r / q_res),
    }
}

/// Geodesic distance and path bracket for a pair; `d_res` left empty.
pub fn metric_sample(lab: &ClusterLabeling, x: TriCoord, y: TriCoord, n: u32) -> Result<MetricSample, MetricError> {
    let d_geo = geodesic_distance(lab, x, y)?;
    let (d_path_lo, d_path_hi) = if d_geo.is_finite() && lab.label(x).map(|c| c.color) == Some(crate::percolation::Color::Open) {
        path_metric_bracket(lab, x, y, n)?
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(MetricSample { x, y, d_geo, d_path_lo, d_path_hi, d_res: None })
}

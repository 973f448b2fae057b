use serde::{Deserialize, Serialize};

use super::{Color, Configuration};
use crate::lattice::{LatticeBox, TriCoord};

/// Cluster identifier. Open and closed clusters are numbered separately;
/// `rank` is the position within that color in the diameter ordering, so
/// `rank == 0` is the widest cluster of its color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClusterId {
    pub color: Color,
    pub rank: u32,
}

impl ClusterId {
    pub fn open(rank: u32) -> Self {
        ClusterId { color: Color::Open, rank }
    }

    pub fn closed(rank: u32) -> Self {
        ClusterId { color: Color::Closed, rank }
    }
}

/// Axis-aligned (in triangular coordinates) bounding box, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub a_min: i32,
    pub a_max: i32,
    pub b_min: i32,
    pub b_max: i32,
}

impl BoundingBox {
    fn point(s: TriCoord) -> Self {
        BoundingBox { a_min: s.a, a_max: s.a, b_min: s.b, b_max: s.b }
    }

    fn include(&mut self, s: TriCoord) {
        self.a_min = self.a_min.min(s.a);
        self.a_max = self.a_max.max(s.a);
        self.b_min = self.b_min.min(s.b);
        self.b_max = self.b_max.max(s.b);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterInfo {
    pub id: ClusterId,
    pub size: usize,
    /// Euclidean diameter in lattice units.
    pub diam: f64,
    /// Exact squared diameter.
    pub diam2: i64,
    pub bbox: BoundingBox,
    /// Smallest row-major index among the cluster's sites.
    pub min_site: usize,
}

/// Open and closed clusters of a configuration.
#[derive(Debug, Clone)]
pub struct ClusterLabeling {
    cfg: Configuration,
    labels: Vec<u32>,
    clusters: Vec<ClusterInfo>,
    /// color slot -> rank -> index into `clusters`.
    position: [Vec<u32>; 2],
    offsets: [Vec<usize>; 2],
    members: [Vec<u32>; 2],
}

#[inline]
fn slot(c: Color) -> usize {
    match c {
        Color::Open => 0,
        Color::Closed => 1,
    }
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    #[inline]
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    #[inline]
    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }
}

/// Exact squared Euclidean diameter of a finite site set.
pub(crate) fn diameter2(points: &[TriCoord]) -> i64 {
    let hull = convex_hull(points);
    let mut best = 0;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max(hull[i].euclid_dist2(hull[j]));
        }
    }
    best
}

/// Convex hull (monotone chain) computed in the affine image `(2a + b, b)`,
/// which preserves convexity and keeps arithmetic integral.
fn convex_hull(points: &[TriCoord]) -> Vec<TriCoord> {
    let mut pts: Vec<(i64, i64, TriCoord)> =
        points.iter().map(|&s| (s.twice_x(), s.b as i64, s)).collect();
    pts.sort_unstable_by_key(|p| (p.0, p.1));
    pts.dedup_by_key(|p| (p.0, p.1));
    if pts.len() <= 2 {
        return pts.into_iter().map(|p| p.2).collect();
    }
    let cross = |o: &(i64, i64, TriCoord), a: &(i64, i64, TriCoord), b: &(i64, i64, TriCoord)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(i64, i64, TriCoord)> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<(i64, i64, TriCoord)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.into_iter().map(|p| p.2).collect()
}

/// Label open and closed clusters with union-find over same-color adjacency.
pub fn label_clusters(cfg: &Configuration) -> ClusterLabeling {
    let bx = cfg.domain();
    let n = bx.len();
    let side = bx.side as usize;
    let mut uf = UnionFind::new(n);
    // Forward directions (1,0), (0,1), (-1,1) cover every edge once.
    for i in 0..n {
        let (x, y) = (i % side, i / side);
        let c = cfg.bit(i);
        if x + 1 < side && cfg.bit(i + 1) == c {
            uf.union(i as u32, (i + 1) as u32);
        }
        if y + 1 < side {
            let up = i + side;
            if cfg.bit(up) == c {
                uf.union(i as u32, up as u32);
            }
            if x > 0 && cfg.bit(up - 1) == c {
                uf.union(i as u32, (up - 1) as u32);
            }
        }
    }

    // Provisional ids in order of first appearance (row-major), per root.
    const NONE: u32 = u32::MAX;
    let mut prov_of_root = vec![NONE; n];
    let mut prov = vec![0u32; n];
    struct Acc {
        color: Color,
        size: usize,
        bbox: BoundingBox,
        min_site: usize,
        rows: Vec<(i32, i32, i32)>,
    }
    let mut acc: Vec<Acc> = Vec::new();
    for i in 0..n {
        let r = uf.find(i as u32) as usize;
        let s = bx.site(i);
        let id = if prov_of_root[r] == NONE {
            prov_of_root[r] = acc.len() as u32;
            acc.push(Acc {
                color: Color::from_open(cfg.bit(i)),
                size: 0,
                bbox: BoundingBox::point(s),
                min_site: i,
                rows: Vec::new(),
            });
            prov_of_root[r]
        } else {
            prov_of_root[r]
        };
        prov[i] = id;
        let a = &mut acc[id as usize];
        a.size += 1;
        a.bbox.include(s);
        match a.rows.last_mut() {
            Some(row) if row.0 == s.b => row.2 = s.a,
            _ => a.rows.push((s.b, s.a, s.a)),
        }
    }

    let mut infos: Vec<(usize, ClusterInfo)> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let extremes: Vec<TriCoord> = a
                .rows
                .iter()
                .flat_map(|&(b, lo, hi)| [TriCoord::new(lo, b), TriCoord::new(hi, b)])
                .collect();
            let d2 = diameter2(&extremes);
            (
                k,
                ClusterInfo {
                    id: ClusterId { color: a.color, rank: 0 },
                    size: a.size,
                    diam: (d2 as f64).sqrt(),
                    diam2: d2,
                    bbox: a.bbox,
                    min_site: a.min_site,
                },
            )
        })
        .collect();
    infos.sort_by(|x, y| y.1.diam2.cmp(&x.1.diam2).then(x.1.min_site.cmp(&y.1.min_site)));

    let mut rank_of_prov = vec![0u32; acc.len()];
    let mut counts = [0u32; 2];
    let mut position: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for (global, (k, info)) in infos.iter_mut().enumerate() {
        let sl = slot(info.id.color);
        info.id.rank = counts[sl];
        rank_of_prov[*k] = counts[sl];
        position[sl].push(global as u32);
        counts[sl] += 1;
    }
    let labels: Vec<u32> = prov.iter().map(|&p| rank_of_prov[p as usize]).collect();

    // CSR member lists per color, ordered by rank then row-major index.
    let mut offsets: [Vec<usize>; 2] = [vec![0; counts[0] as usize + 1], vec![0; counts[1] as usize + 1]];
    for i in 0..n {
        let sl = if cfg.bit(i) { 0 } else { 1 };
        offsets[sl][labels[i] as usize + 1] += 1;
    }
    for off in offsets.iter_mut() {
        for k in 1..off.len() {
            off[k] += off[k - 1];
        }
    }
    let mut members: [Vec<u32>; 2] = [vec![0; offsets[0][counts[0] as usize]], vec![0; offsets[1][counts[1] as usize]]];
    let mut fill: [Vec<usize>; 2] = [offsets[0].clone(), offsets[1].clone()];
    for i in 0..n {
        let sl = if cfg.bit(i) { 0 } else { 1 };
        let r = labels[i] as usize;
        members[sl][fill[sl][r]] = i as u32;
        fill[sl][r] += 1;
    }

    ClusterLabeling {
        cfg: cfg.clone(),
        labels,
        clusters: infos.into_iter().map(|(_, c)| c).collect(),
        position,
        offsets,
        members,
    }
}

impl ClusterLabeling {
    pub fn config(&self) -> &Configuration {
        &self.cfg
    }

    pub fn domain(&self) -> LatticeBox {
        self.cfg.domain()
    }

    /// Clusters sorted by decreasing diameter, ties by smallest row-major site.
    pub fn clusters(&self) -> &[ClusterInfo] {
        &self.clusters
    }

    pub fn count(&self, color: Color) -> usize {
        self.position[slot(color)].len()
    }

    /// Cluster of a site; `None` outside the box.
    pub fn label(&self, s: TriCoord) -> Option<ClusterId> {
        let i = self.cfg.domain().try_index(s)?;
        Some(ClusterId { color: Color::from_open(self.cfg.bit(i)), rank: self.labels[i] })
    }

    #[inline]
    pub(crate) fn label_at(&self, i: usize) -> ClusterId {
        ClusterId { color: Color::from_open(self.cfg.bit(i)), rank: self.labels[i] }
    }

    pub fn cluster(&self, id: ClusterId) -> Option<&ClusterInfo> {
        self.position[slot(id.color)]
            .get(id.rank as usize)
            .map(|&g| &self.clusters[g as usize])
    }

    /// Row-major site indices of a cluster, ascending.
    pub fn member_indices(&self, id: ClusterId) -> &[u32] {
        let sl = slot(id.color);
        match self.offsets[sl].get(id.rank as usize + 1) {
            Some(&end) => &self.members[sl][self.offsets[sl][id.rank as usize]..end],
            None => &[],
        }
    }

    pub fn members(&self, id: ClusterId) -> impl Iterator<Item = TriCoord> + '_ {
        let bx = self.domain();
        self.member_indices(id).iter().map(move |&i| bx.site(i as usize))
    }

    pub fn same_cluster(&self, x: TriCoord, y: TriCoord) -> bool {
        matches!((self.label(x), self.label(y)), (Some(a), Some(b)) if a == b)
    }

    /// Widest cluster of a color (rank 0), if any.
    pub fn widest(&self, color: Color) -> Option<ClusterId> {
        (self.count(color) > 0).then_some(ClusterId { color, rank: 0 })
    }

    /// Largest cluster of a color by site count (ties by rank).
    pub fn largest_by_size(&self, color: Color) -> Option<ClusterId> {
        (0..self.count(color) as u32)
            .map(|rank| ClusterId { color, rank })
            .max_by(|x, y| {
                let (sx, sy) = (self.cluster(*x).unwrap().size, self.cluster(*y).unwrap().size);
                sx.cmp(&sy).then(y.rank.cmp(&x.rank))
            })
    }

    /// Clusters touching both given sides of the box.
    pub fn spanning(&self, color: Color, first: crate::lattice::Side, second: crate::lattice::Side) -> Vec<ClusterId> {
        let bx = self.domain();
        let touching = |side| {
            let mut set: Vec<u32> = bx
                .boundary_sites(side)
                .into_iter()
                .filter(|&s| self.cfg.color(s) == color)
                .map(|s| self.labels[bx.index(s)])
                .collect();
            set.sort_unstable();
            set.dedup();
            set
        };
        let a = touching(first);
        let b = touching(second);
        a.into_iter()
            .filter(|r| b.binary_search(r).is_ok())
            .map(|rank| ClusterId { color, rank })
            .collect()
    }
}

use super::Coloring;

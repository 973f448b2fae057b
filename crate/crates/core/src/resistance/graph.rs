use crate::lattice::{LatticeBox, TriCoord};
use crate::percolation::{ClusterId, ClusterLabeling};

/// Unit-conductance graph on a set of lattice sites (CSR adjacency).
#[derive(Debug, Clone)]
pub struct ClusterGraph {
    sites: Vec<TriCoord>,
    frame: LatticeBox,
    /// frame index -> local node, `u32::MAX` if absent.
    local: Vec<u32>,
    offsets: Vec<usize>,
    adj: Vec<u32>,
}

impl ClusterGraph {
    /// Induced subgraph of the triangular lattice on `sites`.
    pub fn from_sites(sites: Vec<TriCoord>) -> Self {
        assert!(!sites.is_empty(), "graph needs at least one site");
        let (mut a0, mut b0, mut a1, mut b1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for s in &sites {
            a0 = a0.min(s.a);
            b0 = b0.min(s.b);
            a1 = a1.max(s.a);
            b1 = b1.max(s.b);
        }
        let frame = LatticeBox::new(TriCoord::new(a0, b0), ((a1 - a0).max(b1 - b0) + 1) as u32);
        let mut local = vec![u32::MAX; frame.len()];
        for (k, &s) in sites.iter().enumerate() {
            local[frame.index(s)] = k as u32;
        }
        let mut offsets = Vec::with_capacity(sites.len() + 1);
        let mut adj = Vec::new();
        offsets.push(0);
        for &s in &sites {
            for t in s.neighbors6() {
                if let Some(j) = frame.try_index(t) {
                    if local[j] != u32::MAX {
                        adj.push(local[j]);
                    }
                }
            }
            offsets.push(adj.len());
        }
        ClusterGraph { sites, frame, local, offsets, adj }
    }

    pub fn from_cluster(lab: &ClusterLabeling, id: ClusterId) -> Self {
        Self::from_sites(lab.members(id).collect())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[TriCoord] {
        &self.sites
    }

    pub fn node(&self, s: TriCoord) -> Option<usize> {
        self.frame.try_index(s).map(|i| self.local[i]).filter(|&k| k != u32::MAX).map(|k| k as usize)
    }

    #[inline]
    pub fn neighbors(&self, k: usize) -> &[u32] {
        &self.adj[self.offsets[k]..self.offsets[k + 1]]
    }

    #[inline]
    pub fn degree(&self, k: usize) -> usize {
        self.offsets[k + 1] - self.offsets[k]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    /// Same graph with some nodes removed.
    pub fn without(&self, removed: &[TriCoord]) -> Self {
        Self::from_sites(self.sites.iter().copied().filter(|s| !removed.contains(s)).collect())
    }
}

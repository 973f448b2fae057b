//! Counting measures on clusters and annuli, and dyadic box counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arms::{count_disjoint_monochromatic, has_alternating_arms, ArmQuery, Sigma};
use crate::lattice::{Annulus, AnnulusRegion, TriCoord};
use crate::percolation::{ClusterId, ClusterLabeling, Color, Configuration};

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("no cluster {0:?} in this labeling")]
    UnknownCluster(ClusterId),
    #[error("one-arm normalization must be positive, got {0}")]
    BadNormalization(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<(TriCoord, f64)>,
    pub normalization: f64,
    pub n: u32,
}

impl AtomicMeasure {
    /// Unit atoms on `sites`, divided by `n² Â₁(1, n)`.
    pub fn uniform(sites: impl Iterator<Item = TriCoord>, n: u32, one_arm_hat: f64) -> Result<Self, MeasureError> {
        if !(one_arm_hat > 0.0) {
            return Err(MeasureError::BadNormalization(one_arm_hat));
        }
        let normalization = (n as f64).powi(2) * one_arm_hat;
        let w = 1.0 / normalization;
        Ok(AtomicMeasure { atoms: sites.map(|s| (s, w)).collect(), normalization, n })
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass of the atoms satisfying `keep`.
    pub fn mass_where(&self, mut keep: impl FnMut(TriCoord) -> bool) -> f64 {
        self.atoms.iter().filter(|a| keep(a.0)).map(|a| a.1).sum()
    }
}

/// Unit atoms on a cluster, divided by `n² Â₁(1, n)`.
pub fn cluster_measure(lab: &ClusterLabeling, id: ClusterId, one_arm_hat: f64) -> Result<AtomicMeasure, MeasureError> {
    lab.cluster(id).ok_or(MeasureError::UnknownCluster(id))?;
    AtomicMeasure::uniform(lab.members(id), lab.domain().side, one_arm_hat)
}

/// Open sites of the annulus's inner face joined, inside the box, to its
/// outer boundary layer; normalized like [`cluster_measure`].
pub fn annulus_measure(cfg: &Configuration, annulus: &Annulus, one_arm_hat: f64) -> Result<AtomicMeasure, MeasureError> {
    let bx = cfg.domain();
    // Flood from every open site at or beyond the outer boundary layer.
    let mut reached = vec![false; bx.len()];
    let mut stack: Vec<TriCoord> =
        bx.sites().filter(|&s| cfg.get(s) && annulus.layer(s) >= annulus.outer_layer()).collect();
    for &s in &stack {
        reached[bx.index(s)] = true;
    }
    while let Some(s) = stack.pop() {
        for t in s.neighbors6() {
            if let Some(j) = bx.try_index(t) {
                if !reached[j] && cfg.get(t) {
                    reached[j] = true;
                    stack.push(t);
                }
            }
        }
    }
    let atoms = bx
        .sites()
        .filter(|&s| annulus.membership(s) == AnnulusRegion::InnerFace && reached[bx.index(s)]);
    AtomicMeasure::uniform(atoms, bx.side, one_arm_hat)
}

/// Whether `x` has two disjoint arms (open-closed or open-open) across
/// `A(x; inner, outer)`. Needs the annulus inside the configuration's box.
pub fn has_two_arms(cfg: &Configuration, x: TriCoord, inner: u32, outer: u32) -> bool {
    let annulus = Annulus::new(x, inner, outer);
    let oc = ArmQuery::new(annulus, Sigma::alternating(2), false);
    has_alternating_arms(cfg, &oc).expect("annulus must fit in the box")
        || count_disjoint_monochromatic(cfg, annulus, Color::Open).expect("annulus must fit in the box") >= 2
}

/// Level-`k` dyadic boxes: origin at the box corner, side `floor(n / 2^k)`,
/// with narrower boxes closing off the remainder strips.
fn dyadic_cuts(n: u32, k: u32) -> Vec<u32> {
    let s = (n >> k).max(1);
    let mut cuts: Vec<u32> = (0..).map(|i| i * s).take_while(|&c| c < n).collect();
    cuts.push(n);
    cuts
}

/// Number of level-`k` dyadic boxes `Q` whose double `2Q` (same center, twice
/// the side) meets the cluster.
pub fn box_count_yk(lab: &ClusterLabeling, id: ClusterId, k: u32) -> u64 {
    let bx = lab.domain();
    let n = bx.side;
    assert!(1u64 << k <= n as u64, "need 2^k <= n");
    if lab.cluster(id).is_none() {
        return 0;
    }
    // Prefix sums of cluster membership over the box.
    let w = n as usize + 1;
    let mut pre = vec![0u32; w * w];
    for &i in lab.member_indices(id) {
        let s = bx.site(i as usize);
        let (a, b) = ((s.a - bx.lo.a) as usize, (s.b - bx.lo.b) as usize);
        pre[(b + 1) * w + a + 1] += 1;
    }
    for b in 1..w {
        for a in 1..w {
            pre[b * w + a] += pre[(b - 1) * w + a] + pre[b * w + a - 1] - pre[(b - 1) * w + a - 1];
        }
    }
    let rect = |a0: usize, a1: usize, b0: usize, b1: usize| {
        pre[b1 * w + a1] + pre[b0 * w + a0] - pre[b0 * w + a1] - pre[b1 * w + a0]
    };
    // Interval [x0, x1) doubled about its center, clipped to the box. Cell
    // centers sit at half-integers, so compare in doubled units.
    let double = |x0: u32, x1: u32| {
        let len = x1 - x0;
        let lo2 = 2 * x0 as i64 - len as i64; // 2 * (x0 - len/2)
        let hi2 = 2 * x1 as i64 + len as i64;
        // Cells c with lo2 <= 2c + 1 <= hi2.
        let c0 = ((lo2 - 1).max(0) as u64).div_ceil(2) as usize;
        let c1 = (((hi2 - 1).div_euclid(2) + 1).min(n as i64)) as usize;
        (c0, c1)
    };
    let cuts = dyadic_cuts(n, k);
    let spans: Vec<_> = cuts.windows(2).map(|c| double(c[0], c[1])).collect();
    let mut count = 0;
    for &(b0, b1) in &spans {
        for &(a0, a1) in &spans {
            if rect(a0, a1, b0, b1) > 0 {
                count += 1;
            }
        }
    }
    count
}

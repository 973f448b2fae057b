//! Triangular-lattice geometry in integer triangular coordinates.
//!
//! A site `(a, b)` sits at the Euclidean point `(a + b/2, b·√3/2)`. Boxes are
//! parallelograms `[lo.a, lo.a+side) × [lo.b, lo.b+side)` and balls use the sup
//! norm in triangular coordinates, so `B(x, r)` is again a parallelogram.

use serde::{Deserialize, Serialize};

/// Neighbor offsets in counterclockwise order starting from `(+1, 0)`.
pub const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TriCoord {
    pub a: i32,
    pub b: i32,
}

impl TriCoord {
    pub const ORIGIN: TriCoord = TriCoord { a: 0, b: 0 };

    pub const fn new(a: i32, b: i32) -> Self {
        TriCoord { a, b }
    }

    /// Euclidean image `(a + b/2, b·√3/2)`.
    pub fn euclid(self) -> (f64, f64) {
        (self.a as f64 + 0.5 * self.b as f64, SQRT3_2 * self.b as f64)
    }

    /// Twice the Euclidean abscissa; an exact integer key for left-to-right order.
    pub fn twice_x(self) -> i64 {
        2 * self.a as i64 + self.b as i64
    }

    #[inline]
    pub fn offset(self, d: (i32, i32)) -> TriCoord {
        TriCoord::new(self.a + d.0, self.b + d.1)
    }

    #[inline]
    pub fn step(self, dir: usize) -> TriCoord {
        self.offset(DIRECTIONS[dir])
    }

    /// All six lattice neighbors, in `DIRECTIONS` order.
    pub fn neighbors6(self) -> [TriCoord; 6] {
        DIRECTIONS.map(|d| self.offset(d))
    }

    /// Sup norm of `self - other` in triangular coordinates.
    pub fn sup_dist(self, other: TriCoord) -> u32 {
        (self.a - other.a).unsigned_abs().max((self.b - other.b).unsigned_abs())
    }

    /// Exact squared Euclidean distance: `da² + da·db + db²`.
    pub fn euclid_dist2(self, other: TriCoord) -> i64 {
        let da = (self.a - other.a) as i64;
        let db = (self.b - other.b) as i64;
        da * da + da * db + db * db
    }

    pub fn euclid_dist(self, other: TriCoord) -> f64 {
        (self.euclid_dist2(other) as f64).sqrt()
    }

    /// Index of the direction `other - self`, if the two sites are adjacent.
    pub fn direction_to(self, other: TriCoord) -> Option<usize> {
        let d = (other.a - self.a, other.b - self.b);
        DIRECTIONS.iter().position(|&x| x == d)
    }

    pub fn is_adjacent(self, other: TriCoord) -> bool {
        self.direction_to(other).is_some()
    }
}

impl From<(i32, i32)> for TriCoord {
    fn from((a, b): (i32, i32)) -> Self {
        TriCoord::new(a, b)
    }
}

impl std::fmt::Display for TriCoord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// Left-to-right order used for pivotal lists and touch points:
/// Euclidean abscissa first, then `b`.
pub fn left_to_right(x: &TriCoord, y: &TriCoord) -> std::cmp::Ordering {
    x.twice_x().cmp(&y.twice_x()).then(x.b.cmp(&y.b))
}

/// Parallelogram box of `side × side` sites with lower corner `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub lo: TriCoord,
    pub side: u32,
}

/// One of the four sides of a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl LatticeBox {
    pub fn new(lo: TriCoord, side: u32) -> Self {
        assert!(side >= 1, "box side must be positive");
        LatticeBox { lo, side }
    }

    /// `Λ_n`: the box with lower corner at the origin.
    pub fn lambda(n: u32) -> Self {
        LatticeBox::new(TriCoord::ORIGIN, n)
    }

    /// Sites within sup distance `< radius` of `center`.
    pub fn ball(center: TriCoord, radius: u32) -> Self {
        assert!(radius >= 1);
        let r = radius as i32 - 1;
        LatticeBox::new(center.offset((-r, -r)), 2 * radius - 1)
    }

    /// Sites within sup distance `<= radius` of `center`.
    pub fn closed_ball(center: TriCoord, radius: u32) -> Self {
        let r = radius as i32;
        LatticeBox::new(center.offset((-r, -r)), 2 * radius + 1)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.side as usize * self.side as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn hi_a(&self) -> i32 {
        self.lo.a + self.side as i32 - 1
    }

    #[inline]
    pub fn hi_b(&self) -> i32 {
        self.lo.b + self.side as i32 - 1
    }

    #[inline]
    pub fn contains(&self, s: TriCoord) -> bool {
        s.a >= self.lo.a && s.b >= self.lo.b && s.a <= self.hi_a() && s.b <= self.hi_b()
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        self.contains(other.lo)
            && self.contains(TriCoord::new(other.hi_a(), other.hi_b()))
    }

    /// Row-major index `(b - lo.b)·side + (a - lo.a)`.
    #[inline]
    pub fn index(&self, s: TriCoord) -> usize {
        debug_assert!(self.contains(s));
        (s.b - self.lo.b) as usize * self.side as usize + (s.a - self.lo.a) as usize
    }

    /// Row-major index, or `None` outside the box.
    #[inline]
    pub fn try_index(&self, s: TriCoord) -> Option<usize> {
        self.contains(s).then(|| self.index(s))
    }

    #[inline]
    pub fn site(&self, index: usize) -> TriCoord {
        let side = self.side as usize;
        TriCoord::new(self.lo.a + (index % side) as i32, self.lo.b + (index / side) as i32)
    }

    pub fn sites(&self) -> impl Iterator<Item = TriCoord> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    /// Side site sets; each has exactly `side` sites.
    pub fn boundary_sites(&self, side: Side) -> Vec<TriCoord> {
        let n = self.side as i32;
        let lo = self.lo;
        match side {
            Side::Left => (0..n).map(|k| lo.offset((0, k))).collect(),
            Side::Right => (0..n).map(|k| lo.offset((n - 1, k))).collect(),
            Side::Bottom => (0..n).map(|k| lo.offset((k, 0))).collect(),
            Side::Top => (0..n).map(|k| lo.offset((k, n - 1))).collect(),
        }
    }

    pub fn on_side(&self, s: TriCoord, side: Side) -> bool {
        self.contains(s)
            && match side {
                Side::Left => s.a == self.lo.a,
                Side::Right => s.a == self.hi_a(),
                Side::Bottom => s.b == self.lo.b,
                Side::Top => s.b == self.hi_b(),
            }
    }

    /// In-box neighbors of `site` in fixed counterclockwise order from `(+1, 0)`.
    pub fn neighbors(&self, site: TriCoord) -> Vec<TriCoord> {
        site.neighbors6()
            .into_iter()
            .filter(|&t| self.contains(t))
            .collect()
    }

    /// Position of `s` in the unit parallelogram after rescaling by `1/side`,
    /// in triangular coordinates.
    pub fn rescaled(&self, s: TriCoord) -> (f64, f64) {
        let n = self.side as f64;
        ((s.a - self.lo.a) as f64 / n, (s.b - self.lo.b) as f64 / n)
    }
}

/// Free-function form of [`LatticeBox::neighbors`].
pub fn neighbors(site: TriCoord, domain: &LatticeBox) -> Vec<TriCoord> {
    domain.neighbors(site)
}

/// Free-function form of [`LatticeBox::boundary_sites`].
pub fn boundary_sites(domain: &LatticeBox, side: Side) -> Vec<TriCoord> {
    domain.boundary_sites(side)
}

/// Euclidean image of a point given in (possibly fractional) triangular coordinates.
pub fn euclid_f(a: f64, b: f64) -> (f64, f64) {
    (a + 0.5 * b, SQRT3_2 * b)
}

/// Parallelogram annulus `B(center, r_out) \ B(center, r_in)`.
///
/// Arms are paths in the closed annulus made of sup-norm layers
/// `r_in - 1 ..= r_out - 1`. The inner boundary is the part of layer
/// `r_in - 1` adjacent to the inner face (the two obtuse corners of that layer
/// do not touch it); with `r_in == 1` it is the center site itself. The outer
/// boundary is all of layer `r_out - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annulus {
    pub center: TriCoord,
    pub r_in: u32,
    pub r_out: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnulusRegion {
    InnerFace,
    Annulus,
    Outside,
}

impl Annulus {
    /// Requires `1 <= r_in <= r_out`. `r_in == r_out` is the one-layer
    /// degenerate annulus whose inner and outer boundaries coincide.
    pub fn new(center: TriCoord, r_in: u32, r_out: u32) -> Self {
        assert!(r_in >= 1 && r_in <= r_out, "annulus radii must satisfy 1 <= r_in <= r_out");
        Annulus { center, r_in, r_out }
    }

    pub fn membership(&self, site: TriCoord) -> AnnulusRegion {
        let d = site.sup_dist(self.center);
        if d < self.r_in {
            AnnulusRegion::InnerFace
        } else if d < self.r_out {
            AnnulusRegion::Annulus
        } else {
            AnnulusRegion::Outside
        }
    }

    /// Sup-norm layer of a site relative to the center.
    #[inline]
    pub fn layer(&self, site: TriCoord) -> u32 {
        site.sup_dist(self.center)
    }

    pub fn inner_layer(&self) -> u32 {
        self.r_in - 1
    }

    pub fn outer_layer(&self) -> u32 {
        self.r_out - 1
    }

    /// Whether a site belongs to the closed annulus used for arm events.
    #[inline]
    pub fn in_arm_domain(&self, site: TriCoord) -> bool {
        let d = self.layer(site);
        d + 1 >= self.r_in && d < self.r_out
    }

    /// Smallest box containing the closed annulus.
    pub fn bounding_box(&self) -> LatticeBox {
        LatticeBox::ball(self.center, self.r_out)
    }

    /// Sites at sup distance exactly `layer` from the center.
    pub fn layer_sites(center: TriCoord, layer: u32) -> Vec<TriCoord> {
        if layer == 0 {
            return vec![center];
        }
        let l = layer as i32;
        let mut out = Vec::with_capacity(8 * layer as usize);
        for db in -l..=l {
            for da in -l..=l {
                if da.abs() == l || db.abs() == l {
                    out.push(center.offset((da, db)));
                }
            }
        }
        out
    }

    pub fn inner_boundary(&self) -> Vec<TriCoord> {
        Self::layer_sites(self.center, self.inner_layer())
            .into_iter()
            .filter(|&s| self.is_inner_boundary(s))
            .collect()
    }

    /// Layer `r_in - 1` site touching the inner face (or the center if `r_in == 1`).
    pub fn is_inner_boundary(&self, site: TriCoord) -> bool {
        let l = self.layer(site);
        if l != self.inner_layer() {
            return false;
        }
        l == 0 || site.neighbors6().iter().any(|&t| self.layer(t) < l)
    }

    pub fn outer_boundary(&self) -> Vec<TriCoord> {
        Self::layer_sites(self.center, self.outer_layer())
    }

    /// All sites of the closed annulus, row-major.
    pub fn arm_domain_sites(&self) -> Vec<TriCoord> {
        self.bounding_box()
            .sites()
            .filter(|&s| self.in_arm_domain(s))
            .collect()
    }
}

/// Free-function form of [`Annulus::membership`].
pub fn annulus_membership(annulus: &Annulus, site: TriCoord) -> AnnulusRegion {
    annulus.membership(site)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(a: i32, b: i32) -> TriCoord {
        TriCoord::new(a, b)
    }

    #[test]
    fn neighbor_examples() {
        let l3 = LatticeBox::lambda(3);
        assert_eq!(neighbors(c(0, 0), &l3), vec![c(1, 0), c(0, 1)]);
        assert_eq!(
            neighbors(c(1, 1), &l3),
            vec![c(2, 1), c(1, 2), c(0, 2), c(0, 1), c(1, 0), c(2, 0)]
        );
        // Enumerate the six candidates and keep those with 0 <= a, b < 3.
        let expected: Vec<_> = c(2, 0)
            .neighbors6()
            .into_iter()
            .filter(|s| (0..3).contains(&s.a) && (0..3).contains(&s.b))
            .collect();
        assert_eq!(expected, vec![c(2, 1), c(1, 1), c(1, 0)]);
        assert_eq!(neighbors(c(2, 0), &l3), expected);
    }

    #[test]
    fn boundary_examples() {
        let l2 = LatticeBox::lambda(2);
        assert_eq!(boundary_sites(&l2, Side::Left), vec![c(0, 0), c(0, 1)]);
        assert_eq!(boundary_sites(&l2, Side::Right), vec![c(1, 0), c(1, 1)]);
        assert_eq!(
            boundary_sites(&LatticeBox::lambda(4), Side::Top),
            vec![c(0, 3), c(1, 3), c(2, 3), c(3, 3)]
        );
    }

    #[test]
    fn annulus_examples() {
        let an = Annulus::new(c(0, 0), 2, 4);
        assert_eq!(annulus_membership(&an, c(0, 0)), AnnulusRegion::InnerFace);
        assert_eq!(annulus_membership(&an, c(3, 0)), AnnulusRegion::Annulus);
        assert_eq!(annulus_membership(&an, c(4, 4)), AnnulusRegion::Outside);
        assert!(an.inner_boundary().iter().all(|s| s.sup_dist(an.center) == 1));
        // Layer 1 has 8 sites; (1,1) and (-1,-1) are not adjacent to the center.
        assert_eq!(an.inner_boundary().len(), 6);
        assert!(!an.inner_boundary().contains(&c(1, 1)));
        assert_eq!(an.outer_boundary().len(), 24);
        assert_eq!(an.arm_domain_sites().len(), 48);
    }

    #[test]
    fn euclid_convention() {
        let (x, y) = c(1, 1).euclid();
        assert!((x - 1.5).abs() < 1e-15);
        assert!((y - 3f64.sqrt() / 2.0).abs() < 1e-15);
        // squared distance formula agrees with the Euclidean image
        for (p, q) in [(c(0, 0), c(3, -2)), (c(1, 5), c(-2, 2)), (c(4, 4), c(0, 0))] {
            let (px, py) = p.euclid();
            let (qx, qy) = q.euclid();
            let d2 = (px - qx).powi(2) + (py - qy).powi(2);
            assert!((d2 - p.euclid_dist2(q) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn degree_counts() {
        let n = 6;
        let l = LatticeBox::lambda(n);
        for s in l.sites() {
            let deg = l.neighbors(s).len();
            let interior = s.a > 0 && s.b > 0 && s.a < n as i32 - 1 && s.b < n as i32 - 1;
            if interior {
                assert_eq!(deg, 6);
            } else {
                assert!([2, 3, 4].contains(&deg), "{s}: {deg}");
            }
        }
    }

    #[test]
    fn index_roundtrip() {
        let bx = LatticeBox::new(c(-3, 5), 7);
        for i in 0..bx.len() {
            assert_eq!(bx.index(bx.site(i)), i);
        }
        assert_eq!(bx.index(c(-3, 5)), 0);
        assert_eq!(bx.index(c(-2, 6)), 8);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn neighbor_relation_symmetric(n in 1u32..12, i in 0usize..144, j in 0usize..144) {
                let l = LatticeBox::lambda(n);
                let (x, y) = (l.site(i % l.len()), l.site(j % l.len()));
                prop_assert_eq!(l.neighbors(x).contains(&y), l.neighbors(y).contains(&x));
            }

            #[test]
            fn euclid_injective(a1 in -50i32..50, b1 in -50i32..50, a2 in -50i32..50, b2 in -50i32..50) {
                let (p, q) = (c(a1, b1), c(a2, b2));
                prop_assert_eq!(p == q, p.euclid_dist2(q) == 0);
            }

            #[test]
            fn sides_partition(n in 2u32..20) {
                let l = LatticeBox::lambda(n);
                let left = l.boundary_sites(Side::Left);
                let right = l.boundary_sites(Side::Right);
                prop_assert!(left.iter().all(|s| !right.contains(s)));
                for side in [Side::Left, Side::Right, Side::Top, Side::Bottom] {
                    prop_assert_eq!(l.boundary_sites(side).len(), n as usize);
                }
            }
        }
    }
}

//! Site classification around an annulus and a per-sample color cache.

use crate::lattice::{Annulus, LatticeBox, TriCoord};
use crate::percolation::Coloring;

use super::ArmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tag {
    Domain,
    /// Inside the inner face.
    InnerX,
    /// Beyond the outer boundary.
    OuterX,
    /// Below the half-plane.
    SideX,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ArmDomain {
    pub annulus: Annulus,
    pub half: bool,
    pub bx: LatticeBox,
}

impl ArmDomain {
    pub fn new(annulus: Annulus, half: bool) -> Self {
        ArmDomain { annulus, half, bx: annulus.bounding_box() }
    }

    #[inline]
    pub fn tag(&self, s: TriCoord) -> Tag {
        if self.half && s.b < self.annulus.center.b {
            return Tag::SideX;
        }
        let l = self.annulus.layer(s);
        if l < self.annulus.inner_layer() {
            Tag::InnerX
        } else if l > self.annulus.outer_layer() {
            Tag::OuterX
        } else {
            Tag::Domain
        }
    }

    #[inline]
    pub fn is_inner(&self, s: TriCoord) -> bool {
        self.tag(s) == Tag::Domain
            && self.annulus.layer(s) == self.annulus.inner_layer()
            && (self.annulus.inner_layer() == 0
                || s.neighbors6().iter().any(|&t| self.tag(t) == Tag::InnerX))
    }

    #[inline]
    pub fn is_outer(&self, s: TriCoord) -> bool {
        self.tag(s) == Tag::Domain && self.annulus.layer(s) == self.annulus.outer_layer()
    }

    pub fn inner_sites(&self) -> Vec<TriCoord> {
        Annulus::layer_sites(self.annulus.center, self.annulus.inner_layer())
            .into_iter()
            .filter(|&s| self.is_inner(s))
            .collect()
    }

    /// Check the coloring covers every domain site; a half-plane domain must
    /// sit on the bottom line of the coloring's box.
    pub fn check_support(&self, support: LatticeBox) -> Result<(), ArmError> {
        let c = self.annulus.center;
        let r = self.annulus.r_out as i32 - 1;
        let (lo, hi) = if self.half {
            (c.offset((-r, 0)), c.offset((r, r)))
        } else {
            (c.offset((-r, -r)), c.offset((r, r)))
        };
        if !(support.contains(lo) && support.contains(hi)) {
            return Err(ArmError::OutsideSupport(self.annulus));
        }
        Ok(())
    }
}

/// Reusable buffers; one per worker thread.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    gen: u32,
    stamp: Vec<u32>,
    open: Vec<bool>,
    pub visit_gen: u32,
    pub visit: Vec<u32>,
    pub queue: Vec<u32>,
}

impl Scratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, len: usize) {
        if self.stamp.len() < len {
            self.stamp.resize(len, 0);
            self.open.resize(len, false);
            self.visit.resize(len, 0);
        }
        self.gen = self.gen.wrapping_add(1);
        if self.gen == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.gen = 1;
        }
    }

    /// Fresh visit generation for a traversal.
    pub fn next_visit(&mut self) -> u32 {
        self.visit_gen = self.visit_gen.wrapping_add(1);
        if self.visit_gen == 0 {
            self.visit.iter_mut().for_each(|s| *s = 0);
            self.visit_gen = 1;
        }
        self.visit_gen
    }
}

/// Memoized color lookups of domain sites.
pub(crate) struct Probe<'a, C: ?Sized> {
    col: &'a C,
    pub dom: ArmDomain,
    pub sc: &'a mut Scratch,
}

impl<'a, C: Coloring + ?Sized> Probe<'a, C> {
    pub fn new(col: &'a C, dom: ArmDomain, sc: &'a mut Scratch) -> Self {
        sc.reset(dom.bx.len());
        Probe { col, dom, sc }
    }

    /// Color of a site inside the annulus bounding box.
    #[inline]
    pub fn open(&mut self, s: TriCoord) -> bool {
        let i = self.dom.bx.index(s);
        if self.sc.stamp[i] != self.sc.gen {
            self.sc.stamp[i] = self.sc.gen;
            self.sc.open[i] = self.col.is_open(s);
        }
        self.sc.open[i]
    }
}

//! Site percolation configurations on parallelogram boxes.

mod cluster;
mod crossing;
mod interface;
mod io;

pub(crate) use cluster::diameter2;
pub use cluster::{label_clusters, BoundingBox, ClusterId, ClusterInfo, ClusterLabeling};
pub use crossing::{crossing_cluster_count, has_crossing, has_crossing_in, Direction};
pub use interface::{trace_interfaces, trace_interfaces_with_collar, DualEdge, InterfaceLoop};
pub use io::{read_configuration, write_configuration, ConfigIoError, MAGIC};

use serde::{Deserialize, Serialize};

use crate::lattice::{LatticeBox, TriCoord};
use crate::rng::{site_key, site_word, OpenRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Open,
    Closed,
}

impl Color {
    pub fn flip(self) -> Color {
        match self {
            Color::Open => Color::Closed,
            Color::Closed => Color::Open,
        }
    }

    pub fn from_open(open: bool) -> Color {
        if open {
            Color::Open
        } else {
            Color::Closed
        }
    }

    pub fn letter(self) -> char {
        match self {
            Color::Open => 'O',
            Color::Closed => 'C',
        }
    }

    pub fn from_letter(c: char) -> Option<Color> {
        match c {
            'O' | 'o' => Some(Color::Open),
            'C' | 'c' => Some(Color::Closed),
            _ => None,
        }
    }
}

/// Anything that can answer "is this site open?".
///
/// Implemented by materialized [`Configuration`]s and by
/// [`LazyConfiguration`], which evaluates the counter-based generator on
/// demand and therefore never allocates per-site storage.
pub trait Coloring {
    fn is_open(&self, s: TriCoord) -> bool;

    /// Box on which colors are meaningful.
    fn support(&self) -> LatticeBox;

    #[inline]
    fn color(&self, s: TriCoord) -> Color {
        Color::from_open(self.is_open(s))
    }
}

impl<T: Coloring + ?Sized> Coloring for &T {
    #[inline]
    fn is_open(&self, s: TriCoord) -> bool {
        (**self).is_open(s)
    }

    fn support(&self) -> LatticeBox {
        (**self).support()
    }
}

/// A sampled (or hand-built) configuration: one bit per site, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    bx: LatticeBox,
    /// Box whose row-major indexing keyed the generator. Equal to `bx` unless
    /// the configuration is a window cut out of a larger lazy sample.
    frame: LatticeBox,
    bits: Vec<u64>,
    pub seed: u64,
    pub p: f64,
}

impl Configuration {
    /// All sites closed.
    pub fn closed(bx: LatticeBox) -> Self {
        Configuration {
            bx,
            frame: bx,
            bits: vec![0; bx.len().div_ceil(64)],
            seed: 0,
            p: 0.5,
        }
    }

    pub fn open(bx: LatticeBox) -> Self {
        Self::from_fn(bx, |_| true)
    }

    pub fn from_fn(bx: LatticeBox, mut f: impl FnMut(TriCoord) -> bool) -> Self {
        let mut cfg = Self::closed(bx);
        for i in 0..bx.len() {
            if f(bx.site(i)) {
                cfg.bits[i / 64] |= 1 << (i % 64);
            }
        }
        cfg
    }

    pub fn from_open_sites(bx: LatticeBox, open: &[TriCoord]) -> Self {
        let mut cfg = Self::closed(bx);
        for &s in open {
            cfg.set(s, true);
        }
        cfg
    }

    /// Text picture with the top row (`b = side - 1`) first; `#`/`1` open,
    /// `.`/`0` closed. Whitespace is ignored.
    pub fn from_rows(rows: &[&str]) -> Self {
        let grid: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| {
                r.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| match c {
                        '#' | '1' => true,
                        '.' | '0' => false,
                        other => panic!("bad configuration character {other:?}"),
                    })
                    .collect()
            })
            .collect();
        let n = grid.len();
        assert!(grid.iter().all(|r| r.len() == n), "configuration picture must be square");
        let bx = LatticeBox::lambda(n as u32);
        Self::from_fn(bx, |s| grid[n - 1 - s.b as usize][s.a as usize])
    }

    /// Configuration number `code` of a box: bit `i` of `code` is site `i`.
    pub fn from_code(bx: LatticeBox, code: u64) -> Self {
        assert!(bx.len() <= 64);
        let mut cfg = Self::closed(bx);
        cfg.bits[0] = code;
        cfg
    }

    pub(crate) fn from_raw(bx: LatticeBox, bits: Vec<u64>, seed: u64, p: f64) -> Self {
        Configuration { bx, frame: bx, bits, seed, p }
    }

    #[inline]
    pub fn domain(&self) -> LatticeBox {
        self.bx
    }

    pub fn frame(&self) -> LatticeBox {
        self.frame
    }

    pub fn side(&self) -> u32 {
        self.bx.side
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn get(&self, s: TriCoord) -> bool {
        self.bx.try_index(s).is_some_and(|i| self.bit(i))
    }

    pub fn set(&mut self, s: TriCoord, open: bool) {
        let i = self.bx.index(s);
        if open {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn with(&self, s: TriCoord, open: bool) -> Self {
        let mut c = self.clone();
        c.set(s, open);
        c
    }

    pub fn open_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    /// Site-wise color swap.
    pub fn complement(&self) -> Self {
        let mut c = self.clone();
        for w in c.bits.iter_mut() {
            *w = !*w;
        }
        let tail = self.bx.len() % 64;
        if tail != 0 {
            *c.bits.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
        c
    }
}

impl Coloring for Configuration {
    #[inline]
    fn is_open(&self, s: TriCoord) -> bool {
        self.get(s)
    }

    fn support(&self) -> LatticeBox {
        self.bx
    }
}

/// Counter-keyed sampler: site colors computed on demand from `(seed, index)`.
#[derive(Debug, Clone, Copy)]
pub struct LazyConfiguration {
    frame: LatticeBox,
    key: u64,
    rule: OpenRule,
    pub seed: u64,
    pub p: f64,
}

impl LazyConfiguration {
    pub fn new(frame: LatticeBox, seed: u64, p: f64) -> Self {
        LazyConfiguration {
            frame,
            key: site_key(seed),
            rule: OpenRule::new(p),
            seed,
            p,
        }
    }

    pub fn frame(&self) -> LatticeBox {
        self.frame
    }

    /// Materialize a window of the sample. Bits agree with lazy evaluation.
    pub fn materialize(&self, window: LatticeBox) -> Configuration {
        assert!(self.frame.contains_box(&window), "window outside sampling frame");
        let mut cfg = Configuration::from_fn(window, |s| self.is_open(s));
        cfg.frame = self.frame;
        cfg.seed = self.seed;
        cfg.p = self.p;
        cfg
    }
}

impl Coloring for LazyConfiguration {
    #[inline]
    fn is_open(&self, s: TriCoord) -> bool {
        // Sites outside the frame still get a deterministic color from the
        // frame-relative index; callers keep queries inside the frame.
        let side = self.frame.side as i64;
        let idx = (s.b - self.frame.lo.b) as i64 * side + (s.a - self.frame.lo.a) as i64;
        self.rule.is_open(site_word(self.key, idx as u64))
    }

    fn support(&self) -> LatticeBox {
        self.frame
    }
}

/// Sample a configuration of `bx`: site `i` is open iff its counter-keyed
/// uniform word falls below `p · 2⁶⁴`.
pub fn sample(bx: LatticeBox, seed: u64, p: f64) -> Configuration {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    let lazy = LazyConfiguration::new(bx, seed, p);
    let mut bits = vec![0u64; bx.len().div_ceil(64)];
    for (i, w) in bits.iter_mut().enumerate() {
        let base = i * 64;
        let end = (base + 64).min(bx.len());
        let mut word = 0u64;
        for j in base..end {
            if lazy.rule.is_open(site_word(lazy.key, j as u64)) {
                word |= 1 << (j - base);
            }
        }
        *w = word;
    }
    Configuration::from_raw(bx, bits, seed, p)
}

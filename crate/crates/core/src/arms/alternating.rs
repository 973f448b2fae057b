//! Polychromatic arms from interface curves.
//!
//! An interface that enters the annulus from the inner face and leaves it
//! through the outer boundary is lined by an open arm on one side and a closed
//! arm on the other. The crossing interfaces cut the annulus into sectors of
//! alternating color; arms of a color only live in sectors of that color, so
//! a color sequence is realizable iff it embeds, in cyclic order, into the
//! sector word where sector `k` may supply up to `f_k` disjoint arms.

use std::collections::HashSet;

use super::domain::{ArmDomain, Probe, Scratch, Tag};
use super::mono::{connects, flow_count};
use super::{ArmError, ArmQuery, Sigma};
use crate::lattice::{Annulus, TriCoord};
use crate::percolation::{Color, Coloring};

pub(crate) struct CrossingInterface {
    angle: f64,
    left: Color,
    right: Color,
    /// `(left, right)` site pairs along the curve.
    edges: Vec<(TriCoord, TriCoord)>,
}

/// Interface curves from the inner face to the outer boundary, sorted
/// counterclockwise by the angle of their first face.
fn crossing_interfaces<C: Coloring + ?Sized>(p: &mut Probe<C>) -> Vec<CrossingInterface> {
    let dom = p.dom;
    let an = dom.annulus;
    if an.inner_layer() == 0 {
        return Vec::new();
    }
    let (cx, cy) = an.center.euclid();
    let max_steps = 6 * dom.bx.len() + 6;
    let mut out = Vec::new();
    for x in Annulus::layer_sites(an.center, an.inner_layer() - 1) {
        if dom.tag(x) != Tag::InnerX {
            continue;
        }
        for k in 0..6 {
            let q = x.step(k);
            let pp = x.step((k + 1) % 6);
            if dom.tag(q) != Tag::Domain || dom.tag(pp) != Tag::Domain {
                continue;
            }
            if p.open(q) == p.open(pp) {
                continue;
            }
            // Orientation with the inner-face site behind the first edge.
            let (mut l, mut r) = (pp, q);
            let left_open = p.open(l);
            let mut edges = Vec::new();
            let mut end = Tag::Domain;
            for _ in 0..max_steps {
                edges.push((l, r));
                let kk = l.direction_to(r).expect("interface sites are adjacent");
                let apex = l.step((kk + 1) % 6);
                match dom.tag(apex) {
                    Tag::Domain => {
                        if p.open(apex) == left_open {
                            l = apex;
                        } else {
                            r = apex;
                        }
                    }
                    other => {
                        end = other;
                        break;
                    }
                }
            }
            assert_ne!(end, Tag::Domain, "interface did not terminate");
            if end == Tag::OuterX {
                let (ax, ay) = x.euclid();
                let (bx_, by) = pp.euclid();
                let (qx, qy) = q.euclid();
                let gx = (ax + bx_ + qx) / 3.0 - cx;
                let gy = (ay + by + qy) / 3.0 - cy;
                out.push(CrossingInterface {
                    angle: gy.atan2(gx),
                    left: Color::from_open(left_open),
                    right: Color::from_open(!left_open),
                    edges,
                });
            }
        }
    }
    out.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    out
}

/// Sector colors counterclockwise, with a representative site per sector.
/// Full plane: sector `k` follows interface `k`. Half-plane: sector 0 precedes
/// the first interface.
fn sectors(cross: &[CrossingInterface], half: bool) -> Vec<(Color, TriCoord)> {
    let mut out = Vec::new();
    if half {
        if let Some(first) = cross.first() {
            out.push((first.right, first.edges[0].1));
        }
    }
    for (k, c) in cross.iter().enumerate() {
        if !half {
            let next = &cross[(k + 1) % cross.len()];
            debug_assert_eq!(c.left, next.right, "sector colors must alternate");
        }
        out.push((c.left, c.edges[0].0));
    }
    out
}

/// Whether `pattern` is a (cyclic, if requested) subsequence of the word in
/// which entry `k` repeats its color `mult[k]` times.
fn embeds(pattern: &[Color], word: &[(Color, usize)], cyclic: bool) -> bool {
    let cap = pattern.len();
    let expanded: Vec<Color> = word.iter().flat_map(|&(c, m)| std::iter::repeat(c).take(m.min(cap))).collect();
    if expanded.is_empty() {
        return false;
    }
    let starts = if cyclic { expanded.len() } else { 1 };
    (0..starts).any(|s| {
        let mut it = (0..expanded.len()).map(|i| expanded[(s + i) % expanded.len()]);
        pattern.iter().all(|&c| it.any(|w| w == c))
    })
}

fn has_runs(pattern: &[Color], cyclic: bool) -> bool {
    let j = pattern.len();
    let pairs = if cyclic { j } else { j - 1 };
    (0..pairs).any(|i| pattern[i] == pattern[(i + 1) % j])
}

pub(crate) fn arm_event<C: Coloring + ?Sized>(p: &mut Probe<C>, sigma: &Sigma) -> bool {
    let colors = sigma.colors();
    let j = colors.len();
    if j == 1 {
        return connects(p, colors[0]);
    }
    if sigma.is_constant() {
        return flow_count(p, colors[0], &|_| true, j) >= j;
    }
    let cross = crossing_interfaces(p);
    if cross.is_empty() {
        return false;
    }
    let half = p.dom.half;
    let cyclic = !half;
    let sec = sectors(&cross, half);
    // The event reads clockwise; sectors are stored counterclockwise.
    let pattern: Vec<Color> = colors.iter().rev().copied().collect();
    let word: Vec<(Color, usize)> = sec.iter().map(|&(c, _)| (c, 1)).collect();
    if embeds(&pattern, &word, cyclic) {
        return true;
    }
    if !has_runs(&pattern, cyclic) {
        return false;
    }
    let comp = sector_components(p.dom, &cross);
    let bx = p.dom.bx;
    let word: Vec<(Color, usize)> = sec
        .iter()
        .map(|&(c, rep)| {
            let id = comp[bx.index(rep)];
            (c, flow_count(p, c, &|i| comp[i] == id, j))
        })
        .collect();
    embeds(&pattern, &word, cyclic)
}

/// Flood fill of domain sites that does not step across crossing interfaces.
fn sector_components(dom: ArmDomain, cross: &[CrossingInterface]) -> Vec<u32> {
    let bx = dom.bx;
    let key = |a: TriCoord, b: TriCoord| {
        let (i, j) = (bx.index(a), bx.index(b));
        (i.min(j), i.max(j))
    };
    let blocked: HashSet<(usize, usize)> =
        cross.iter().flat_map(|c| c.edges.iter().map(|&(l, r)| key(l, r))).collect();
    let mut comp = vec![u32::MAX; bx.len()];
    let mut next = 0;
    for i in 0..bx.len() {
        let s = bx.site(i);
        if comp[i] != u32::MAX || dom.tag(s) != Tag::Domain {
            continue;
        }
        comp[i] = next;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for v in u.neighbors6() {
                if dom.tag(v) != Tag::Domain || blocked.contains(&key(u, v)) {
                    continue;
                }
                let jv = bx.index(v);
                if comp[jv] == u32::MAX {
                    comp[jv] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Whether disjoint arms with colors `query.sigma`, read clockwise, cross the
/// annulus. Half-plane queries read from the left end of the half annulus to
/// the right end.
pub fn has_alternating_arms<C: Coloring + ?Sized>(cfg: &C, query: &ArmQuery) -> Result<bool, ArmError> {
    let dom = ArmDomain::new(query.annulus, query.half_plane);
    if query.half_plane && !query.sigma.is_constant() && cfg.support().lo.b != query.annulus.center.b {
        return Err(ArmError::HalfPlaneNotAnchored);
    }
    dom.check_support(cfg.support())?;
    let mut sc = Scratch::new();
    let mut probe = Probe::new(cfg, dom, &mut sc);
    Ok(arm_event(&mut probe, &query.sigma))
}

/// Colors of the sectors cut out by crossing interfaces, clockwise. Empty
/// when no interface crosses (then only one color can have arms).
pub fn sector_word<C: Coloring + ?Sized>(cfg: &C, annulus: Annulus, half_plane: bool) -> Result<Vec<Color>, ArmError> {
    let dom = ArmDomain::new(annulus, half_plane);
    dom.check_support(cfg.support())?;
    let mut sc = Scratch::new();
    let mut probe = Probe::new(cfg, dom, &mut sc);
    let cross = crossing_interfaces(&mut probe);
    Ok(sectors(&cross, half_plane).into_iter().rev().map(|(c, _)| c).collect())
}

use serde::{Deserialize, Serialize};

use super::{Color, Configuration};
use crate::lattice::{LatticeBox, TriCoord};

/// Hexagonal dual edge between an open and a closed site, oriented so the
/// open site lies on the left of the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualEdge {
    pub open: TriCoord,
    pub closed: TriCoord,
}

impl DualEdge {
    /// Twice the midpoint in triangular coordinates (exact).
    fn twice_mid(self) -> (i64, i64) {
        (
            (self.open.a + self.closed.a) as i64,
            (self.open.b + self.closed.b) as i64,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceLoop {
    pub edges: Vec<DualEdge>,
    pub enclosed_color: Color,
}

impl InterfaceLoop {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Signed doubled area of the polygon through edge midpoints, in the affine
/// image `(2a + b, b)` (orientation preserving).
fn signed_area(edges: &[DualEdge]) -> i64 {
    let pts: Vec<(i64, i64)> = edges
        .iter()
        .map(|e| {
            let (a, b) = e.twice_mid();
            (2 * a + b, b)
        })
        .collect();
    let mut s = 0;
    for i in 0..pts.len() {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % pts.len()];
        s += x0 * y1 - x1 * y0;
    }
    s
}

/// Interface loops with every site outside the box treated as closed.
pub fn trace_interfaces(cfg: &Configuration) -> Vec<InterfaceLoop> {
    trace_interfaces_with_collar(cfg, Color::Closed)
}

/// Left-hand-rule tracing on the hexagonal dual, with a one-site collar of the
/// given color around the box. Loops are returned in order of their first
/// edge (row-major over the collared box, then direction).
pub fn trace_interfaces_with_collar(cfg: &Configuration, collar: Color) -> Vec<InterfaceLoop> {
    let bx = cfg.domain();
    let ext = LatticeBox::new(bx.lo.offset((-1, -1)), bx.side + 2);
    let is_open = |s: TriCoord| -> bool {
        if bx.contains(s) {
            cfg.get(s)
        } else {
            collar == Color::Open
        }
    };
    let is_interface = |o: TriCoord, c: TriCoord| {
        (bx.contains(o) || bx.contains(c)) && is_open(o) && !is_open(c)
    };
    let mut used = vec![false; ext.len() * 6];
    let mut loops = Vec::new();
    for i in 0..ext.len() {
        let o = ext.site(i);
        if !is_open(o) {
            continue;
        }
        for k in 0..6 {
            let c = o.step(k);
            if used[i * 6 + k] || !is_interface(o, c) {
                continue;
            }
            let mut edges = Vec::new();
            let (mut eo, mut ec, mut ek) = (o, c, k);
            loop {
                used[ext.index(eo) * 6 + ek] = true;
                edges.push(DualEdge { open: eo, closed: ec });
                let apex = eo.step((ek + 1) % 6);
                if is_open(apex) {
                    eo = apex;
                } else {
                    ec = apex;
                }
                ek = eo.direction_to(ec).expect("interface sites stay adjacent");
                if eo == o && ec == c {
                    break;
                }
            }
            let enclosed_color = if signed_area(&edges) > 0 {
                Color::Open
            } else {
                Color::Closed
            };
            loops.push(InterfaceLoop { edges, enclosed_color });
        }
    }
    loops
}

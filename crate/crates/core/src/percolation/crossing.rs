use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Color, Coloring, Configuration};
use crate::lattice::{LatticeBox, Side};

/// Crossing direction: left-to-right or top-to-bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    LR,
    TB,
}

impl Direction {
    fn sides(self) -> (Side, Side) {
        match self {
            Direction::LR => (Side::Left, Side::Right),
            Direction::TB => (Side::Top, Side::Bottom),
        }
    }
}

pub fn has_crossing(cfg: &Configuration, color: Color, direction: Direction) -> bool {
    has_crossing_in(cfg, cfg.domain(), color, direction)
}

/// Crossing of an arbitrary box under any coloring (e.g. a lazy sample).
pub fn has_crossing_in<C: Coloring + ?Sized>(
    col: &C,
    bx: LatticeBox,
    color: Color,
    direction: Direction,
) -> bool {
    let (from, to) = direction.sides();
    let mut seen = vec![false; bx.len()];
    let mut queue = VecDeque::new();
    for s in bx.boundary_sites(from) {
        if col.color(s) == color {
            seen[bx.index(s)] = true;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        if bx.on_side(s, to) {
            return true;
        }
        for t in s.neighbors6() {
            if let Some(j) = bx.try_index(t) {
                if !seen[j] && col.color(t) == color {
                    seen[j] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    false
}

/// Number of distinct clusters of `color` joining the two sides.
pub fn crossing_cluster_count(cfg: &Configuration, color: Color, direction: Direction) -> usize {
    let bx = cfg.domain();
    let (from, to) = direction.sides();
    let want = color == Color::Open;
    let mut seen = vec![false; bx.len()];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in bx.boundary_sites(from) {
        let i0 = bx.index(start);
        if seen[i0] || cfg.bit(i0) != want {
            continue;
        }
        seen[i0] = true;
        stack.push(start);
        let mut crosses = false;
        while let Some(s) = stack.pop() {
            crosses |= bx.on_side(s, to);
            for t in s.neighbors6() {
                if let Some(j) = bx.try_index(t) {
                    if !seen[j] && cfg.bit(j) == want {
                        seen[j] = true;
                        stack.push(t);
                    }
                }
            }
        }
        count += crosses as usize;
    }
    count
}

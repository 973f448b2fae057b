use super::ArmError;
use crate::lattice::{left_to_right, Side, TriCoord};
use crate::percolation::Configuration;

/// Open sites lying on every open left-right crossing, left to right.
///
/// Articulation points separating two virtual terminals (attached to the left
/// and right sides) found with one iterative DFS: a site on the tree path to
/// the right terminal separates iff no back edge from the subtree below it
/// climbs above it.
pub fn find_pivotals(cfg: &Configuration) -> Result<Vec<TriCoord>, ArmError> {
    let mut out = pivotal_chain(cfg)?;
    out.sort_by(left_to_right);
    Ok(out)
}

/// Pivotal sites in the order every left-right crossing meets them.
pub fn pivotal_chain(cfg: &Configuration) -> Result<Vec<TriCoord>, ArmError> {
    let bx = cfg.domain();
    let n = bx.len();
    let (left, right) = (n, n + 1);
    const UNSEEN: u32 = u32::MAX;
    let open_idx = |s: TriCoord| bx.try_index(s).filter(|&i| cfg.bit(i));
    let left_sites: Vec<usize> = bx.boundary_sites(Side::Left).into_iter().filter_map(open_idx).collect();
    let right_sites: Vec<usize> = bx.boundary_sites(Side::Right).into_iter().filter_map(open_idx).collect();
    // k-th neighbor slot of node v; None once slots are exhausted.
    let neighbor = |v: usize, k: usize| -> Option<Option<usize>> {
        if v == left {
            return left_sites.get(k).map(|&w| Some(w));
        }
        if v == right {
            return right_sites.get(k).map(|&w| Some(w));
        }
        let s = bx.site(v);
        match k {
            0..=5 => Some(open_idx(s.step(k))),
            6 => Some((s.a == bx.lo.a).then_some(left)),
            7 => Some((s.a == bx.hi_a()).then_some(right)),
            _ => None,
        }
    };
    let mut disc = vec![UNSEEN; n + 2];
    let mut low = vec![0u32; n + 2];
    let mut parent = vec![usize::MAX; n + 2];
    let mut time = 0u32;
    disc[left] = time;
    low[left] = time;
    let mut stack: Vec<(usize, usize)> = vec![(left, 0)];
    while let Some(top) = stack.last_mut() {
        let (v, k) = *top;
        match neighbor(v, k) {
            None => {
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                }
            }
            Some(w) => {
                top.1 += 1;
                let Some(w) = w else { continue };
                if disc[w] == UNSEEN {
                    time += 1;
                    disc[w] = time;
                    low[w] = time;
                    parent[w] = v;
                    stack.push((w, 0));
                } else if w != parent[v] {
                    low[v] = low[v].min(disc[w]);
                }
            }
        }
    }
    if disc[right] == UNSEEN {
        return Err(ArmError::NoCrossing);
    }
    let mut out = Vec::new();
    let (mut child, mut x) = (right, parent[right]);
    while x != left {
        if low[child] >= disc[x] {
            out.push(bx.site(x));
        }
        child = x;
        x = parent[x];
    }
    out.reverse();
    Ok(out)
}

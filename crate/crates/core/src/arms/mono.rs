use super::domain::{ArmDomain, Probe, Scratch, Tag};
use super::flow::FlowNet;
use super::ArmError;
use crate::lattice::Annulus;
use crate::percolation::{Color, Coloring};

/// Maximum number of vertex-disjoint `color` paths from the inner to the outer
/// boundary of the annulus (max-flow with unit site capacities).
pub fn count_disjoint_monochromatic<C: Coloring + ?Sized>(
    cfg: &C,
    annulus: Annulus,
    color: Color,
) -> Result<usize, ArmError> {
    count_disjoint_arms(cfg, annulus, false, color)
}

/// As [`count_disjoint_monochromatic`], optionally restricted to the upper
/// half-plane through the annulus center.
pub fn count_disjoint_arms<C: Coloring + ?Sized>(
    cfg: &C,
    annulus: Annulus,
    half_plane: bool,
    color: Color,
) -> Result<usize, ArmError> {
    let dom = ArmDomain::new(annulus, half_plane);
    dom.check_support(cfg.support())?;
    let mut sc = Scratch::new();
    let mut probe = Probe::new(cfg, dom, &mut sc);
    Ok(flow_count(&mut probe, color, &|_| true, usize::MAX))
}

/// Flow count over domain sites of `color` accepted by `allow` (bbox index).
pub(crate) fn flow_count<C: Coloring + ?Sized>(
    p: &mut Probe<C>,
    color: Color,
    allow: &dyn Fn(usize) -> bool,
    limit: usize,
) -> usize {
    let dom = p.dom;
    let bx = dom.bx;
    const NONE: u32 = u32::MAX;
    let mut node = vec![NONE; bx.len()];
    let mut sites = Vec::new();
    for i in 0..bx.len() {
        let s = bx.site(i);
        if dom.tag(s) == Tag::Domain && allow(i) && p.open(s) == (color == Color::Open) {
            node[i] = sites.len() as u32;
            sites.push(s);
        }
    }
    let n = sites.len();
    let (src, sink) = (2 * n, 2 * n + 1);
    let mut net = FlowNet::new(2 * n + 2);
    for (k, &s) in sites.iter().enumerate() {
        net.add_edge(2 * k, 2 * k + 1, 1);
        if dom.is_inner(s) {
            net.add_edge(src, 2 * k, 1);
        }
        if dom.is_outer(s) {
            net.add_edge(2 * k + 1, sink, 1);
        }
        for t in s.neighbors6() {
            if let Some(j) = bx.try_index(t) {
                if node[j] != NONE {
                    net.add_edge(2 * k + 1, 2 * node[j] as usize, 1);
                }
            }
        }
    }
    net.max_flow(src, sink, limit)
}

/// Whether some `color` path joins the inner and outer boundaries.
pub(crate) fn connects<C: Coloring + ?Sized>(p: &mut Probe<C>, color: Color) -> bool {
    let want = color == Color::Open;
    let dom = p.dom;
    let gen = p.sc.next_visit();
    let mut queue = std::mem::take(&mut p.sc.queue);
    queue.clear();
    for s in dom.inner_sites() {
        if p.open(s) == want {
            p.sc.visit[dom.bx.index(s)] = gen;
            queue.push(dom.bx.index(s) as u32);
        }
    }
    let mut head = 0;
    let mut found = false;
    while head < queue.len() {
        let s = dom.bx.site(queue[head] as usize);
        head += 1;
        if dom.is_outer(s) {
            found = true;
            break;
        }
        for t in s.neighbors6() {
            if dom.tag(t) != Tag::Domain {
                continue;
            }
            let j = dom.bx.index(t);
            if p.sc.visit[j] != gen && p.open(t) == want {
                p.sc.visit[j] = gen;
                queue.push(j as u32);
            }
        }
    }
    p.sc.queue = queue;
    found
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use perc_lab::arms::count_disjoint_arms;
use perc_lab::ghtool::{covering_radius, gh_exact_small, gh_upper_by_embedding, FiniteMetricSpace, EXACT_CAP};
use perc_lab::lattice::{Annulus, LatticeBox, Side, TriCoord};
use perc_lab::percolation::{has_crossing, label_clusters, sample, Color, Configuration, Direction};
use perc_lab::resistance::{effective_resistance, effective_resistance_exact, resistance_between, ClusterGraph, ResistanceProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain BFS crossing test between two sides of the configuration's box.
pub fn bfs_crossing(cfg: &Configuration, color: Color, from: Side, to: Side) -> bool {
    let bx = cfg.domain();
    let want = color == Color::Open;
    let mut seen = vec![false; bx.len()];
    let mut queue: VecDeque<TriCoord> = VecDeque::new();
    for s in bx.sites().filter(|&s| bx.on_side(s, from) && cfg.get(s) == want) {
        seen[bx.index(s)] = true;
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        if bx.on_side(s, to) {
            return true;
        }
        for t in s.neighbors6() {
            if bx.contains(t) && cfg.get(t) == want && !seen[bx.index(t)] {
                seen[bx.index(t)] = true;
                queue.push_back(t);
            }
        }
    }
    false
}

/// All 512 configurations of Λ_3: duality failures plus disagreements with BFS.
pub fn crossing_exhaustive() -> (u64, u64) {
    let bx = LatticeBox::lambda(3);
    let mut exceptions = 0;
    for code in 0..512u64 {
        let cfg = Configuration::from_code(bx, code);
        let open = has_crossing(&cfg, Color::Open, Direction::LR);
        let closed = has_crossing(&cfg, Color::Closed, Direction::TB);
        let ok = open != closed
            && open == bfs_crossing(&cfg, Color::Open, Side::Left, Side::Right)
            && closed == bfs_crossing(&cfg, Color::Closed, Side::Top, Side::Bottom);
        exceptions += !ok as u64;
    }
    (512, exceptions)
}

/// Sites of the closed annulus between sup layers `r_in - 1` and `r_out - 1`,
/// cut to the upper half-plane when asked.
fn arm_domain(ann: &Annulus, half: bool) -> Vec<TriCoord> {
    let c = ann.center;
    let (lo, hi) = (ann.r_in - 1, ann.r_out - 1);
    let r = hi as i32;
    let mut out = Vec::new();
    for b in -r..=r {
        for a in -r..=r {
            let s = TriCoord::new(c.a + a, c.b + b);
            let l = s.sup_dist(c);
            if l >= lo && l <= hi && (!half || s.b >= c.b) {
                out.push(s);
            }
        }
    }
    out
}

/// Annuli around the origin whose arm domain has at most `max_sites` sites.
pub fn small_annuli(max_sites: usize) -> Vec<(Annulus, bool)> {
    let mut out = Vec::new();
    for r_out in 2..12 {
        for r_in in 1..r_out {
            for half in [false, true] {
                let ann = Annulus::new(TriCoord::ORIGIN, r_in, r_out);
                if arm_domain(&ann, half).len() <= max_sites {
                    out.push((ann, half));
                }
            }
        }
    }
    out
}

/// Most vertex-disjoint `color` paths from the inner face to the outer layer,
/// by exhaustive search over path systems.
pub fn brute_disjoint_arms(cfg: &Configuration, ann: &Annulus, half: bool, color: Color) -> usize {
    let want = color == Color::Open;
    let c = ann.center;
    let (lo, hi) = (ann.r_in - 1, ann.r_out - 1);
    let sites: Vec<TriCoord> = arm_domain(ann, half).into_iter().filter(|&s| cfg.get(s) == want).collect();
    assert!(sites.len() <= 64);
    let inner: Vec<bool> = sites
        .iter()
        .map(|&s| {
            s.sup_dist(c) == lo
                && (lo == 0 || s.neighbors6().iter().any(|t| t.sup_dist(c) < lo && (!half || t.b >= c.b)))
        })
        .collect();
    let outer: Vec<bool> = sites.iter().map(|&s| s.sup_dist(c) == hi).collect();
    let adj: Vec<u64> = sites
        .iter()
        .map(|&s| sites.iter().enumerate().filter(|(_, &t)| s.is_adjacent(t)).fold(0u64, |m, (j, _)| m | 1 << j))
        .collect();
    let inner_mask = (0..sites.len()).filter(|&i| inner[i]).fold(0u64, |m, i| m | 1 << i);
    let all = if sites.len() == 64 { u64::MAX } else { (1u64 << sites.len()) - 1 };

    struct Ctx<'a> {
        adj: &'a [u64],
        outer: &'a [bool],
        inner_mask: u64,
        memo: HashMap<u64, usize>,
    }
    // Every simple path from `at` that ends on its first outer site and
    // touches no other inner site.
    fn paths(ctx: &Ctx, at: usize, avail: u64, used: u64, out: &mut Vec<u64>) {
        let used = used | 1 << at;
        if ctx.outer[at] {
            out.push(used);
            return;
        }
        let mut next = ctx.adj[at] & avail & !used & !ctx.inner_mask;
        while next != 0 {
            let j = next.trailing_zeros() as usize;
            next &= next - 1;
            paths(ctx, j, avail, used, out);
        }
    }
    fn best(ctx: &mut Ctx, avail: u64) -> usize {
        let starts = avail & ctx.inner_mask;
        if starts == 0 {
            return 0;
        }
        if let Some(&v) = ctx.memo.get(&avail) {
            return v;
        }
        let s = starts.trailing_zeros() as usize;
        let mut res = best(ctx, avail & !(1 << s));
        let mut ps = Vec::new();
        paths(ctx, s, avail, 0, &mut ps);
        for p in ps {
            res = res.max(1 + best(ctx, avail & !p));
        }
        ctx.memo.insert(avail, res);
        res
    }
    let mut ctx = Ctx { adj: &adj, outer: &outer, inner_mask, memo: HashMap::new() };
    best(&mut ctx, all)
}

/// Max-flow arm counts against the brute force on every small annulus:
/// `(instances, failures)`. Domains of at most 12 sites are enumerated.
pub fn menger_check(max_sites: usize, random_per_annulus: usize, seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut instances, mut failures) = (0u64, 0u64);
    for (ann, half) in small_annuli(max_sites) {
        let bx = ann.bounding_box();
        let dom = arm_domain(&ann, half);
        let exhaustive = dom.len() <= 12;
        let total = if exhaustive { 1usize << dom.len() } else { random_per_annulus };
        for code in 0..total {
            let base: u64 = rng.gen();
            let cfg = Configuration::from_fn(bx, |s| match dom.iter().position(|&t| t == s) {
                Some(k) if exhaustive => code >> k & 1 == 1,
                _ => perc_lab::rng::mix64(base ^ bx.index(s) as u64) & 1 == 1,
            });
            for color in [Color::Open, Color::Closed] {
                let fast = count_disjoint_arms(&cfg, ann, half, color).unwrap();
                let slow = brute_disjoint_arms(&cfg, &ann, half, color);
                instances += 1;
                failures += (fast != slow) as u64;
            }
        }
    }
    (instances, failures)
}

fn bfs_layers(g: &ClusterGraph, from: usize) -> Vec<u32> {
    let mut d = vec![u32::MAX; g.len()];
    d[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(x) = q.pop_front() {
        for &y in g.neighbors(x) {
            if d[y as usize] == u32::MAX {
                d[y as usize] = d[x] + 1;
                q.push_back(y as usize);
            }
        }
    }
    d
}

fn cg(g: &ClusterGraph, x: TriCoord, y: TriCoord) -> f64 {
    resistance_between(g, &[x], &[y], 1e-12, 1_000_000).unwrap()
}

pub struct ResistanceCheck {
    pub instances: u64,
    pub max_rel_err: f64,
    pub law_failures: u64,
    pub series_checked: u64,
    pub rayleigh_checked: u64,
}

/// CG against elimination on random open clusters of at most `cap` sites,
/// with the lower bound, geodesic upper bound, cutset (parallel) bound,
/// Rayleigh monotonicity and the series law checked on each.
pub fn resistance_check(instances: u64, cap: usize, seed: u64) -> ResistanceCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ResistanceCheck { instances: 0, max_rel_err: 0.0, law_failures: 0, series_checked: 0, rayleigh_checked: 0 };
    let mut sample_seed = seed << 20;
    while out.instances < instances {
        sample_seed += 1;
        let cfg = sample(LatticeBox::lambda(64), sample_seed, 0.5);
        let lab = label_clusters(&cfg);
        let Some(info) = lab.clusters().iter().filter(|c| c.id.color == Color::Open && c.size >= 3 && c.size <= cap).max_by_key(|c| c.size) else {
            continue;
        };
        let id = info.id;
        let g = ClusterGraph::from_cluster(&lab, id);
        let m = g.sites();
        let (ix, iy) = (rng.gen_range(0..m.len()), rng.gen_range(0..m.len()));
        if ix == iy {
            continue;
        }
        let (x, y) = (m[ix], m[iy]);
        let p = ResistanceProblem::pair(id, x, y);
        let r = effective_resistance(&lab, &p).unwrap();
        let exact = effective_resistance_exact(&lab, &p).unwrap();
        out.max_rel_err = out.max_rel_err.max((r - exact).abs() / exact);
        out.instances += 1;

        let mut ok = r >= 1.0 / 6.0 - 1e-12;
        let d = bfs_layers(&g, ix);
        ok &= r <= d[iy] as f64 + 1e-9;
        // Disjoint cutsets between consecutive BFS spheres.
        let mut cuts = vec![0u64; d[iy] as usize];
        for k in 0..g.len() {
            for &j in g.neighbors(k) {
                let (a, b) = (d[k], d[j as usize]);
                if b == a + 1 && (a as usize) < cuts.len() {
                    cuts[a as usize] += 1;
                }
            }
        }
        ok &= r >= cuts.iter().map(|&c| 1.0 / c as f64).sum::<f64>() - 1e-9;

        // Rayleigh: closing a third site never lowers the resistance.
        let z = m[rng.gen_range(0..m.len())];
        if z != x && z != y {
            let sub = label_clusters(&lab.config().with(z, false));
            if sub.same_cluster(x, y) {
                let r2 = effective_resistance(&sub, &ResistanceProblem::pair(sub.label(x).unwrap(), x, y)).unwrap();
                ok &= r2 >= r - 1e-9 * r;
                out.rayleigh_checked += 1;
            }
        }
        // Series: through a cut vertex on a shortest path.
        let dy = bfs_layers(&g, iy);
        let pivot = (0..g.len()).filter(|&k| k != ix && k != iy && d[k] + dy[k] == d[iy]).find(|&k| {
            let h = g.without(&[m[k]]);
            let (hx, hy) = (h.node(x).unwrap(), h.node(y).unwrap());
            bfs_layers(&h, hx)[hy] == u32::MAX
        });
        if let Some(k) = pivot {
            let sum = cg(&g, x, m[k]) + cg(&g, m[k], y);
            ok &= (sum - cg(&g, x, y)).abs() <= 1e-8 * sum;
            out.series_checked += 1;
        }
        out.law_failures += !ok as u64;
    }
    out
}

fn random_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetricSpace {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
    // Shortest paths over random weights on the complete graph.
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.gen_range(0.1..2.0);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = f64::min(d[i][j], d[i][k] + d[k][j]);
            }
        }
    }
    FiniteMetricSpace::new((0..n as u64).collect(), d, Some(pts)).unwrap()
}

pub struct GhCheck {
    pub instances: u64,
    pub two_point_failures: u64,
    pub identity_failures: u64,
    pub dominance_failures: u64,
}

pub fn gh_check(instances: u64, seed: u64) -> GhCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GhCheck { instances: 0, two_point_failures: 0, identity_failures: 0, dominance_failures: 0 };
    for _ in 0..200 {
        let (a, b) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let x = FiniteMetricSpace::on_line(&[0.0, a]);
        let y = FiniteMetricSpace::on_line(&[0.0, b]);
        out.two_point_failures += (gh_exact_small(&x, &y).unwrap() - (a - b).abs() / 2.0).abs().gt(&1e-12) as u64;
    }
    for k in 1..=6 {
        let x = random_space(&mut rng, k);
        out.identity_failures += (gh_exact_small(&x, &x).unwrap() != 0.0) as u64;
    }
    while out.instances < instances {
        let (m, k) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        if m * k > EXACT_CAP {
            continue;
        }
        let (x, y) = (random_space(&mut rng, m), random_space(&mut rng, k));
        let exact = gh_exact_small(&x, &y).unwrap();
        let radius = covering_radius(&x, &y).unwrap() * rng.gen_range(1.0..2.0);
        let upper = gh_upper_by_embedding(&x, &y, radius).unwrap();
        out.dominance_failures += (upper < exact - 1e-12) as u64;
        out.instances += 1;
    }
    out
}

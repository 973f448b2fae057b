//! Simple random walk on open clusters: exact return probabilities, expected
//! exit times, one-arm conditioned environments standing in for the incipient
//! infinite cluster, and Monte-Carlo walks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeBox, TriCoord};
use crate::percolation::{label_clusters, ClusterId, ClusterLabeling, Color, Coloring, LazyConfiguration};
use crate::resistance::{pcg, ClusterGraph};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::stats::{ols, FitError, LinearFit};

pub const DEFAULT_EXACT_CAP: usize = 500_000;
pub const DEFAULT_R_FACTOR: u32 = 128;
const MAX_ATTEMPTS: u64 = 10_000_000;
const EXIT_TOLERANCE: f64 = 1e-10;
const EXIT_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("start site {0} is closed")]
    ClosedStart(TriCoord),
    #[error("cluster has {size} sites, above the exact cap {cap}; shrink the cluster or use Monte-Carlo walks")]
    TooLarge { size: usize, cap: usize },
    #[error("the start's cluster never reaches distance {0}")]
    NoExit(u32),
    #[error("exit-time solve stalled, relative residual {0:e}")]
    NoConvergence(f64),
    #[error("R_factor must be at least 100, got {0}")]
    SmallFactor(u32),
    #[error("one-arm conditioning accepted {accepted} of {attempts} attempts")]
    Stalled { attempts: u64, accepted: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conditioning {
    None,
    /// The start is joined to sup distance `radius - 1` in the full sample.
    OneArm { radius: u32 },
}

#[derive(Debug, Clone)]
pub struct WalkEnvironment {
    pub labeling: ClusterLabeling,
    pub start: TriCoord,
    pub cluster_id: ClusterId,
    pub conditioning: Conditioning,
    /// Rejection-sampling attempts used to build it (1 when unconditioned).
    pub attempts: u64,
    graph: ClusterGraph,
}

impl WalkEnvironment {
    pub fn new(labeling: ClusterLabeling, start: TriCoord, conditioning: Conditioning) -> Result<Self, WalkError> {
        let cluster_id = labeling.label(start).filter(|id| id.color == Color::Open).ok_or(WalkError::ClosedStart(start))?;
        let graph = ClusterGraph::from_cluster(&labeling, cluster_id);
        Ok(WalkEnvironment { labeling, start, cluster_id, conditioning, attempts: 1, graph })
    }

    pub fn graph(&self) -> &ClusterGraph {
        &self.graph
    }

    fn start_node(&self) -> usize {
        self.graph.node(self.start).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeUnit {
    DiscreteStep,
    /// Variable-speed walk jumping to each open neighbor at rate `b_n`.
    VsrwRate { b_n: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub p_return: Vec<f64>,
    pub exit_times: Vec<(u32, f64)>,
    pub time_unit: TimeUnit,
}

/// `b_n = n² Â₁(1, n) q_n^res`.
pub fn vsrw_rate(n: u32, one_arm_hat: f64, q_res: f64) -> f64 {
    (n as f64).powi(2) * one_arm_hat * q_res
}

/// Row `x` of the walk kernel: uniform over neighbors, a unit self-loop at
/// isolated sites.
pub fn kernel_row<T: Scalar>(g: &ClusterGraph, x: usize) -> Vec<(usize, T)> {
    let nb = g.neighbors(x);
    if nb.is_empty() {
        return vec![(x, T::one())];
    }
    let w = T::one() / T::from_usize_lossless(nb.len());
    nb.iter().map(|&y| (y as usize, w.clone())).collect()
}

/// `p_{2t}(start, start)` for `t = 0..=t_max` by iterating `v ← vP`.
pub fn return_probabilities<T: Scalar>(g: &ClusterGraph, start: usize, t_max: usize) -> Vec<T> {
    let n = g.len();
    let rows: Vec<Vec<(usize, T)>> = (0..n).map(|x| kernel_row(g, x)).collect();
    let mut v = vec![T::zero(); n];
    v[start] = T::one();
    let mut next = vec![T::zero(); n];
    let mut out = vec![T::one()];
    for step in 1..=2 * t_max {
        next.iter_mut().for_each(|x| *x = T::zero());
        for x in 0..n {
            if v[x] == T::zero() {
                continue;
            }
            for (y, w) in &rows[x] {
                next[*y] = next[*y].clone() + v[x].clone() * w.clone();
            }
        }
        std::mem::swap(&mut v, &mut next);
        if step % 2 == 0 {
            out.push(v[start].clone());
        }
    }
    out
}

pub fn return_probability_series(env: &WalkEnvironment, t_max: usize) -> Result<Vec<f64>, WalkError> {
    return_probability_series_capped(env, t_max, DEFAULT_EXACT_CAP)
}

pub fn return_probability_series_capped(env: &WalkEnvironment, t_max: usize, cap: usize) -> Result<Vec<f64>, WalkError> {
    if env.graph.len() > cap {
        return Err(WalkError::TooLarge { size: env.graph.len(), cap });
    }
    Ok(return_probabilities(&env.graph, env.start_node(), t_max))
}

/// Interior nodes reachable from the start without crossing the exit set,
/// and whether any exit node borders them.
fn exit_region(g: &ClusterGraph, start: usize, is_exit: &dyn Fn(usize) -> bool) -> (Vec<usize>, bool) {
    let mut seen = vec![false; g.len()];
    let mut order = vec![start];
    seen[start] = true;
    let mut touches = false;
    let mut head = 0;
    while head < order.len() {
        let x = order[head];
        head += 1;
        for &y in g.neighbors(x) {
            let y = y as usize;
            if is_exit(y) {
                touches = true;
            } else if !seen[y] {
                seen[y] = true;
                order.push(y);
            }
        }
    }
    (order, touches)
}

/// Expected steps before the walk from the start first reaches sup distance
/// `radius`: solves `L u = deg` off the exit set with `u = 0` on it.
pub fn expected_exit_time(env: &WalkEnvironment, radius: u32) -> Result<f64, WalkError> {
    let g = &env.graph;
    let start = env.start_node();
    let is_exit = |x: usize| g.sites()[x].sup_dist(env.start) >= radius;
    if is_exit(start) {
        return Ok(0.0);
    }
    let (region, touches) = exit_region(g, start, &is_exit);
    if !touches {
        return Err(WalkError::NoExit(radius));
    }
    let mut local = vec![u32::MAX; g.len()];
    for (i, &x) in region.iter().enumerate() {
        local[x] = i as u32;
    }
    let diag: Vec<f64> = region.iter().map(|&x| g.degree(x) as f64).collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        for (i, &x) in region.iter().enumerate() {
            let mut acc = diag[i] * v[i];
            for &y in g.neighbors(x) {
                let j = local[y as usize];
                if j != u32::MAX {
                    acc -= v[j as usize];
                }
            }
            out[i] = acc;
        }
    };
    let out = pcg(apply, &diag, &diag, EXIT_TOLERANCE, EXIT_MAX_ITERS);
    if !out.converged {
        return Err(WalkError::NoConvergence(out.residual));
    }
    Ok(out.x[0])
}

/// Return probabilities and exit times in discrete steps.
pub fn walk_stats(env: &WalkEnvironment, t_max: usize, radii: &[u32]) -> Result<WalkStats, WalkError> {
    Ok(WalkStats {
        p_return: return_probability_series(env, t_max)?,
        exit_times: radii.iter().map(|&r| expected_exit_time(env, r).map(|e| (r, e))).collect::<Result<_, _>>()?,
        time_unit: TimeUnit::DiscreteStep,
    })
}

/// Per-sample exploration state: 0 unknown, 1 closed, 2 open, 3 queued.
struct Explorer {
    state: Vec<u8>,
    touched: Vec<u32>,
    queue: Vec<u32>,
}

impl Explorer {
    fn new(len: usize) -> Self {
        Explorer { state: vec![0; len], touched: Vec::new(), queue: Vec::new() }
    }

    /// Whether the origin of `cfg`'s frame center reaches sup distance `radius - 1`.
    fn one_arm(&mut self, cfg: &LazyConfiguration, center: TriCoord, radius: u32) -> bool {
        let bx = cfg.frame();
        for &i in &self.touched {
            self.state[i as usize] = 0;
        }
        self.touched.clear();
        self.queue.clear();
        if !cfg.is_open(center) {
            return false;
        }
        let c = bx.index(center) as u32;
        self.state[c as usize] = 3;
        self.touched.push(c);
        self.queue.push(c);
        let mut head = 0;
        while head < self.queue.len() {
            let s = bx.site(self.queue[head] as usize);
            head += 1;
            if s.sup_dist(center) + 1 >= radius {
                return true;
            }
            for t in s.neighbors6() {
                let j = bx.index(t);
                if self.state[j] == 0 {
                    self.touched.push(j as u32);
                    if cfg.is_open(t) {
                        self.state[j] = 3;
                        self.queue.push(j as u32);
                    } else {
                        self.state[j] = 1;
                    }
                }
            }
        }
        false
    }
}

/// Environment on the closed ball `B(0, r)` drawn from the law of a sample
/// conditioned on an open arm from the origin to sup distance `R - 1`,
/// `R = r_factor · r`. Attempt `i` uses seed `derive_seed(seed, R, i)`.
pub fn sample_iic_environment(r: u32, r_factor: u32, seed: u64) -> Result<WalkEnvironment, WalkError> {
    if r_factor < 100 {
        return Err(WalkError::SmallFactor(r_factor));
    }
    let big = r * r_factor;
    let frame = LatticeBox::ball(TriCoord::ORIGIN, big);
    let mut ex = Explorer::new(frame.len());
    let mut attempts = 0u64;
    loop {
        let cfg = LazyConfiguration::new(frame, derive_seed(seed, big as u64, attempts), 0.5);
        attempts += 1;
        if ex.one_arm(&cfg, TriCoord::ORIGIN, big) {
            let window = LatticeBox::closed_ball(TriCoord::ORIGIN, r);
            let lab = label_clusters(&cfg.materialize(window));
            let mut env = WalkEnvironment::new(lab, TriCoord::ORIGIN, Conditioning::OneArm { radius: big })?;
            env.attempts = attempts;
            return Ok(env);
        }
        // Nothing accepted yet, so the rate is below any positive threshold.
        if attempts >= MAX_ATTEMPTS {
            return Err(WalkError::Stalled { attempts, accepted: 0 });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkMonteCarlo {
    pub n_walks: u64,
    /// Empirical `p_{2t}` for `t = 0..=t_max`, with standard errors.
    pub p_return: Vec<f64>,
    pub p_return_se: Vec<f64>,
    /// Mean steps to reach the exit radius, with its standard error.
    pub exit_time: Option<(f64, f64)>,
    /// Mean exit time of the variable-speed walk (holding times `Exp(deg)`).
    pub exit_time_vsrw: Option<(f64, f64)>,
}

fn mean_se(sum: f64, sum2: f64, n: f64) -> (f64, f64) {
    let m = sum / n;
    let var = (sum2 / n - m * m).max(0.0) * n / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Monte-Carlo walks; walk `k` uses seed `derive_seed(seed, 0, k)`.
pub fn simulate_walk_paths(
    env: &WalkEnvironment,
    n_walks: u64,
    t_max: usize,
    exit_radius: Option<u32>,
    seed: u64,
) -> WalkMonteCarlo {
    assert!(n_walks >= 1);
    let g = &env.graph;
    let start = env.start_node();
    if let Some(r) = exit_radius {
        let is_exit = |x: usize| g.sites()[x].sup_dist(env.start) >= r;
        assert!(is_exit(start) || exit_region(g, start, &is_exit).1, "cluster never reaches the exit radius");
    }
    struct Acc {
        returns: Vec<u64>,
        tau: [f64; 2],
        tau_c: [f64; 2],
    }
    let zero = || Acc { returns: vec![0; t_max + 1], tau: [0.0; 2], tau_c: [0.0; 2] };
    let acc = (0..n_walks)
        .into_par_iter()
        .fold(zero, |mut acc, k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, k));
            let mut x = start;
            acc.returns[0] += 1;
            for step in 1..=2 * t_max {
                let nb = g.neighbors(x);
                if !nb.is_empty() {
                    x = nb[rng.gen_range(0..nb.len())] as usize;
                }
                if step % 2 == 0 && x == start {
                    acc.returns[step / 2] += 1;
                }
            }
            if let Some(r) = exit_radius {
                let (mut x, mut steps, mut clock) = (start, 0u64, 0.0f64);
                while g.sites()[x].sup_dist(env.start) < r {
                    let nb = g.neighbors(x);
                    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                    clock += -u.ln() / nb.len() as f64;
                    x = nb[rng.gen_range(0..nb.len())] as usize;
                    steps += 1;
                }
                acc.tau[0] += steps as f64;
                acc.tau[1] += (steps as f64).powi(2);
                acc.tau_c[0] += clock;
                acc.tau_c[1] += clock * clock;
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.returns.iter_mut().zip(&b.returns) {
                *x += y;
            }
            for k in 0..2 {
                a.tau[k] += b.tau[k];
                a.tau_c[k] += b.tau_c[k];
            }
            a
        });
    let n = n_walks as f64;
    let p: Vec<f64> = acc.returns.iter().map(|&c| c as f64 / n).collect();
    let se = p.iter().map(|&q| (q * (1.0 - q) / n).sqrt()).collect();
    WalkMonteCarlo {
        n_walks,
        p_return: p,
        p_return_se: se,
        exit_time: exit_radius.map(|_| mean_se(acc.tau[0], acc.tau[1], n)),
        exit_time_vsrw: exit_radius.map(|_| mean_se(acc.tau_c[0], acc.tau_c[1], n)),
    }
}

/// `d_s = −2 · slope` of `log p_{2t}` against `log t` over `t_lo..=t_hi`.
pub fn fit_spectral_dimension(p_return: &[f64], t_lo: usize, t_hi: usize) -> Result<(f64, LinearFit), FitError> {
    let ts: Vec<f64> = (t_lo.max(1)..=t_hi.min(p_return.len() - 1)).map(|t| t as f64).collect();
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let p = p_return[t as usize];
            if p > 0.0 {
                Ok(p.ln())
            } else {
                Err(FitError::NonPositive(p))
            }
        })
        .collect::<Result<_, _>>()?;
    let fit = ols(&xs, &ys)?;
    Ok((-2.0 * fit.slope, fit))
}

#[cfg(test)]
mod tests;

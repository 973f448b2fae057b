//! Effective resistance on unit-conductance cluster graphs.
//!
//! The source set is contracted to a node at potential 1 and the sink set to
//! a node at potential 0 (the grounding); the remaining potentials solve the
//! reduced Laplacian system and the resistance is the inverse Dirichlet energy.

mod cg;
mod elimination;
mod graph;

pub use graph::ClusterGraph;

pub(crate) use cg::pcg;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::TriCoord;
use crate::metrics::MetricSample;
use crate::percolation::{ClusterId, ClusterLabeling};
use crate::scalar::{Real, Scalar};
use elimination::Network;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100_000;
pub const DEFAULT_EXACT_CAP: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum ResistanceError {
    #[error("source and sink sets must be nonempty")]
    EmptySet,
    #[error("site {0} is in both the source and the sink set")]
    Overlap(TriCoord),
    #[error("site {0} is not in the cluster")]
    NotInCluster(TriCoord),
    #[error("conjugate gradients stalled after {iterations} iterations, relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("cluster has {size} sites, above the exact-solver cap {cap}")]
    TooLarge { size: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceProblem {
    pub cluster: ClusterId,
    pub source: Vec<TriCoord>,
    pub sink: Vec<TriCoord>,
    pub tolerance: f64,
    pub max_iters: usize,
}

impl ResistanceProblem {
    pub fn new(cluster: ClusterId, source: Vec<TriCoord>, sink: Vec<TriCoord>) -> Self {
        ResistanceProblem { cluster, source, sink, tolerance: DEFAULT_TOLERANCE, max_iters: DEFAULT_MAX_ITERS }
    }

    pub fn pair(cluster: ClusterId, x: TriCoord, y: TriCoord) -> Self {
        Self::new(cluster, vec![x], vec![y])
    }
}

/// Node roles after contraction.
#[derive(Clone, Copy, PartialEq)]
enum Role {
    Source,
    Sink,
    Free(u32),
}

fn roles(g: &ClusterGraph, source: &[TriCoord], sink: &[TriCoord]) -> Result<(Vec<Role>, usize), ResistanceError> {
    if source.is_empty() || sink.is_empty() {
        return Err(ResistanceError::EmptySet);
    }
    let mut role: Vec<Option<Role>> = vec![None; g.len()];
    for &s in source {
        let k = g.node(s).ok_or(ResistanceError::NotInCluster(s))?;
        role[k] = Some(Role::Source);
    }
    for &s in sink {
        let k = g.node(s).ok_or(ResistanceError::NotInCluster(s))?;
        if role[k] == Some(Role::Source) {
            return Err(ResistanceError::Overlap(s));
        }
        role[k] = Some(Role::Sink);
    }
    let mut free = 0u32;
    let role = role
        .into_iter()
        .map(|r| {
            r.unwrap_or_else(|| {
                free += 1;
                Role::Free(free - 1)
            })
        })
        .collect();
    Ok((role, free as usize))
}

/// Effective resistance between site sets of a graph by PCG, in any float type.
pub fn resistance_between<T: Real>(
    g: &ClusterGraph,
    source: &[TriCoord],
    sink: &[TriCoord],
    tol: T,
    max_iters: usize,
) -> Result<T, ResistanceError> {
    let (role, m) = roles(g, source, sink)?;
    let mut free_nodes = vec![0usize; m];
    let mut diag = vec![T::zero(); m];
    let mut rhs = vec![T::zero(); m];
    for k in 0..g.len() {
        if let Role::Free(i) = role[k] {
            free_nodes[i as usize] = k;
            diag[i as usize] = T::from_usize(g.degree(k)).unwrap();
            for &j in g.neighbors(k) {
                if role[j as usize] == Role::Source {
                    rhs[i as usize] = rhs[i as usize] + T::one();
                }
            }
        }
    }
    // Free nodes not attached to either terminal would make the system
    // singular; cluster graphs are connected, so each one is attached.
    let apply = |v: &[T], out: &mut [T]| {
        for (i, &k) in free_nodes.iter().enumerate() {
            let mut acc = diag[i] * v[i];
            for &j in g.neighbors(k) {
                if let Role::Free(jj) = role[j as usize] {
                    acc = acc - v[jj as usize];
                }
            }
            out[i] = acc;
        }
    };
    let out = pcg(apply, &diag, &rhs, tol, max_iters);
    if !out.converged {
        return Err(ResistanceError::NoConvergence {
            iterations: out.iterations,
            residual: out.residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    let potential = |k: usize| match role[k] {
        Role::Source => T::one(),
        Role::Sink => T::zero(),
        Role::Free(i) => out.x[i as usize],
    };
    let mut energy = T::zero();
    for k in 0..g.len() {
        for &j in g.neighbors(k) {
            if (j as usize) > k {
                let d = potential(k) - potential(j as usize);
                energy = energy + d * d;
            }
        }
    }
    Ok(T::one() / energy)
}

/// Exact effective resistance by elimination, in any ordered field.
pub fn resistance_exact_between<T: Scalar>(
    g: &ClusterGraph,
    source: &[TriCoord],
    sink: &[TriCoord],
    cap: usize,
) -> Result<T, ResistanceError> {
    if g.len() > cap {
        return Err(ResistanceError::TooLarge { size: g.len(), cap });
    }
    let (role, m) = roles(g, source, sink)?;
    let (s_node, t_node) = (m, m + 1);
    let id = |k: usize| match role[k] {
        Role::Source => s_node,
        Role::Sink => t_node,
        Role::Free(i) => i as usize,
    };
    let mut net = Network::<T>::new(m + 2);
    for k in 0..g.len() {
        for &j in g.neighbors(k) {
            if (j as usize) > k {
                net.add(id(k), id(j as usize), T::one());
            }
        }
    }
    Ok(T::one() / net.conductance(s_node, t_node))
}

/// PCG solve on the problem's cluster.
pub fn effective_resistance(lab: &ClusterLabeling, problem: &ResistanceProblem) -> Result<f64, ResistanceError> {
    let g = ClusterGraph::from_cluster(lab, problem.cluster);
    resistance_between(&g, &problem.source, &problem.sink, problem.tolerance, problem.max_iters)
}

/// Elimination oracle on the problem's cluster (size cap 2000).
pub fn effective_resistance_exact(lab: &ClusterLabeling, problem: &ResistanceProblem) -> Result<f64, ResistanceError> {
    let g = ClusterGraph::from_cluster(lab, problem.cluster);
    resistance_exact_between::<f64>(&g, &problem.source, &problem.sink, DEFAULT_EXACT_CAP)
}

/// Fill `d_res` for each sample, building one graph per cluster. Pairs in
/// different clusters (or closed clusters) keep `d_res = None`.
pub fn pairwise_resistance_fill(lab: &ClusterLabeling, samples: &mut [MetricSample]) -> Result<(), ResistanceError> {
    let mut graphs: HashMap<ClusterId, ClusterGraph> = HashMap::new();
    for s in samples.iter_mut() {
        let (Some(cx), Some(cy)) = (lab.label(s.x), lab.label(s.y)) else { continue };
        if cx != cy || cx.color != crate::percolation::Color::Open {
            s.d_res = None;
            continue;
        }
        if s.x == s.y {
            s.d_res = Some(0.0);
            continue;
        }
        let g = graphs.entry(cx).or_insert_with(|| ClusterGraph::from_cluster(lab, cx));
        s.d_res = Some(resistance_between(g, &[s.x], &[s.y], DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS)?);
    }
    Ok(())
}

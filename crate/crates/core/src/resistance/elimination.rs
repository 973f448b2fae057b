//! Exact effective resistance by star-mesh elimination (Schur complement of
//! the Laplacian), in any ordered field.

use std::collections::BTreeMap;

use crate::scalar::Scalar;

/// Weighted graph: `links[k][j]` is the conductance between nodes `k`, `j`.
pub(crate) struct Network<T> {
    links: Vec<BTreeMap<usize, T>>,
    alive: Vec<bool>,
}

impl<T: Scalar> Network<T> {
    pub fn new(n: usize) -> Self {
        Network { links: vec![BTreeMap::new(); n], alive: vec![true; n] }
    }

    pub fn add(&mut self, u: usize, v: usize, c: T) {
        if u == v {
            return;
        }
        let e = self.links[u].entry(v).or_insert_with(T::zero);
        *e = e.clone() + c.clone();
        let e = self.links[v].entry(u).or_insert_with(T::zero);
        *e = e.clone() + c;
    }

    /// Remove node `k`, joining each pair of its neighbors by `c_i c_j / Σc`.
    fn eliminate(&mut self, k: usize) {
        let nbrs: Vec<(usize, T)> = std::mem::take(&mut self.links[k]).into_iter().collect();
        self.alive[k] = false;
        let total = nbrs.iter().fold(T::zero(), |acc, (_, c)| acc + c.clone());
        for (i, _) in &nbrs {
            self.links[*i].remove(&k);
        }
        if total == T::zero() {
            return;
        }
        for a in 0..nbrs.len() {
            for b in a + 1..nbrs.len() {
                let c = nbrs[a].1.clone() * nbrs[b].1.clone() / total.clone();
                self.add(nbrs[a].0, nbrs[b].0, c);
            }
        }
    }

    /// Effective conductance between `s` and `t` after eliminating all other
    /// nodes in minimum-degree order.
    pub fn conductance(mut self, s: usize, t: usize) -> T {
        loop {
            let next = (0..self.links.len())
                .filter(|&k| self.alive[k] && k != s && k != t)
                .min_by_key(|&k| (self.links[k].len(), k));
            match next {
                Some(k) => self.eliminate(k),
                None => break,
            }
        }
        self.links[s].get(&t).cloned().unwrap_or_else(T::zero)
    }
}

//! Dinic max-flow for unit-capacity networks.

use std::collections::VecDeque;

pub(crate) struct FlowNet {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<u32>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl FlowNet {
    pub fn new(n: usize) -> Self {
        FlowNet { adj: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new(), level: vec![0; n], iter: vec![0; n] }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cap: u32) {
        self.adj[u].push(self.to.len() as u32);
        self.to.push(v as u32);
        self.cap.push(cap);
        self.adj[v].push(self.to.len() as u32);
        self.to.push(u as u32);
        self.cap.push(0);
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                let w = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && self.level[w] < 0 {
                    self.level[w] = self.level[v] + 1;
                    q.push_back(w);
                }
            }
        }
        self.level[t] >= 0
    }

    /// One augmenting path of the level graph, pushed by one unit.
    fn augment(&mut self, s: usize, t: usize) -> bool {
        let mut path: Vec<u32> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                for &e in &path {
                    self.cap[e as usize] -= 1;
                    self.cap[(e ^ 1) as usize] += 1;
                }
                return true;
            }
            let mut advanced = false;
            while self.iter[v] < self.adj[v].len() {
                let e = self.adj[v][self.iter[v]];
                let w = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && self.level[w] == self.level[v] + 1 {
                    path.push(e);
                    v = w;
                    advanced = true;
                    break;
                }
                self.iter[v] += 1;
            }
            if !advanced {
                self.level[v] = -1;
                match path.pop() {
                    None => return false,
                    Some(e) => {
                        v = self.to[(e ^ 1) as usize] as usize;
                        self.iter[v] += 1;
                    }
                }
            }
        }
    }

    /// Max flow from `s` to `t`, stopping early once `limit` is reached.
    pub fn max_flow(&mut self, s: usize, t: usize, limit: usize) -> usize {
        let mut flow = 0;
        while flow < limit && self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            while flow < limit && self.augment(s, t) {
                flow += 1;
            }
        }
        flow
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // Two disjoint s-t routes plus a cross edge; unit capacities.
        let mut g = FlowNet::new(6);
        for (u, v) in [(0, 1), (0, 2), (1, 3), (2, 4), (1, 4), (3, 5), (4, 5)] {
            g.add_edge(u, v, 1);
        }
        assert_eq!(g.max_flow(0, 5, usize::MAX), 2);
    }

    #[test]
    fn needs_reverse_edges() {
        // Greedy s-1-4-t blocks; the optimum reroutes through the residual edge.
        let mut g = FlowNet::new(6);
        for (u, v) in [(0, 1), (0, 2), (1, 4), (1, 3), (2, 4), (3, 5), (4, 5)] {
            g.add_edge(u, v, 1);
        }
        assert_eq!(g.max_flow(0, 5, usize::MAX), 2);
        let mut h = FlowNet::new(3);
        h.add_edge(0, 1, 1);
        h.add_edge(1, 2, 1);
        assert_eq!(h.max_flow(0, 2, 0), 0);
    }
}

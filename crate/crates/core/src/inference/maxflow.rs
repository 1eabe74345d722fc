//! Dinic max-flow on real capacities.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub num_nodes: usize,
    /// `(from, to, capacity)` with `capacity >= 0`.
    pub arcs: Vec<(usize, usize, f64)>,
    pub source: usize,
    pub sink: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    /// `true` for nodes on the source side of a minimum cut.
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(num_nodes: usize, source: usize, sink: usize) -> Self {
        FlowNetwork {
            num_nodes,
            arcs: Vec::new(),
            source,
            sink,
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) {
        self.arcs.push((from, to, capacity));
    }

    pub fn validate(&self) -> Result<()> {
        if self.source == self.sink {
            return Err(Error::InvalidConfig("source equals sink".into()));
        }
        if self.source >= self.num_nodes || self.sink >= self.num_nodes {
            return Err(Error::InvalidConfig("terminal out of range".into()));
        }
        for &(a, b, c) in &self.arcs {
            if a >= self.num_nodes || b >= self.num_nodes {
                return Err(Error::InvalidConfig(format!("arc ({a}, {b}) out of range")));
            }
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidConfig(format!("arc ({a}, {b}) has capacity {c}")));
            }
        }
        Ok(())
    }

    /// Capacity of the cut whose source side is `side`.
    pub fn cut_capacity(&self, side: &[bool]) -> f64 {
        self.arcs
            .iter()
            .filter(|&&(a, b, _)| side[a] && !side[b])
            .map(|&(_, _, c)| c)
            .sum()
    }
}

struct Residual {
    head: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn build(net: &FlowNetwork) -> Self {
        let mut r = Residual {
            head: Vec::with_capacity(net.arcs.len() * 2),
            cap: Vec::with_capacity(net.arcs.len() * 2),
            adj: vec![Vec::new(); net.num_nodes],
        };
        for &(a, b, c) in &net.arcs {
            if a == b {
                continue;
            }
            r.adj[a].push(r.head.len());
            r.head.push(b);
            r.cap.push(c);
            r.adj[b].push(r.head.len());
            r.head.push(a);
            r.cap.push(0.0);
        }
        r
    }
}

/// Maximum s-t flow and the source side of a minimum cut.
pub fn max_flow(net: &FlowNetwork) -> Result<MaxFlow> {
    net.validate()?;
    let total: f64 = net.arcs.iter().map(|a| a.2).sum();
    let eps = 1e-12 * total.max(1.0);
    let mut r = Residual::build(net);
    let n = net.num_nodes;
    let (s, t) = (net.source, net.sink);
    let mut value = 0.0;
    let mut level = vec![usize::MAX; n];
    let mut iter = vec![0usize; n];
    loop {
        level.iter_mut().for_each(|l| *l = usize::MAX);
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &r.adj[u] {
                let v = r.head[e];
                if r.cap[e] > eps && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[t] == usize::MAX {
            break;
        }
        iter.iter_mut().for_each(|i| *i = 0);
        loop {
            let pushed = augment(&mut r, &level, &mut iter, s, t, f64::INFINITY, eps);
            if pushed <= eps {
                break;
            }
            value += pushed;
        }
    }
    // residual reachability gives the min-cut source side
    let mut side = vec![false; n];
    side[s] = true;
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for &e in &r.adj[u] {
            let v = r.head[e];
            if r.cap[e] > eps && !side[v] {
                side[v] = true;
                stack.push(v);
            }
        }
    }
    Ok(MaxFlow {
        value,
        source_side: side,
    })
}

fn augment(
    r: &mut Residual,
    level: &[usize],
    iter: &mut [usize],
    u: usize,
    t: usize,
    limit: f64,
    eps: f64,
) -> f64 {
    if u == t {
        return limit;
    }
    while iter[u] < r.adj[u].len() {
        let e = r.adj[u][iter[u]];
        let v = r.head[e];
        if r.cap[e] > eps && level[v] == level[u] + 1 {
            let got = augment(r, level, iter, v, t, limit.min(r.cap[e]), eps);
            if got > eps {
                r.cap[e] -= got;
                r.cap[e ^ 1] += got;
                return got;
            }
        }
        iter[u] += 1;
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_arc() {
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_arc(0, 1, 4.0);
        assert_eq!(max_flow(&net).unwrap().value, 4.0);
    }

    #[test]
    fn two_disjoint_paths() {
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 2.0);
        net.add_arc(1, 3, 2.0);
        net.add_arc(0, 2, 3.0);
        net.add_arc(2, 3, 7.0);
        let f = max_flow(&net).unwrap();
        assert_eq!(f.value, 5.0);
        assert!((net.cut_capacity(&f.source_side) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_networks() {
        assert!(max_flow(&FlowNetwork::new(2, 0, 0)).is_err());
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_arc(0, 1, -1.0);
        assert!(max_flow(&net).is_err());
    }

    fn brute_min_cut(net: &FlowNetwork) -> f64 {
        let inner: Vec<usize> = (0..net.num_nodes)
            .filter(|&v| v != net.source && v != net.sink)
            .collect();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << inner.len()) {
            let mut side = vec![false; net.num_nodes];
            side[net.source] = true;
            for (k, &v) in inner.iter().enumerate() {
                side[v] = mask >> k & 1 == 1;
            }
            best = best.min(net.cut_capacity(&side));
        }
        best
    }

    #[test]
    fn random_ten_node_networks_match_cut_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut net = FlowNetwork::new(10, 0, 9);
            for a in 0..10 {
                for b in 0..10 {
                    if a != b && rng.random_bool(0.35) {
                        net.add_arc(a, b, rng.random_range(0.0..5.0));
                    }
                }
            }
            let f = max_flow(&net).unwrap();
            let brute = brute_min_cut(&net);
            assert!((f.value - brute).abs() < 1e-9, "{} vs {brute}", f.value);
            assert!((net.cut_capacity(&f.source_side) - f.value).abs() < 1e-9);
        }
    }
}

//! Submodular pseudo-boolean energies minimized by a single s-t cut.
//!
//! Convention: `x_i = 1` places node `i` on the sink side.

use crate::error::{Error, Result};

use super::maxflow::{max_flow, FlowNetwork};

#[derive(Debug, Clone)]
pub(crate) struct BinaryEnergy {
    constant: f64,
    /// Coefficient of `x_i`.
    linear: Vec<f64>,
    /// `w * (1 - x_i) * x_j` with `w >= 0`.
    pairs: Vec<(usize, usize, f64)>,
    fixed: Vec<Option<bool>>,
}

impl BinaryEnergy {
    pub fn new(n: usize) -> Self {
        BinaryEnergy {
            constant: 0.0,
            linear: vec![0.0; n],
            pairs: Vec::new(),
            fixed: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn add_node(&mut self) -> usize {
        self.linear.push(0.0);
        self.fixed.push(None);
        self.linear.len() - 1
    }

    /// Adds `e0` when `x_i = 0` and `e1` when `x_i = 1`.
    pub fn add_unary(&mut self, i: usize, e0: f64, e1: f64) {
        self.constant += e0;
        self.linear[i] += e1 - e0;
    }

    /// Adds the table `[[a, b], [c, d]]` indexed `[x_i][x_j]`.
    pub fn add_pairwise(&mut self, i: usize, j: usize, a: f64, b: f64, c: f64, d: f64) -> Result<()> {
        let w = b + c - a - d;
        if w < -1e-9 * (1.0 + a.abs() + b.abs() + c.abs() + d.abs()) {
            return Err(Error::NotSubmodular(i, j));
        }
        self.constant += a;
        self.linear[i] += c - a;
        self.linear[j] += d - c;
        if w > 0.0 {
            self.pairs.push((i, j, w));
        }
        Ok(())
    }

    /// Adds `w * (1 - x_i) * x_j`, `w >= 0`.
    pub fn add_not_and(&mut self, i: usize, j: usize, w: f64) {
        debug_assert!(w >= 0.0);
        self.pairs.push((i, j, w));
    }

    pub fn fix(&mut self, i: usize, value: bool) {
        self.fixed[i] = Some(value);
    }

    pub fn energy(&self, x: &[bool]) -> f64 {
        let mut e = self.constant;
        for (i, &c) in self.linear.iter().enumerate() {
            if x[i] {
                e += c;
            }
        }
        for &(i, j, w) in &self.pairs {
            if !x[i] && x[j] {
                e += w;
            }
        }
        e
    }

    /// Exact minimizer among assignments honoring the fixed values.
    pub fn minimize(&self) -> (Vec<bool>, f64) {
        let n = self.len();
        let (s, t) = (n, n + 1);
        let mut net = FlowNetwork::new(n + 2, s, t);
        let big = 1.0
            + self.linear.iter().map(|c| c.abs()).sum::<f64>()
            + self.pairs.iter().map(|p| p.2).sum::<f64>();
        for (i, &c) in self.linear.iter().enumerate() {
            if c > 0.0 {
                net.add_arc(s, i, c);
            } else if c < 0.0 {
                net.add_arc(i, t, -c);
            }
            match self.fixed[i] {
                Some(true) => net.add_arc(i, t, big),
                Some(false) => net.add_arc(s, i, big),
                None => {}
            }
        }
        for &(i, j, w) in &self.pairs {
            net.add_arc(i, j, w);
        }
        let flow = max_flow(&net).expect("internal network is well formed");
        let x: Vec<bool> = (0..n).map(|i| !flow.source_side[i]).collect();
        let e = self.energy(&x);
        (x, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_submodular_energies_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..8);
            let mut e = BinaryEnergy::new(n);
            for i in 0..n {
                e.add_unary(i, rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.random_bool(0.3) {
                        let (a, d) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                        let b = rng.random_range(-1.0..1.0);
                        let c = a + d - b + rng.random_range(0.0..1.0);
                        e.add_pairwise(i, j, a, b, c, d).unwrap();
                    }
                }
            }
            if n > 2 && rng.random_bool(0.5) {
                e.fix(0, rng.random_bool(0.5));
            }
            let (_, got) = e.minimize();
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                if let Some(v) = e.fixed[0] {
                    if x[0] != v {
                        continue;
                    }
                }
                best = best.min(e.energy(&x));
            }
            assert!((got - best).abs() < 1e-9, "{got} vs {best}");
        }
    }

    #[test]
    fn supermodular_pair_is_rejected() {
        let mut e = BinaryEnergy::new(2);
        assert!(matches!(
            e.add_pairwise(0, 1, 0.0, 1.0, 1.0, 3.0),
            Err(Error::NotSubmodular(0, 1))
        ));
    }
}

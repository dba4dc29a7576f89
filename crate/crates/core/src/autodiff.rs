//! Minimal reverse-mode differentiation on a flat tape.
//!
//! Supports exactly the operators the quality-aware loss needs: add, sub,
//! mul, div, exp, sqrt, sum, mean (plus constant-argument shortcuts). Each
//! node stores its value and up to two (parent, local-partial) edges; a
//! single reverse sweep accumulates gradients. Tapes are per-call state, so
//! concurrent loss evaluations never share anything.

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
struct Node {
    value: f64,
    parents: [(usize, f64); 2],
    arity: u8,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape {
            nodes: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Input (or constant) node.
    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(value, [(0, 0.0); 2], 0)
    }

    pub fn value(&self, x: Var) -> f64 {
        self.nodes[x.0].value
    }

    fn push(&mut self, value: f64, parents: [(usize, f64); 2], arity: u8) -> Var {
        self.nodes.push(Node {
            value,
            parents,
            arity,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, [(a.0, 1.0), (b.0, 1.0)], 2)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, [(a.0, 1.0), (b.0, -1.0)], 2)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(va * vb, [(a.0, vb), (b.0, va)], 2)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(va / vb, [(a.0, 1.0 / vb), (b.0, -va / (vb * vb))], 2)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) + c;
        self.push(v, [(a.0, 1.0), (0, 0.0)], 1)
    }

    pub fn mul_const(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(v, [(a.0, c), (0, 0.0)], 1)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).exp();
        self.push(v, [(a.0, v), (0, 0.0)], 1)
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.value(a).sqrt();
        self.push(v, [(a.0, 0.5 / v), (0, 0.0)], 1)
    }

    pub fn sum(&mut self, xs: &[Var]) -> Var {
        assert!(!xs.is_empty(), "sum of nothing");
        let mut acc = xs[0];
        for &x in &xs[1..] {
            acc = self.add(acc, x);
        }
        acc
    }

    pub fn mean(&mut self, xs: &[Var]) -> Var {
        let s = self.sum(xs);
        self.mul_const(s, 1.0 / xs.len() as f64)
    }

    /// Reverse sweep from `output`. Returns d(output)/d(node) for every node
    /// on the tape, indexable by [`Var`] via [`grad_of`].
    pub fn gradient(&self, output: Var) -> Vec<f64> {
        let mut adj = vec![0.0; self.nodes.len()];
        adj[output.0] = 1.0;
        for i in (0..=output.0).rev() {
            let bar = adj[i];
            if bar == 0.0 {
                continue;
            }
            let node = &self.nodes[i];
            for k in 0..node.arity as usize {
                let (p, partial) = node.parents[k];
                adj[p] += bar * partial;
            }
        }
        adj
    }
}

/// Convenience for reading one entry of a gradient vector.
pub fn grad_of(grad: &[f64], x: Var) -> f64 {
    grad[x.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn central_diff(f: impl Fn(&[f64]) -> f64, xs: &[f64], i: usize, h: f64) -> f64 {
        let mut plus = xs.to_vec();
        let mut minus = xs.to_vec();
        plus[i] += h;
        minus[i] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    }

    #[test]
    fn primitive_partials() {
        let mut t = Tape::new();
        let a = t.leaf(3.0);
        let b = t.leaf(2.0);
        let q = t.div(a, b);
        let g = t.gradient(q);
        assert!((grad_of(&g, a) - 0.5).abs() < 1e-15);
        assert!((grad_of(&g, b) + 0.75).abs() < 1e-15);

        let mut t = Tape::new();
        let x = t.leaf(1.3);
        let e = t.exp(x);
        let g = t.gradient(e);
        assert!((grad_of(&g, x) - 1.3f64.exp()).abs() < 1e-12);

        let mut t = Tape::new();
        let x = t.leaf(4.0);
        let s = t.sqrt(x);
        let g = t.gradient(s);
        assert!((grad_of(&g, x) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fan_out_accumulates() {
        // y = x*x + x  =>  dy/dx = 2x + 1
        let mut t = Tape::new();
        let x = t.leaf(5.0);
        let sq = t.mul(x, x);
        let y = t.add(sq, x);
        let g = t.gradient(y);
        assert!((grad_of(&g, x) - 11.0).abs() < 1e-15);
    }

    #[test]
    fn composite_matches_finite_differences() {
        // f(x) = mean(exp(x_i) / sqrt(sum(x_j^2) + 1)) over 6 inputs.
        let f = |xs: &[f64]| -> f64 {
            let ss: f64 = xs.iter().map(|v| v * v).sum::<f64>() + 1.0;
            xs.iter().map(|v| v.exp() / ss.sqrt()).sum::<f64>() / xs.len() as f64
        };
        let mut rng = Rng::from_seed(8);
        for _ in 0..50 {
            let xs: Vec<f64> = (0..6).map(|_| rng.range_f64(-1.5, 1.5)).collect();
            let mut t = Tape::new();
            let vars: Vec<Var> = xs.iter().map(|&v| t.leaf(v)).collect();
            let squares: Vec<Var> = vars.iter().map(|&v| t.mul(v, v)).collect();
            let ss = t.sum(&squares);
            let ss1 = t.add_const(ss, 1.0);
            let denom = t.sqrt(ss1);
            let terms: Vec<Var> = vars
                .iter()
                .map(|&v| {
                    let e = t.exp(v);
                    t.div(e, denom)
                })
                .collect();
            let out = t.mean(&terms);
            assert!((t.value(out) - f(&xs)).abs() < 1e-12);
            let g = t.gradient(out);
            for i in 0..xs.len() {
                let fd = central_diff(f, &xs, i, 1e-6);
                let an = grad_of(&g, vars[i]);
                let denom = fd.abs().max(1e-8);
                assert!(
                    ((an - fd) / denom).abs() < 1e-6,
                    "analytic {an} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn sum_and_mean_values() {
        let mut t = Tape::new();
        let xs: Vec<Var> = [1.0, 2.0, 3.0, 4.0].iter().map(|&v| t.leaf(v)).collect();
        let s = t.sum(&xs);
        let m = t.mean(&xs);
        assert_eq!(t.value(s), 10.0);
        assert_eq!(t.value(m), 2.5);
        let g = t.gradient(m);
        for &x in &xs {
            assert!((grad_of(&g, x) - 0.25).abs() < 1e-15);
        }
    }
}

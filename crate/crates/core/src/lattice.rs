//! Recombining lattice for the joint random walk `(W^n, Ñ^n)`.
//!
//! Each step draws a symmetric sign `e = ±1` for the Brownian walk and an
//! independent two-point compensated increment `η` for the Poisson walk:
//! `η = κ - 1` with probability `κ = exp(-λ δ)` (no jump) and `η = κ`
//! otherwise. The third martingale increment is `μ = e η`.
//!
//! Because every built-in problem depends on the path only through
//! `(t, W^n, Ñ^n)`, a state is fully described by the number of up-moves and
//! the number of jumps, and layer `j` is a dense `(j+1) x (j+1)` array.

use crate::error::{Error, Result};

/// Time grid and per-step probability structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    horizon: f64,
    lambda: f64,
    delta: f64,
    sqrt_delta: f64,
    kappa: f64,
}

/// Builds a grid of `n` steps over `[0, horizon]` with jump intensity `lambda`.
pub fn make_grid(n: usize, horizon: f64, lambda: f64) -> Result<GridSpec> {
    GridSpec::new(n, horizon, lambda)
}

impl GridSpec {
    pub fn new(n: usize, horizon: f64, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("number of steps n must be at least 1"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config(format!("horizon T must be positive, got {horizon}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::config(format!(
                "intensity lambda must be positive, got {lambda}"
            )));
        }
        let delta = horizon / n as f64;
        let kappa = (-lambda * delta).exp();
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::config(format!(
                "no-jump probability kappa = {kappa} is not in (0, 1); adjust n, T or lambda"
            )));
        }
        Ok(Self {
            n,
            horizon,
            lambda,
            delta,
            sqrt_delta: delta.sqrt(),
            kappa,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Step size `T / n`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sqrt_delta(&self) -> f64 {
        self.sqrt_delta
    }

    /// Probability of no jump over one step.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `E[η²] = E[μ²] = κ(1-κ)`.
    pub fn jump_variance(&self) -> f64 {
        self.kappa * (1.0 - self.kappa)
    }

    /// Grid time `t_j`; exactly `T` at `j = n`.
    pub fn time(&self, j: usize) -> f64 {
        if j == self.n {
            self.horizon
        } else {
            j as f64 * self.delta
        }
    }

    /// Value of `η` on a branch.
    pub fn eta(&self, jump: bool) -> f64 {
        if jump {
            self.kappa
        } else {
            self.kappa - 1.0
        }
    }

    /// Brownian walk value at `(j, up)`.
    pub fn w_value(&self, j: usize, up: usize) -> f64 {
        self.sqrt_delta * (2.0 * up as f64 - j as f64)
    }

    /// Compensated Poisson walk value at `(j, jumps)`.
    pub fn ntilde_value(&self, j: usize, jumps: usize) -> f64 {
        jumps as f64 + j as f64 * (self.kappa - 1.0)
    }

    /// Number of states in layer `j`.
    pub fn layer_len(j: usize) -> usize {
        (j + 1) * (j + 1)
    }

    /// Total number of lattice states over layers `0..=n`.
    pub fn node_count(&self) -> usize {
        (0..=self.n).map(Self::layer_len).sum()
    }

    /// Left-hand side of the step-size smallness condition for the energy
    /// bound of the explicit scheme:
    /// `(3 + 2p + 2C + 2C²(1 + e^{2λT}/λ)) δ`. Stable iff `< 1`.
    pub fn stability_index(&self, p: f64, lipschitz: f64) -> f64 {
        let c = lipschitz;
        let growth = (2.0 * self.lambda * self.horizon).exp() / self.lambda;
        (3.0 + 2.0 * p + 2.0 * c + 2.0 * c * c * (1.0 + growth)) * self.delta
    }

    pub fn is_stable(&self, p: f64, lipschitz: f64) -> bool {
        self.stability_index(p, lipschitz) < 1.0
    }

    /// The four branches out of any non-terminal node, in the canonical
    /// order `(+1, no jump), (-1, no jump), (+1, jump), (-1, jump)`.
    pub fn branches(&self) -> [Branch; 4] {
        let stay = self.kappa / 2.0;
        let jump = (1.0 - self.kappa) / 2.0;
        [
            Branch {
                e: 1,
                jump: false,
                prob: stay,
            },
            Branch {
                e: -1,
                jump: false,
                prob: stay,
            },
            Branch {
                e: 1,
                jump: true,
                prob: jump,
            },
            Branch {
                e: -1,
                jump: true,
                prob: jump,
            },
        ]
    }

    /// Children of `node` with the branch that leads to each.
    pub fn successors(&self, node: Node) -> Result<[(Branch, Node); 4]> {
        if node.j >= self.n {
            return Err(Error::config(format!(
                "node at j = {} is terminal for a grid with n = {}",
                node.j, self.n
            )));
        }
        Ok(self.branches().map(|b| (b, node.child(b))))
    }

    /// Moments of the per-step increments by exact four-branch summation.
    pub fn increment_moments(&self) -> IncrementMoments {
        let mut m = IncrementMoments::default();
        for b in self.branches() {
            let e = b.e as f64;
            let eta = self.eta(b.jump);
            let mu = e * eta;
            m.e += b.prob * e;
            m.eta += b.prob * eta;
            m.mu += b.prob * mu;
            m.e2 += b.prob * e * e;
            m.eta2 += b.prob * eta * eta;
            m.mu2 += b.prob * mu * mu;
            m.e_eta += b.prob * e * eta;
            m.e_mu += b.prob * e * mu;
            m.eta_mu += b.prob * eta * mu;
        }
        m
    }
}

/// Free-function form of [`GridSpec::successors`].
pub fn successors(grid: &GridSpec, node: Node) -> Result<[(Branch, Node); 4]> {
    grid.successors(node)
}

/// Free-function form of [`GridSpec::increment_moments`].
pub fn increment_moments(grid: &GridSpec) -> IncrementMoments {
    grid.increment_moments()
}

/// A Markovian lattice state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub j: usize,
    pub up: usize,
    pub jumps: usize,
}

impl Node {
    pub const ROOT: Node = Node { j: 0, up: 0, jumps: 0 };

    pub fn new(j: usize, up: usize, jumps: usize) -> Self {
        debug_assert!(up <= j && jumps <= j);
        Self { j, up, jumps }
    }

    pub fn child(self, b: Branch) -> Node {
        Node {
            j: self.j + 1,
            up: self.up + usize::from(b.e > 0),
            jumps: self.jumps + usize::from(b.jump),
        }
    }

    /// Offset of this node inside its layer's dense array.
    pub fn index(self) -> usize {
        self.up * (self.j + 1) + self.jumps
    }

    pub fn t(self, grid: &GridSpec) -> f64 {
        grid.time(self.j)
    }

    pub fn w(self, grid: &GridSpec) -> f64 {
        grid.w_value(self.j, self.up)
    }

    pub fn ntilde(self, grid: &GridSpec) -> f64 {
        grid.ntilde_value(self.j, self.jumps)
    }
}

/// One of the four one-step moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    /// Brownian sign, `+1` or `-1`.
    pub e: i8,
    pub jump: bool,
    pub prob: f64,
}

/// First and second moments of `(e, η, μ)` under the one-step law.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IncrementMoments {
    pub e: f64,
    pub eta: f64,
    pub mu: f64,
    pub e2: f64,
    pub eta2: f64,
    pub mu2: f64,
    pub e_eta: f64,
    pub e_mu: f64,
    pub eta_mu: f64,
}

/// Iterates over every node of layer `j` in storage order.
pub fn layer_nodes(j: usize) -> impl Iterator<Item = Node> {
    (0..=j).flat_map(move |up| (0..=j).map(move |jumps| Node { j, up, jumps }))
}

/// Exact probabilities of reaching each node of layer `j` from the root,
/// in storage order. The two walks are independent, so the law is a
/// product of two binomials.
pub fn layer_probabilities(grid: &GridSpec, j: usize) -> Vec<f64> {
    let brownian = binomial_pmf(j, 0.5);
    let jumps = binomial_pmf(j, 1.0 - grid.kappa());
    let mut out = Vec::with_capacity(GridSpec::layer_len(j));
    for pw in &brownian {
        for pn in &jumps {
            out.push(pw * pn);
        }
    }
    out
}

// Pascal-style recurrence; stays finite where factorial forms overflow.
fn binomial_pmf(j: usize, q: f64) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for _ in 0..j {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &v) in pmf.iter().enumerate() {
            next[k] += v * (1.0 - q);
            next[k + 1] += v * q;
        }
        pmf = next;
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        let g = make_grid(100, 1.0, 5.0).unwrap();
        assert_eq!(g.delta(), 0.01);
        assert!((g.kappa() - 0.951_229_424_500_714).abs() < 1e-15);
        let g = make_grid(200, 1.0, 5.0).unwrap();
        assert_eq!(g.delta(), 0.005);
        assert_eq!(g.kappa(), (-0.025f64).exp());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(make_grid(1, 1.0, 0.0), Err(Error::Config(_))));
        assert!(matches!(make_grid(0, 1.0, 5.0), Err(Error::Config(_))));
        assert!(matches!(make_grid(10, -1.0, 5.0), Err(Error::Config(_))));
        assert!(matches!(make_grid(10, 1.0, f64::NAN), Err(Error::Config(_))));
    }

    #[test]
    fn root_successors() {
        // kappa = 0.9 exactly is not reachable from (n, T, lambda) without
        // rounding, so pick lambda to land close and compare to the law.
        let g = make_grid(1, 1.0, -(0.9f64.ln())).unwrap();
        let kids = g.successors(Node::ROOT).unwrap();
        let probs: Vec<f64> = kids.iter().map(|(b, _)| b.prob).collect();
        for (p, want) in probs.iter().zip([0.45, 0.45, 0.05, 0.05]) {
            assert!((p - want).abs() < 1e-15, "{p} vs {want}");
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn child_coordinates() {
        let g = make_grid(5, 1.0, 5.0).unwrap();
        let kids = g.successors(Node::new(2, 1, 1)).unwrap();
        let (_, child) = kids.iter().find(|(b, _)| b.e == 1 && b.jump).copied().unwrap();
        assert_eq!(child, Node::new(3, 2, 2));
    }

    #[test]
    fn terminal_has_no_successors() {
        let g = make_grid(3, 1.0, 5.0).unwrap();
        assert!(g.successors(Node::new(3, 0, 0)).is_err());
    }

    #[test]
    fn moments_closed_form() {
        for kappa in [0.5f64, 0.9, 0.99, (-5.0f64 / 100.0).exp()] {
            let g = make_grid(1, 1.0, -kappa.ln()).unwrap();
            let k = g.kappa();
            let m = g.increment_moments();
            assert!(m.e.abs() < 1e-14);
            assert!(m.eta.abs() < 1e-14);
            assert!(m.mu.abs() < 1e-14);
            assert!(m.e_eta.abs() < 1e-14);
            assert!(m.e_mu.abs() < 1e-14);
            assert!((m.e2 - 1.0).abs() < 1e-14);
            // (κ-1)²κ + κ²(1-κ) = κ(1-κ)
            assert!((m.eta2 - k * (1.0 - k)).abs() < 1e-14);
            assert!((m.mu2 - k * (1.0 - k)).abs() < 1e-14);
        }
    }

    #[test]
    fn layer_sizes() {
        let g = make_grid(7, 1.0, 5.0).unwrap();
        for j in 0..=7 {
            assert_eq!(layer_nodes(j).count(), (j + 1) * (j + 1));
            for (i, node) in layer_nodes(j).enumerate() {
                assert_eq!(node.index(), i);
            }
        }
        assert_eq!(g.node_count(), (1..=8).map(|k| k * k).sum::<usize>());
    }

    #[test]
    fn layer_probabilities_sum_to_one() {
        let g = make_grid(50, 1.0, 5.0).unwrap();
        for j in [0, 1, 10, 50] {
            let s: f64 = layer_probabilities(&g, j).iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn stability_index_matches_formula() {
        let g = make_grid(1000, 1.0, 5.0).unwrap();
        let want = (3.0 + 40.0 + 12.0 + 72.0 * (1.0 + 10f64.exp() / 5.0)) * 1e-3;
        assert!((g.stability_index(20.0, 6.0) - want).abs() < 1e-12);
        assert!(!g.is_stable(20.0, 6.0));
        assert!(g.is_stable(0.0, 0.0));
    }
}

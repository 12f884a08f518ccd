//! Per-node storage shared by both penalized schemes, and the layer-by-layer
//! backward sweep that fills it.

use rayon::prelude::*;

use crate::conditional::StepValues;
use crate::error::{Error, NodeRef, Result};
use crate::implicit::RootFindConfig;
use crate::lattice::GridSpec;
use crate::model::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Explicit,
    Implicit,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Explicit => "explicit",
            Scheme::Implicit => "implicit",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "implicit" => Ok(Scheme::Implicit),
            other => Err(Error::config(format!(
                "unknown scheme `{other}` (expected explicit|implicit)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Solver knobs shared by both schemes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    /// Retain every layer (needed for trajectories, audits and comparisons).
    pub keep_layers: bool,
    /// Explicit scheme only: evaluate the penalty closed forms with `g`
    /// instead of `g δ` inside the negative parts.
    pub compat_literal_penalty: bool,
    /// Fail instead of warning when the step-size smallness condition does not hold.
    pub strict_stability: bool,
    pub root: RootFindConfig,
}

impl SolveOptions {
    pub fn full() -> Self {
        Self {
            keep_layers: true,
            ..Self::default()
        }
    }
}

/// Values computed at one non-terminal node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeValues {
    pub y: f64,
    pub z: f64,
    pub u: f64,
    pub v: f64,
    pub a: f64,
    pub k: f64,
}

/// Representation coefficients and penalty increments of a non-terminal layer.
#[derive(Debug, Clone, Default)]
pub struct LayerCoeffs {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub k: Vec<f64>,
}

/// One time layer in dense `(up, jumps)` storage order.
#[derive(Debug, Clone)]
pub struct Layer {
    pub j: usize,
    pub y: Vec<f64>,
    /// `None` on the terminal layer, where only `y` is defined.
    pub coeffs: Option<LayerCoeffs>,
}

impl Layer {
    fn from_nodes(j: usize, nodes: Vec<NodeValues>) -> Self {
        let len = nodes.len();
        let mut y = Vec::with_capacity(len);
        let mut c = LayerCoeffs {
            z: Vec::with_capacity(len),
            u: Vec::with_capacity(len),
            v: Vec::with_capacity(len),
            a: Vec::with_capacity(len),
            k: Vec::with_capacity(len),
        };
        for nv in nodes {
            y.push(nv.y);
            c.z.push(nv.z);
            c.u.push(nv.u);
            c.v.push(nv.v);
            c.a.push(nv.a);
            c.k.push(nv.k);
        }
        Self { j, y, coeffs: Some(c) }
    }

    pub fn node(&self, idx: usize) -> Option<NodeValues> {
        let c = self.coeffs.as_ref()?;
        Some(NodeValues {
            y: self.y[idx],
            z: c.z[idx],
            u: c.u[idx],
            v: c.v[idx],
            a: c.a[idx],
            k: c.k[idx],
        })
    }
}

/// Output of a backward sweep.
#[derive(Debug, Clone)]
pub struct SchemeSolution {
    pub scheme: Scheme,
    pub problem: ProblemSpec,
    /// All layers `0..=n` when solved with `keep_layers`, otherwise just layer 0.
    layers: Vec<Layer>,
    pub stability_index: f64,
    pub warnings: Vec<String>,
}

impl SchemeSolution {
    /// The scheme's estimate of `Y_0`.
    pub fn y0(&self) -> f64 {
        self.layers[0].y[0]
    }

    pub fn root(&self) -> NodeValues {
        self.layers[0].node(0).expect("root layer carries coefficients")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.problem.grid
    }

    pub fn has_full_storage(&self) -> bool {
        self.layers.len() == self.problem.grid.n() + 1
    }

    pub fn layer(&self, j: usize) -> Option<&Layer> {
        if self.has_full_storage() {
            self.layers.get(j)
        } else {
            self.layers.first().filter(|_| j == 0)
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn y_at(&self, j: usize, up: usize, jumps: usize) -> Option<f64> {
        self.layer(j).map(|l| l.y[up * (j + 1) + jumps])
    }
}

/// Runs `step` over every node of every layer from `n - 1` down to 0.
///
/// Nodes within a layer are independent and computed in parallel; each
/// result lands in its own slot, so the output does not depend on the
/// thread count.
pub(crate) fn backward_sweep<F>(
    prob: &ProblemSpec,
    scheme: Scheme,
    opts: &SolveOptions,
    step: F,
) -> Result<SchemeSolution>
where
    F: Fn(NodeRef, StepValues, f64, f64) -> Result<NodeValues> + Sync,
{
    let grid = prob.grid;
    let n = grid.n();

    let stability_index = prob.stability_index();
    let mut warnings = Vec::new();
    if stability_index >= 1.0 {
        let msg = format!(
            "step-size smallness condition fails: (3 + 2p + 2C + 2C^2(1 + e^(2 lambda T)/lambda)) delta = {stability_index:.4e} >= 1; \
             the energy bound is not guaranteed"
        );
        if opts.strict_stability {
            return Err(Error::config(msg));
        }
        warnings.push(msg);
    }

    let terminal = terminal_layer(prob)?;
    let mut stored = Vec::new();
    let mut next = terminal;

    for j in (0..n).rev() {
        let width = j + 1;
        let next_y = &next.y;
        let nodes = (0..width * width)
            .into_par_iter()
            .with_min_len(256)
            .map(|idx| {
                let (up, jumps) = (idx / width, idx % width);
                let at = NodeRef { j, up, jumps };
                let (xi, zeta) = prob.barriers_at(j, up, jumps);
                if xi > zeta {
                    return Err(Error::BarrierViolation {
                        node: at,
                        lower: xi,
                        upper: zeta,
                    });
                }
                let sv = StepValues::gather(next_y, j, up, jumps);
                step(at, sv, xi, zeta)
            })
            .collect::<Result<Vec<_>>>()?;
        let layer = Layer::from_nodes(j, nodes);
        if opts.keep_layers {
            stored.push(std::mem::replace(&mut next, layer));
        } else {
            next = layer;
        }
    }
    stored.push(next);
    stored.reverse();

    Ok(SchemeSolution {
        scheme,
        problem: prob.clone(),
        layers: stored,
        stability_index,
        warnings,
    })
}

fn terminal_layer(prob: &ProblemSpec) -> Result<Layer> {
    let n = prob.grid.n();
    let width = n + 1;
    let mut y = Vec::with_capacity(width * width);
    for up in 0..width {
        for jumps in 0..width {
            let (xi, zeta) = prob.barriers_at(n, up, jumps);
            if (xi - zeta).abs() > 1e-12 * (1.0 + xi.abs()) {
                return Err(Error::TerminalMismatch {
                    node: NodeRef { j: n, up, jumps },
                    lower: xi,
                    upper: zeta,
                });
            }
            y.push(xi);
        }
    }
    Ok(Layer { j: n, y, coeffs: None })
}

#[inline]
pub(crate) fn neg_part(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        0.0
    }
}

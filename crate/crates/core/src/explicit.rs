//! Explicit penalized scheme.
//!
//! At each node the driver is evaluated at the conditional mean
//! `m = E[y_{j+1} | F_j]`, which makes the one-step equation
//!
//! ```text
//! y = m + g(t_j, m, z, u) δ + a - k,   a = pδ (y - ξ)⁻,   k = pδ (ζ - y)⁻
//! ```
//!
//! solvable in closed form: with `x = m + g δ` and `c = pδ / (1 + pδ)`,
//! `a = c (x - ξ)⁻` and `k = c (ζ - x)⁻`.

use crate::conditional::{repr_coeffs, StepValues};
use crate::error::{NodeRef, Result};
use crate::model::ProblemSpec;
use crate::solution::{backward_sweep, neg_part, Layer, NodeValues, Scheme, SchemeSolution, SolveOptions};

/// Closed-form solution of `y = x + a - k` with `a = pδ(y-ξ)⁻`, `k = pδ(ζ-y)⁻`.
/// Returns `(y, a, k)`.
#[inline]
pub fn penalized_update(x: f64, xi: f64, zeta: f64, p_delta: f64) -> (f64, f64, f64) {
    let c = p_delta / (1.0 + p_delta);
    let a = c * neg_part(x - xi);
    let k = c * neg_part(zeta - x);
    (x + a - k, a, k)
}

/// One node of the explicit scheme.
#[inline]
pub fn explicit_node(prob: &ProblemSpec, j: usize, sv: &StepValues, xi: f64, zeta: f64, literal: bool) -> NodeValues {
    let grid = &prob.grid;
    let r = repr_coeffs(grid, sv);
    let g = prob.driver.eval(grid.time(j), r.m, r.z, r.u);
    let x = r.m + g * grid.delta();
    let (y, a, k) = if literal {
        // Negative parts taken at m + g rather than m + g δ.
        let c = prob.p_delta() / (1.0 + prob.p_delta());
        let inner = r.m + g;
        let a = c * neg_part(inner - xi);
        let k = c * neg_part(zeta - inner);
        (x + a - k, a, k)
    } else {
        penalized_update(x, xi, zeta, prob.p_delta())
    };
    NodeValues {
        y,
        z: r.z,
        u: r.u,
        v: r.v,
        a,
        k,
    }
}

/// Computes layer `j` from the `y` values of layer `j + 1`.
pub fn explicit_step(prob: &ProblemSpec, j: usize, next_y: &[f64]) -> Result<Layer> {
    let width = j + 1;
    let mut nodes = Vec::with_capacity(width * width);
    for up in 0..width {
        for jumps in 0..width {
            let (xi, zeta) = prob.barriers_at(j, up, jumps);
            if xi > zeta {
                return Err(crate::Error::BarrierViolation {
                    node: NodeRef { j, up, jumps },
                    lower: xi,
                    upper: zeta,
                });
            }
            let sv = StepValues::gather(next_y, j, up, jumps);
            nodes.push(explicit_node(prob, j, &sv, xi, zeta, false));
        }
    }
    let y = nodes.iter().map(|n| n.y).collect();
    let coeffs = crate::solution::LayerCoeffs {
        z: nodes.iter().map(|n| n.z).collect(),
        u: nodes.iter().map(|n| n.u).collect(),
        v: nodes.iter().map(|n| n.v).collect(),
        a: nodes.iter().map(|n| n.a).collect(),
        k: nodes.iter().map(|n| n.k).collect(),
    };
    Ok(Layer {
        j,
        y,
        coeffs: Some(coeffs),
    })
}

pub fn solve_explicit(prob: &ProblemSpec, opts: &SolveOptions) -> Result<SchemeSolution> {
    let literal = opts.compat_literal_penalty;
    let mut sol = backward_sweep(prob, Scheme::Explicit, opts, |at, sv, xi, zeta| {
        Ok(explicit_node(prob, at.j, &sv, xi, zeta, literal))
    })?;
    if literal {
        sol.warnings
            .push("literal penalty closed forms in use (g without the factor delta)".into());
    }
    Ok(sol)
}

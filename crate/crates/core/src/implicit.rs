//! Implicit penalized scheme.
//!
//! Here the driver sees the unknown `y_j` itself, so each node requires
//! solving `Θ(y) = E[y_{j+1} | F_j]` with
//!
//! ```text
//! Θ(y) = y - g(t_j, y, z, u) δ - pδ (y - ξ_j)⁻ + pδ (ζ_j - y)⁻
//! ```
//!
//! Both penalty terms are non-decreasing in `y` and the driver term has slope
//! at most `C_g δ`, so `Θ` is strictly increasing once `C_g δ < 1` and the
//! root is unique. It is located by bracketing followed by bisection; Newton
//! would stall on the kinks at `ξ_j`, `ζ_j` and wherever the driver is not
//! smooth.

use crate::conditional::repr_coeffs;
use crate::error::{Error, Result};
use crate::lattice::Node;
use crate::model::ProblemSpec;
use crate::solution::{backward_sweep, neg_part, NodeValues, Scheme, SchemeSolution, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFindConfig {
    pub abs_tol: f64,
    pub max_iter: usize,
    pub bracket_pad: f64,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            max_iter: 200,
            bracket_pad: 1.0,
        }
    }
}

impl RootFindConfig {
    pub fn validate(&self) -> Result<()> {
        if self.abs_tol.is_nan() || self.abs_tol <= 0.0 {
            return Err(Error::config("root-finding abs_tol must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("root-finding max_iter must be >= 1"));
        }
        if !(self.bracket_pad.is_finite() && self.bracket_pad > 0.0) {
            return Err(Error::config("root-finding bracket_pad must be > 0"));
        }
        Ok(())
    }
}

/// `Θ(y)` at `node` for fixed `(z, u)`.
pub fn theta(prob: &ProblemSpec, node: Node, z: f64, u: f64, y: f64) -> f64 {
    let (xi, zeta) = prob.barriers_at(node.j, node.up, node.jumps);
    theta_with(prob, node.j, xi, zeta, z, u, y)
}

#[inline]
fn theta_with(prob: &ProblemSpec, j: usize, xi: f64, zeta: f64, z: f64, u: f64, y: f64) -> f64 {
    let grid = &prob.grid;
    let pd = prob.p_delta();
    y - prob.driver.eval(grid.time(j), y, z, u) * grid.delta() - pd * neg_part(y - xi) + pd * neg_part(zeta - y)
}

fn check_monotone(prob: &ProblemSpec) -> Result<()> {
    let slope_loss = prob.driver.lipschitz() * prob.grid.delta();
    if slope_loss >= 1.0 {
        return Err(Error::config(format!(
            "implicit scheme needs C_g * delta < 1, got {slope_loss} (C_g = {}, delta = {})",
            prob.driver.lipschitz(),
            prob.grid.delta()
        )));
    }
    Ok(())
}

/// Solves `Θ(y) = target` at `node`.
pub fn invert_theta(prob: &ProblemSpec, node: Node, z: f64, u: f64, target: f64, cfg: &RootFindConfig) -> Result<f64> {
    check_monotone(prob)?;
    cfg.validate()?;
    let (xi, zeta) = prob.barriers_at(node.j, node.up, node.jumps);
    invert_with(prob, node.j, xi, zeta, z, u, target, cfg)
}

#[allow(clippy::too_many_arguments)]
fn invert_with(
    prob: &ProblemSpec,
    j: usize,
    xi: f64,
    zeta: f64,
    z: f64,
    u: f64,
    target: f64,
    cfg: &RootFindConfig,
) -> Result<f64> {
    let width = cfg.bracket_pad * (1.0 + target.abs()) * (1.0 + prob.p_delta());
    solve_increasing(|y| theta_with(prob, j, xi, zeta, z, u, y), target, width, cfg)
}

/// Finds `y` with `f(y) = target` for a strictly increasing, unbounded `f`.
///
/// Starts from `y = target`, then brackets with `[target - w, target + w]`
/// (doubling `w` until the sign changes) and bisects. Stops when the
/// residual is within `abs_tol` or the bracket has shrunk to adjacent floats.
pub fn solve_increasing<F>(f: F, target: f64, initial_width: f64, cfg: &RootFindConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let resid = |y: f64| f(y) - target;
    let fail = |reason: &'static str, iterations: usize, residual: f64| Error::RootFind {
        node: None,
        reason,
        iterations,
        residual,
    };

    if !target.is_finite() {
        return Err(fail("non-finite target", 0, f64::NAN));
    }
    let r0 = resid(target);
    if !r0.is_finite() {
        return Err(fail("non-finite operator value", 0, r0));
    }
    if r0.abs() <= cfg.abs_tol {
        return Ok(target);
    }

    let mut iter = 0;
    let mut width = initial_width;
    let (mut lo, mut hi) = (target - width, target + width);
    let (mut f_lo, mut f_hi) = (resid(lo), resid(hi));
    while !(f_lo <= 0.0 && f_hi >= 0.0) {
        iter += 1;
        if iter >= cfg.max_iter {
            return Err(fail("no sign change while expanding bracket", iter, r0));
        }
        width *= 2.0;
        if f_lo > 0.0 {
            lo = target - width;
            f_lo = resid(lo);
        }
        if f_hi < 0.0 {
            hi = target + width;
            f_hi = resid(hi);
        }
        if !(f_lo.is_finite() && f_hi.is_finite()) {
            return Err(fail("non-finite operator value", iter, f64::NAN));
        }
    }

    while iter < cfg.max_iter {
        iter += 1;
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            // Adjacent floats: no representable point is closer to the root.
            return Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi });
        }
        let f_mid = resid(mid);
        if f_mid.abs() <= cfg.abs_tol {
            return Ok(mid);
        }
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Err(fail("iteration budget exhausted", iter, f_lo.abs().min(f_hi.abs())))
}

pub fn solve_implicit(prob: &ProblemSpec, opts: &SolveOptions) -> Result<SchemeSolution> {
    check_monotone(prob)?;
    opts.root.validate()?;
    let grid = prob.grid;
    let pd = prob.p_delta();
    backward_sweep(prob, Scheme::Implicit, opts, |at, sv, xi, zeta| {
        // (z, u, v) depend on layer j + 1 only.
        let r = repr_coeffs(&grid, &sv);
        let y = invert_with(prob, at.j, xi, zeta, r.z, r.u, r.m, &opts.root).map_err(|e| e.at_node(at))?;
        Ok(NodeValues {
            y,
            z: r.z,
            u: r.u,
            v: r.v,
            a: pd * neg_part(y - xi),
            k: pd * neg_part(zeta - y),
        })
    })
}

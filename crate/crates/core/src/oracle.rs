//! Exhaustive non-recombining tree over all `4^n` increment paths.
//!
//! Serves as ground truth for the lattice solvers at small `n`: every path
//! node is stored separately, conditional expectations are formed by direct
//! summation over the four children with weights taken from cumulative path
//! probabilities, and barriers may depend on the whole path. Nothing here
//! uses the `(up, jumps)` recombination.
//!
//! Path nodes at depth `j` are addressed by base-4 codes with the first step
//! as the most significant digit; digit `b` follows the branch order
//! `(+1, no jump), (-1, no jump), (+1, jump), (-1, jump)`.

use std::sync::Arc;

use crate::conditional::{cond_exp, StepValues};
use crate::error::{Error, Result};
use crate::implicit::{solve_increasing, RootFindConfig};
use crate::lattice::GridSpec;
use crate::model::{Driver, ProblemSpec};
use crate::solution::Scheme;

/// Largest horizon the oracle accepts (`4^12 ≈ 1.7e7` leaves).
pub const MAX_ORACLE_STEPS: usize = 12;

/// A single step of a path: Brownian sign and jump flag.
pub type Step = (i8, bool);

const DIGITS: [Step; 4] = [(1, false), (-1, false), (1, true), (-1, true)];

/// Position along a path, handed to path-dependent barriers.
#[derive(Debug, Clone, Copy)]
pub struct PathPoint<'a> {
    pub j: usize,
    pub t: f64,
    /// `√δ Σ e_i`.
    pub w: f64,
    /// `Σ η_i`.
    pub ntilde: f64,
    pub steps: &'a [Step],
}

type PathFn = dyn Fn(&PathPoint<'_>) -> f64 + Send + Sync;

/// A problem whose barriers may read the full path.
#[derive(Clone)]
pub struct PathProblem {
    pub grid: GridSpec,
    pub driver: Driver,
    pub p: f64,
    lower: Arc<PathFn>,
    upper: Arc<PathFn>,
}

impl std::fmt::Debug for PathProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PathProblem")
            .field("grid", &self.grid)
            .field("driver", &self.driver)
            .field("p", &self.p)
            .finish_non_exhaustive()
    }
}

impl PathProblem {
    pub fn new<L, U>(grid: GridSpec, driver: Driver, p: f64, lower: L, upper: U) -> Self
    where
        L: Fn(&PathPoint<'_>) -> f64 + Send + Sync + 'static,
        U: Fn(&PathPoint<'_>) -> f64 + Send + Sync + 'static,
    {
        Self {
            grid,
            driver,
            p,
            lower: Arc::new(lower),
            upper: Arc::new(upper),
        }
    }

    /// Wide inactive barriers with a path-dependent terminal value.
    pub fn unconstrained<F>(grid: GridSpec, driver: Driver, big: f64, terminal: F) -> Self
    where
        F: Fn(&PathPoint<'_>) -> f64 + Send + Sync + 'static,
    {
        let n = grid.n();
        let terminal = Arc::new(terminal);
        let lower_term = Arc::clone(&terminal);
        Self::new(
            grid,
            driver,
            0.0,
            move |pt| if pt.j == n { lower_term(pt) } else { -big },
            move |pt| if pt.j == n { terminal(pt) } else { big },
        )
    }

    pub fn barriers(&self, pt: &PathPoint<'_>) -> (f64, f64) {
        ((self.lower)(pt), (self.upper)(pt))
    }
}

impl From<&ProblemSpec> for PathProblem {
    fn from(prob: &ProblemSpec) -> Self {
        let lo = prob.barriers.clone();
        let hi = prob.barriers.clone();
        Self::new(
            prob.grid,
            prob.driver.clone(),
            prob.p,
            move |pt| lo.lower(pt.t, pt.w, pt.ntilde),
            move |pt| hi.upper(pt.t, pt.w, pt.ntilde),
        )
    }
}

/// Decodes a depth-`j` path code into its steps.
pub fn decode_path(code: usize, j: usize) -> Vec<Step> {
    (0..j).map(|i| DIGITS[(code >> (2 * (j - 1 - i))) & 3]).collect()
}

fn path_point<'a>(grid: &GridSpec, steps: &'a [Step]) -> PathPoint<'a> {
    let j = steps.len();
    let e_sum: i64 = steps.iter().map(|&(e, _)| i64::from(e)).sum();
    let ntilde = steps.iter().map(|&(_, jump)| grid.eta(jump)).sum();
    PathPoint {
        j,
        t: grid.time(j),
        w: grid.sqrt_delta() * e_sum as f64,
        ntilde,
        steps,
    }
}

fn branch_prob(grid: &GridSpec, step: Step) -> f64 {
    let jump = if step.1 { 1.0 - grid.kappa() } else { grid.kappa() };
    0.5 * jump
}

/// Cumulative path probabilities at every depth `0..=n`.
pub fn path_probabilities(grid: &GridSpec, n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    for j in 0..n {
        let prev = &out[j];
        let mut next = Vec::with_capacity(prev.len() * 4);
        for &p in prev {
            for step in DIGITS {
                next.push(p * branch_prob(grid, step));
            }
        }
        out.push(next);
    }
    out
}

/// Scheme values at every node of the path tree.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub scheme: Scheme,
    /// `y[j][code]` for depths `0..=n`.
    pub y: Vec<Vec<f64>>,
    /// Cumulative path probabilities, same layout as `y`.
    pub prob: Vec<Vec<f64>>,
}

impl OracleSolution {
    pub fn root(&self) -> f64 {
        self.y[0][0]
    }
}

fn guard(grid: &GridSpec) -> Result<()> {
    if grid.n() > MAX_ORACLE_STEPS {
        return Err(Error::config(format!(
            "path-tree oracle supports n <= {MAX_ORACLE_STEPS}, got {}",
            grid.n()
        )));
    }
    Ok(())
}

/// Runs the explicit or implicit recursion on the full path tree.
pub fn oracle_solve(prob: &PathProblem, scheme: Scheme, cfg: &RootFindConfig) -> Result<OracleSolution> {
    let grid = prob.grid;
    guard(&grid)?;
    let n = grid.n();
    let d = grid.delta();
    let pd = prob.p * d;
    if scheme == Scheme::Implicit && prob.driver.lipschitz() * d >= 1.0 {
        return Err(Error::config("implicit recursion needs C_g * delta < 1"));
    }
    cfg.validate()?;

    let probs = path_probabilities(&grid, n);
    let mut y: Vec<Vec<f64>> = vec![Vec::new(); n + 1];

    y[n] = (0..probs[n].len())
        .map(|code| {
            let steps = decode_path(code, n);
            let pt = path_point(&grid, &steps);
            let (lo, hi) = prob.barriers(&pt);
            if (lo - hi).abs() > 1e-12 * (1.0 + lo.abs()) {
                return Err(Error::Invariant(format!("terminal barriers differ on path {code}")));
            }
            Ok(lo)
        })
        .collect::<Result<_>>()?;

    for j in (0..n).rev() {
        let t = grid.time(j);
        let mut layer = Vec::with_capacity(probs[j].len());
        for code in 0..probs[j].len() {
            let parent_p = probs[j][code];
            let mut m = 0.0;
            let mut ye = 0.0;
            let mut yeta = 0.0;
            let mut eta2 = 0.0;
            for (b, &(e, jump)) in DIGITS.iter().enumerate() {
                let child = 4 * code + b;
                let w = probs[j + 1][child] / parent_p;
                let yc = y[j + 1][child];
                let eta = grid.eta(jump);
                m += w * yc;
                ye += w * f64::from(e) * yc;
                yeta += w * eta * yc;
                eta2 += w * eta * eta;
            }
            let z = ye / d.sqrt();
            let u = yeta / eta2;

            let steps = decode_path(code, j);
            let pt = path_point(&grid, &steps);
            let (xi, zeta) = prob.barriers(&pt);
            if xi > zeta {
                return Err(Error::Invariant(format!(
                    "lower barrier above upper on path {code} at depth {j}"
                )));
            }

            let value = match scheme {
                Scheme::Explicit => {
                    let x = m + prob.driver.eval(t, m, z, u) * d;
                    if x < xi {
                        (x + pd * xi) / (1.0 + pd)
                    } else if x > zeta {
                        (x + pd * zeta) / (1.0 + pd)
                    } else {
                        x
                    }
                }
                Scheme::Implicit => {
                    let theta = |v: f64| {
                        v - prob.driver.eval(t, v, z, u) * d - pd * (xi - v).max(0.0) + pd * (v - zeta).max(0.0)
                    };
                    let width = cfg.bracket_pad * (1.0 + m.abs()) * (1.0 + pd);
                    solve_increasing(theta, m, width, cfg)?
                }
            };
            layer.push(value);
        }
        y[j] = layer;
    }

    Ok(OracleSolution { scheme, y, prob: probs })
}

/// Result of comparing the four-branch kernel against direct enumeration.
#[derive(Debug, Clone)]
pub struct CondExpCheck {
    pub max_discrepancy: f64,
    /// Kernel value `E[f | F_j]` at every depth-`j` path node.
    pub kernel_values: Vec<f64>,
}

/// Evaluates `E[f(path_{j+1}) | F_j]` at every depth-`j` node two ways and
/// reports the largest difference.
pub fn oracle_cond_exp_check<F>(grid: &GridSpec, j: usize, functional: F) -> Result<CondExpCheck>
where
    F: Fn(&[Step]) -> f64,
{
    guard(grid)?;
    if j >= grid.n() {
        return Err(Error::config(format!("depth {j} must be below n = {}", grid.n())));
    }
    let probs = path_probabilities(grid, j + 1);
    let mut max_discrepancy: f64 = 0.0;
    let mut kernel_values = Vec::with_capacity(probs[j].len());
    for code in 0..probs[j].len() {
        let mut vals = [0.0; 4];
        let mut direct = 0.0;
        for (b, slot) in vals.iter_mut().enumerate() {
            let child = 4 * code + b;
            let v = functional(&decode_path(child, j + 1));
            *slot = v;
            direct += probs[j + 1][child] * v;
        }
        direct /= probs[j][code];
        let kernel = cond_exp(grid, &StepValues::new(vals[0], vals[1], vals[2], vals[3]));
        max_discrepancy = max_discrepancy.max((kernel - direct).abs());
        kernel_values.push(kernel);
    }
    Ok(CondExpCheck {
        max_discrepancy,
        kernel_values,
    })
}

/// `(up, jumps)` reached by a path.
pub fn path_counts(steps: &[Step]) -> (usize, usize) {
    steps.iter().fold((0, 0), |(up, jumps), &(e, jump)| {
        (up + usize::from(e > 0), jumps + usize::from(jump))
    })
}

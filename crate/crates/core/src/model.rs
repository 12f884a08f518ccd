//! Drivers, barrier pairs and the built-in problems.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::GridSpec;

type DriverFn = dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync;
type BarrierFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// A generator `g(t, y, z, u)` together with its declared Lipschitz bound.
#[derive(Clone)]
pub struct Driver {
    eval: Arc<DriverFn>,
    lipschitz: f64,
}

impl Driver {
    pub fn new<F>(lipschitz: f64, eval: F) -> Self
    where
        F: Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            lipschitz,
        }
    }

    /// `g ≡ 0`.
    pub fn zero() -> Self {
        Self::new(0.0, |_, _, _, _| 0.0)
    }

    /// `g(t, y, z, u) = -5|y + z| + 6u`, declared 6-Lipschitz.
    pub fn worked_example() -> Self {
        Self::new(6.0, |_, y, z, u| -5.0 * (y + z).abs() + 6.0 * u)
    }

    #[inline]
    pub fn eval(&self, t: f64, y: f64, z: f64, u: f64) -> f64 {
        (self.eval)(t, y, z, u)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl fmt::Debug for Driver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Driver")
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

/// Lower and upper obstacles as functions of `(t, W, Ñ)`.
#[derive(Clone)]
pub struct BarrierPair {
    lower: Arc<BarrierFn>,
    upper: Arc<BarrierFn>,
}

impl BarrierPair {
    pub fn new<L, U>(lower: L, upper: U) -> Self
    where
        L: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        U: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            lower: Arc::new(lower),
            upper: Arc::new(upper),
        }
    }

    #[inline]
    pub fn lower(&self, t: f64, w: f64, ntilde: f64) -> f64 {
        (self.lower)(t, w, ntilde)
    }

    #[inline]
    pub fn upper(&self, t: f64, w: f64, ntilde: f64) -> f64 {
        (self.upper)(t, w, ntilde)
    }
}

impl fmt::Debug for BarrierPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BarrierPair { .. }")
    }
}

/// Everything a backward sweep needs.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub driver: Driver,
    pub barriers: BarrierPair,
    /// Penalization parameter.
    pub p: f64,
    /// Short human-readable identifier, written into output metadata.
    pub label: String,
}

impl ProblemSpec {
    pub fn new(
        grid: GridSpec,
        driver: Driver,
        barriers: BarrierPair,
        p: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::config(format!("penalization p must be >= 0, got {p}")));
        }
        if !(driver.lipschitz().is_finite() && driver.lipschitz() >= 0.0) {
            return Err(Error::config("driver Lipschitz constant must be finite and >= 0"));
        }
        Ok(Self {
            grid,
            driver,
            barriers,
            p,
            label: label.into(),
        })
    }

    /// Same problem with a different penalization parameter.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(
            self.grid,
            self.driver.clone(),
            self.barriers.clone(),
            p,
            self.label.clone(),
        )
    }

    /// Same problem on another grid.
    pub fn with_grid(&self, grid: GridSpec) -> Self {
        Self { grid, ..self.clone() }
    }

    pub fn p_delta(&self) -> f64 {
        self.p * self.grid.delta()
    }

    /// `(ξ, ζ)` at lattice state `(j, up, jumps)`.
    #[inline]
    pub fn barriers_at(&self, j: usize, up: usize, jumps: usize) -> (f64, f64) {
        let g = &self.grid;
        let (t, w, nt) = (g.time(j), g.w_value(j, up), g.ntilde_value(j, jumps));
        (self.barriers.lower(t, w, nt), self.barriers.upper(t, w, nt))
    }

    pub fn stability_index(&self) -> f64 {
        self.grid.stability_index(self.p, self.driver.lipschitz())
    }

    pub fn is_stable(&self) -> bool {
        self.stability_index() < 1.0
    }
}

/// Obstacles `W² + Ñ + (T-t)` and `W² + Ñ + 3(T-t)` with the worked-example
/// driver. The barriers jump only with the Poisson walk.
pub fn example1(grid: GridSpec, p: f64) -> Result<ProblemSpec> {
    let horizon = grid.horizon();
    let barriers = BarrierPair::new(
        move |t, w, nt| w * w + nt + (horizon - t),
        move |t, w, nt| w * w + nt + 3.0 * (horizon - t),
    );
    ProblemSpec::new(grid, Driver::worked_example(), barriers, p, "example1")
}

/// Obstacles `W² + Ñ + (T-t)(1 - 1{W ≥ a})` and `W² + Ñ + (T-t)(2 + 1{W ≥ a})`.
/// The indicator adds jumps driven by the Brownian path crossing `a`.
pub fn example2(grid: GridSpec, a: f64, p: f64) -> Result<ProblemSpec> {
    if !a.is_finite() {
        return Err(Error::config("example 2 threshold a must be finite"));
    }
    let horizon = grid.horizon();
    let ind = move |w: f64| if w >= a { 1.0 } else { 0.0 };
    let barriers = BarrierPair::new(
        move |t, w, nt| w * w + nt + (horizon - t) * (1.0 - ind(w)),
        move |t, w, nt| w * w + nt + (horizon - t) * (2.0 + ind(w)),
    );
    ProblemSpec::new(grid, Driver::worked_example(), barriers, p, format!("example2(a={a})"))
}

/// A problem whose barriers are `∓big` before maturity and both equal to
/// `terminal` at maturity, so the penalty never fires for `big` large enough.
pub fn unconstrained<F>(grid: GridSpec, terminal: F, driver: Driver, big: f64) -> Result<ProblemSpec>
where
    F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    if !(big.is_finite() && big > 0.0) {
        return Err(Error::config("inactive barrier level must be positive and finite"));
    }
    let terminal = Arc::new(terminal);
    let cutoff = grid.horizon() - 0.5 * grid.delta();
    let at_end = move |t: f64| t > cutoff;
    let lower_term = Arc::clone(&terminal);
    let barriers = BarrierPair::new(
        move |t, w, nt| if at_end(t) { lower_term(w, nt) } else { -big },
        move |t, w, nt| if at_end(t) { terminal(w, nt) } else { big },
    );
    ProblemSpec::new(grid, driver, barriers, 0.0, "unconstrained")
}

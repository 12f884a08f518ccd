//! One-step conditional expectation and martingale representation.
//!
//! Given the four child values of an `F_{j+1}`-measurable quantity `Y`, the
//! martingale difference `Y - E[Y | F_j]` decomposes exactly on the
//! orthogonal increments `(√δ e, η, μ)`:
//!
//! ```text
//! Y = m + √δ z e + u η + v μ
//! z = E[Y e] / √δ,   u = E[Y η] / κ(1-κ),   v = E[Y μ] / κ(1-κ)
//! ```

use crate::lattice::GridSpec;

/// Child values in branch order `(+1, no jump), (-1, no jump), (+1, jump), (-1, jump)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepValues {
    pub vpp: f64,
    pub vpm: f64,
    pub vjp: f64,
    pub vjm: f64,
}

impl StepValues {
    pub fn new(vpp: f64, vpm: f64, vjp: f64, vjm: f64) -> Self {
        Self { vpp, vpm, vjp, vjm }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, c, c, c)
    }

    /// Gathers the children of `(up, jumps)` from the dense layer `j + 1`.
    #[inline]
    pub fn gather(next: &[f64], j: usize, up: usize, jumps: usize) -> Self {
        let w = j + 2;
        let stay_minus = up * w + jumps;
        let stay_plus = stay_minus + w;
        Self {
            vpp: next[stay_plus],
            vpm: next[stay_minus],
            vjp: next[stay_plus + 1],
            vjm: next[stay_minus + 1],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.vpp, self.vpm, self.vjp, self.vjm]
    }
}

/// Conditional mean and representation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReprCoeffs {
    pub m: f64,
    pub z: f64,
    pub u: f64,
    pub v: f64,
}

impl ReprCoeffs {
    /// Value the representation assigns to the branch `(e, jump)`.
    pub fn reconstruct(&self, grid: &GridSpec, e: i8, jump: bool) -> f64 {
        let e = e as f64;
        let eta = grid.eta(jump);
        self.m + grid.sqrt_delta() * self.z * e + self.u * eta + self.v * e * eta
    }
}

/// `E[Y | F_j]` by the four-branch formula.
#[inline]
pub fn cond_exp(grid: &GridSpec, sv: &StepValues) -> f64 {
    let stay = grid.kappa() / 2.0;
    let jump = (1.0 - grid.kappa()) / 2.0;
    stay * sv.vpp + stay * sv.vpm + jump * sv.vjp + jump * sv.vjm
}

#[inline]
pub fn repr_coeffs(grid: &GridSpec, sv: &StepValues) -> ReprCoeffs {
    let k = grid.kappa();
    let stay = k / 2.0;
    let jump = (1.0 - k) / 2.0;
    let (eta0, eta1) = (k - 1.0, k);

    let m = stay * sv.vpp + stay * sv.vpm + jump * sv.vjp + jump * sv.vjm;
    let ye = stay * sv.vpp - stay * sv.vpm + jump * sv.vjp - jump * sv.vjm;
    let yeta = stay * eta0 * sv.vpp + stay * eta0 * sv.vpm + jump * eta1 * sv.vjp + jump * eta1 * sv.vjm;
    let ymu = stay * eta0 * sv.vpp - stay * eta0 * sv.vpm + jump * eta1 * sv.vjp - jump * eta1 * sv.vjm;

    let var = grid.jump_variance();
    ReprCoeffs {
        m,
        z: ye / grid.sqrt_delta(),
        u: yeta / var,
        v: ymu / var,
    }
}

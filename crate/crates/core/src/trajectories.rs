//! Sampled lattice paths with the solution, barriers and cumulative
//! penalty processes read off along them.
//!
//! The continuous-time versions are step functions on the grid, so a path is
//! reported only at `t_j`. `A_j` and `K_j` include the increment at `t_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::solution::SchemeSolution;

/// Identifies the generator in output metadata.
pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64(seed), stream=index)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    /// Increments that led to this grid point; zero at `t = 0`.
    pub e: i8,
    pub eta: f64,
    pub w: f64,
    pub ntilde: f64,
    pub y: f64,
    pub xi: f64,
    pub zeta: f64,
    pub a: f64,
    pub k: f64,
    pub cum_a: f64,
    pub cum_k: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub seed: u64,
    pub stream: u64,
    pub records: Vec<TrajectoryRecord>,
}

impl TrajectorySample {
    /// Largest distance by which `y` leaves `[ξ, ζ]` along the path.
    pub fn max_violation(&self) -> f64 {
        self.records
            .iter()
            .map(|r| (r.xi - r.y).max(r.y - r.zeta).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Number of jump steps along the path.
    pub fn jump_count(&self) -> usize {
        self.records.iter().skip(1).filter(|r| r.eta > 0.0).count()
    }
}

/// Draws one path from stream 0 of `seed`.
pub fn sample_path(solution: &SchemeSolution, seed: u64) -> Result<TrajectorySample> {
    sample_stream(solution, seed, 0)
}

/// Draws `count` independent paths; path `i` uses stream `i` of `seed`.
pub fn sample_paths(solution: &SchemeSolution, seed: u64, count: usize) -> Result<Vec<TrajectorySample>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_stream(solution, seed, i))
        .collect()
}

fn sample_stream(solution: &SchemeSolution, seed: u64, stream: u64) -> Result<TrajectorySample> {
    if !solution.has_full_storage() {
        return Err(Error::config(
            "trajectory sampling needs a solution solved with keep_layers",
        ));
    }
    let prob = &solution.problem;
    let grid = prob.grid;
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let (mut up, mut jumps) = (0usize, 0usize);
    let (mut cum_a, mut cum_k) = (0.0, 0.0);
    let mut records = Vec::with_capacity(n + 1);
    let (mut e, mut eta) = (0i8, 0.0);

    for j in 0..=n {
        let layer = solution.layer(j).expect("full storage checked above");
        let idx = up * (j + 1) + jumps;
        let (xi, zeta) = prob.barriers_at(j, up, jumps);
        let (a, k) = match &layer.coeffs {
            Some(c) => (c.a[idx], c.k[idx]),
            None => (0.0, 0.0),
        };
        cum_a += a;
        cum_k += k;
        records.push(TrajectoryRecord {
            t: grid.time(j),
            e,
            eta,
            w: grid.w_value(j, up),
            ntilde: grid.ntilde_value(j, jumps),
            y: layer.y[idx],
            xi,
            zeta,
            a,
            k,
            cum_a,
            cum_k,
            alpha: cum_a - cum_k,
        });

        if j < n {
            e = if rng.random_bool(0.5) { 1 } else { -1 };
            let jump = rng.random_bool(1.0 - grid.kappa());
            eta = grid.eta(jump);
            up += usize::from(e > 0);
            jumps += usize::from(jump);
        }
    }

    Ok(TrajectorySample { seed, stream, records })
}

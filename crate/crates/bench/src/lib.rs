//! Fixtures shared by the benchmarks.

use dbbsde::{example1, example2, make_grid, ProblemSpec, StepValues};

pub const HORIZON: f64 = 1.0;
pub const LAMBDA: f64 = 5.0;

pub fn example1_problem(n: usize, p: f64) -> ProblemSpec {
    example1(make_grid(n, HORIZON, LAMBDA).expect("valid grid"), p).expect("valid problem")
}

pub fn example2_problem(n: usize, a: f64, p: f64) -> ProblemSpec {
    example2(make_grid(n, HORIZON, LAMBDA).expect("valid grid"), a, p).expect("valid problem")
}

/// Deterministic step values for kernel benchmarks.
pub fn step_values(count: usize) -> Vec<StepValues> {
    (0..count)
        .map(|i| {
            let x = i as f64 * 0.37;
            StepValues::new(x.sin(), x.cos(), (2.0 * x).sin() + 1.0, x.sqrt())
        })
        .collect()
}

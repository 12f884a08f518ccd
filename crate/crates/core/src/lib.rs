//! Penalization schemes for doubly reflected BSDEs with jumps on a
//! recombining binomial-Poisson lattice.
//!
//! The lattice approximates a Brownian motion by a symmetric random walk and a
//! compensated Poisson process by a two-point walk. Two schemes are provided:
//! an explicit one with a closed-form penalty step and an implicit one that
//! inverts a monotone scalar map at every node. A brute-force path-tree solver
//! serves as an independent reference for small grids.
//!
//! ```
//! use dbbsde::{example1, make_grid, solve_explicit, SolveOptions};
//!
//! let grid = make_grid(100, 1.0, 5.0).unwrap();
//! let prob = example1(grid, 20.0).unwrap();
//! let sol = solve_explicit(&prob, &SolveOptions::default()).unwrap();
//! assert!((1.0..=3.0).contains(&sol.y0()));
//! ```

pub mod conditional;
pub mod error;
pub mod experiments;
pub mod explicit;
pub mod implicit;
pub mod lattice;
pub mod model;
pub mod oracle;
pub mod output;
pub mod solution;
pub mod trajectories;

pub use conditional::{cond_exp, repr_coeffs, ReprCoeffs, StepValues};
pub use error::{Error, NodeRef, Result};
pub use experiments::{
    diagnose, run_audit, run_comparison, run_table, solve, AuditEntry, AuditReport, AuditStatus, ComparisonReport,
    ComparisonRow, ExampleId, SolutionDiagnostics, SweepSpec, TableResult,
};
pub use explicit::{explicit_step, penalized_update, solve_explicit};
pub use implicit::{invert_theta, solve_implicit, theta, RootFindConfig};
pub use lattice::{increment_moments, layer_nodes, layer_probabilities, make_grid, successors, Branch, GridSpec, Node};
pub use model::{example1, example2, unconstrained, BarrierPair, Driver, ProblemSpec};
pub use oracle::{oracle_cond_exp_check, oracle_solve, OracleSolution, PathPoint, PathProblem};
pub use solution::{Layer, LayerCoeffs, NodeValues, Scheme, SchemeSolution, SolveOptions};
pub use trajectories::{sample_path, sample_paths, TrajectoryRecord, TrajectorySample};

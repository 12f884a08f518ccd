//! Parameter sweeps, explicit/implicit comparisons and invariant audits.
//!
//! All expectations over the lattice use the exact forward probabilities of
//! each layer, so every report is deterministic.

use rayon::prelude::*;

use crate::error::{Error, NodeRef, Result};
use crate::explicit::solve_explicit;
use crate::implicit::solve_implicit;
use crate::lattice::{layer_probabilities, make_grid, GridSpec};
use crate::model::{example1, example2, unconstrained, Driver, ProblemSpec};
use crate::solution::{neg_part, Scheme, SchemeSolution, SolveOptions};

pub const DEFAULT_N_LIST: [usize; 5] = [100, 200, 400, 500, 600];
pub const DEFAULT_P_LIST: [f64; 7] = [20.0, 50.0, 100.0, 500.0, 1000.0, 5000.0, 20000.0];

/// Built-in problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleId {
    One,
    Two {
        a: f64,
    },
    /// Zero terminal value, zero driver, inactive barriers.
    Unconstrained,
}

impl ExampleId {
    pub fn build(&self, grid: GridSpec, p: f64) -> Result<ProblemSpec> {
        match *self {
            ExampleId::One => example1(grid, p),
            ExampleId::Two { a } => example2(grid, a, p),
            ExampleId::Unconstrained => unconstrained(grid, |_, _| 0.0, Driver::zero(), 1e6),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ExampleId::One => "1".into(),
            ExampleId::Two { a } => format!("2 (a={a})"),
            ExampleId::Unconstrained => "unconstrained".into(),
        }
    }
}

pub fn solve(prob: &ProblemSpec, scheme: Scheme, opts: &SolveOptions) -> Result<SchemeSolution> {
    match scheme {
        Scheme::Explicit => solve_explicit(prob, opts),
        Scheme::Implicit => solve_implicit(prob, opts),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub example: ExampleId,
    pub n_list: Vec<usize>,
    pub p_list: Vec<f64>,
    pub scheme: Scheme,
    pub horizon: f64,
    pub lambda: f64,
    pub compat_literal_penalty: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            example: ExampleId::One,
            n_list: DEFAULT_N_LIST.to_vec(),
            p_list: DEFAULT_P_LIST.to_vec(),
            scheme: Scheme::Explicit,
            horizon: 1.0,
            lambda: 5.0,
            compat_literal_penalty: false,
        }
    }
}

impl SweepSpec {
    pub fn for_example(example: ExampleId) -> Self {
        Self {
            example,
            ..Self::default()
        }
    }

    pub fn problem(&self, n: usize, p: f64) -> Result<ProblemSpec> {
        self.example.build(make_grid(n, self.horizon, self.lambda)?, p)
    }

    fn options(&self, keep_layers: bool) -> SolveOptions {
        SolveOptions {
            keep_layers,
            compat_literal_penalty: self.compat_literal_penalty,
            ..SolveOptions::default()
        }
    }
}

/// `Y_0` for every `(p, n)` cell; `values[ip][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableResult {
    pub spec: SweepSpec,
    pub values: Vec<Vec<f64>>,
    /// Wall-clock seconds per cell (informational only).
    pub seconds: Vec<Vec<f64>>,
}

impl TableResult {
    pub fn get(&self, n: usize, p: f64) -> Option<f64> {
        let i = self.spec.p_list.iter().position(|&q| q == p)?;
        let k = self.spec.n_list.iter().position(|&m| m == n)?;
        Some(self.values[i][k])
    }
}

/// One solve per `(n, p)` cell; cells run in parallel.
pub fn run_table(spec: &SweepSpec) -> Result<TableResult> {
    let cells: Vec<(usize, usize)> = (0..spec.p_list.len())
        .flat_map(|i| (0..spec.n_list.len()).map(move |k| (i, k)))
        .collect();
    let opts = spec.options(false);
    let solved = cells
        .par_iter()
        .map(|&(i, k)| {
            let prob = spec.problem(spec.n_list[k], spec.p_list[i])?;
            let start = std::time::Instant::now();
            let y0 = solve(&prob, spec.scheme, &opts)?.y0();
            Ok((y0, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;

    let width = spec.n_list.len();
    let mut values = vec![vec![0.0; width]; spec.p_list.len()];
    let mut seconds = values.clone();
    for (&(i, k), (y0, secs)) in cells.iter().zip(solved) {
        values[i][k] = y0;
        seconds[i][k] = secs;
    }
    Ok(TableResult {
        spec: spec.clone(),
        values,
        seconds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub p: f64,
    pub n: usize,
    pub delta: f64,
    pub explicit_y0: f64,
    pub implicit_y0: f64,
    /// `|ȳ_0 - y_0|`.
    pub root_gap: f64,
    /// `max_j E[(ȳ_j - y_j)²]` under the lattice law.
    pub max_layer_ms_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    /// Least-squares slope of `log(root_gap)` against `log(delta)`, per `p`.
    pub fitted_order: Vec<(f64, Option<f64>)>,
}

/// Runs both schemes on every `(n, p)` cell of `spec` and reports their gap.
pub fn run_comparison(spec: &SweepSpec) -> Result<ComparisonReport> {
    let mut rows = Vec::new();
    let mut fitted_order = Vec::new();
    for &p in &spec.p_list {
        let per_n = spec
            .n_list
            .par_iter()
            .map(|&n| compare_cell(spec, n, p))
            .collect::<Result<Vec<_>>>()?;
        let points: Vec<(f64, f64)> = per_n.iter().map(|r| (r.delta, r.root_gap)).collect();
        fitted_order.push((p, loglog_slope(&points)));
        rows.extend(per_n);
    }
    Ok(ComparisonReport { rows, fitted_order })
}

fn compare_cell(spec: &SweepSpec, n: usize, p: f64) -> Result<ComparisonRow> {
    let prob = spec.problem(n, p)?;
    let opts = spec.options(true);
    let ex = solve_explicit(&prob, &opts)?;
    let im = solve_implicit(&prob, &opts)?;
    let grid = prob.grid;
    let mut max_ms: f64 = 0.0;
    for j in 0..=n {
        let probs = layer_probabilities(&grid, j);
        let (ye, yi) = (&ex.layer(j).unwrap().y, &im.layer(j).unwrap().y);
        let ms: f64 = probs
            .iter()
            .zip(ye.iter().zip(yi))
            .map(|(w, (a, b))| w * (a - b).powi(2))
            .sum();
        max_ms = max_ms.max(ms);
    }
    Ok(ComparisonRow {
        p,
        n,
        delta: grid.delta(),
        explicit_y0: ex.y0(),
        implicit_y0: im.y0(),
        root_gap: (ex.y0() - im.y0()).abs(),
        max_layer_ms_gap: max_ms,
    })
}

/// Slope of the least-squares line through `(ln x, ln y)`; `None` with fewer
/// than two usable points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

// ---------------------------------------------------------------------------
// Audits

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditStatus {
    Pass,
    Fail,
    /// Reported for information, never fails the audit.
    Info,
}

impl AuditStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditStatus::Pass => "pass",
            AuditStatus::Fail => "fail",
            AuditStatus::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub check: &'static str,
    pub n: usize,
    pub p: f64,
    pub status: AuditStatus,
    pub value: f64,
    pub threshold: f64,
    pub worst: Option<NodeRef>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != AuditStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| e.status == AuditStatus::Fail)
    }

    pub fn find(&self, check: &str, n: usize, p: f64) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.check == check && e.n == n && e.p == p)
    }
}

pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Largest relative change of the energy functional when `n` doubles.
pub const ENERGY_DRIFT_TOL: f64 = 0.5;

/// Per-solution invariant measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionDiagnostics {
    /// Worst of `|a - pδ(y-ξ)⁻|` and `|k - pδ(ζ-y)⁻|`, relative to `1 + |a|` / `1 + |k|`.
    pub fixed_point_residual: f64,
    pub fixed_point_worst: Option<NodeRef>,
    /// Largest `|a k|` (exactly zero when complementarity holds).
    pub complementarity: f64,
    pub complementarity_worst: Option<NodeRef>,
    /// Most negative of `a`, `k` (clamped to 0).
    pub negativity: f64,
    /// `max((ξ - y)⁺, (y - ζ)⁺)` over all nodes.
    pub barrier_violation: f64,
    pub barrier_violation_worst: Option<NodeRef>,
    /// `sup_j E[y_j²] + δ Σ E[z_j²] + κ(1-κ) Σ E[u_j²]`.
    pub energy: f64,
    /// Largest `|y - ξ|` on the terminal layer.
    pub terminal_mismatch: f64,
}

/// Measures every invariant of a fully stored solution.
pub fn diagnose(sol: &SchemeSolution) -> Result<SolutionDiagnostics> {
    if !sol.has_full_storage() {
        return Err(Error::config("diagnostics need a solution solved with keep_layers"));
    }
    let prob = &sol.problem;
    let grid = prob.grid;
    let n = grid.n();
    let pd = prob.p_delta();

    let mut d = SolutionDiagnostics {
        fixed_point_residual: 0.0,
        fixed_point_worst: None,
        complementarity: 0.0,
        complementarity_worst: None,
        negativity: 0.0,
        barrier_violation: 0.0,
        barrier_violation_worst: None,
        energy: 0.0,
        terminal_mismatch: 0.0,
    };
    let mut sup_y2: f64 = 0.0;
    let (mut sum_z2, mut sum_u2) = (0.0, 0.0);

    for j in 0..=n {
        let layer = sol.layer(j).unwrap();
        let probs = layer_probabilities(&grid, j);
        let width = j + 1;
        let mut ey2 = 0.0;
        for (idx, &w) in probs.iter().enumerate() {
            let (up, jumps) = (idx / width, idx % width);
            let at = NodeRef { j, up, jumps };
            let y = layer.y[idx];
            let (xi, zeta) = prob.barriers_at(j, up, jumps);
            ey2 += w * y * y;

            let viol = (xi - y).max(y - zeta).max(0.0);
            if viol > d.barrier_violation {
                d.barrier_violation = viol;
                d.barrier_violation_worst = Some(at);
            }

            let Some(c) = &layer.coeffs else {
                d.terminal_mismatch = d.terminal_mismatch.max((y - xi).abs()).max((y - zeta).abs());
                continue;
            };
            let (a, k) = (c.a[idx], c.k[idx]);
            sum_z2 += w * c.z[idx] * c.z[idx];
            sum_u2 += w * c.u[idx] * c.u[idx];

            let ra = (a - pd * neg_part(y - xi)).abs() / (1.0 + a.abs());
            let rk = (k - pd * neg_part(zeta - y)).abs() / (1.0 + k.abs());
            if ra.max(rk) > d.fixed_point_residual {
                d.fixed_point_residual = ra.max(rk);
                d.fixed_point_worst = Some(at);
            }
            if (a * k).abs() > d.complementarity {
                d.complementarity = (a * k).abs();
                d.complementarity_worst = Some(at);
            }
            if -a > d.negativity || -k > d.negativity {
                d.negativity = (-a).max(-k);
            }
        }
        sup_y2 = sup_y2.max(ey2);
    }
    d.energy = sup_y2 + grid.delta() * sum_z2 + grid.jump_variance() * sum_u2;
    Ok(d)
}

/// Runs every invariant check over the `(n, p)` cells of `spec`.
///
/// Per cell: fixed-point identities, complementarity, nonnegativity of the
/// penalty increments, terminal condition, and the step-size condition
/// (informational). Per `p`: the energy functional at `n` and `2n`.
/// Per `n`: barrier violation is non-increasing along `p_list`.
pub fn run_audit(spec: &SweepSpec) -> Result<AuditReport> {
    let mut entries = Vec::new();
    let opts = spec.options(true);

    for &n in &spec.n_list {
        let mut violations = Vec::new();
        for &p in &spec.p_list {
            let prob = spec.problem(n, p)?;
            let sol = solve(&prob, spec.scheme, &opts)?;
            let diag = diagnose(&sol)?;
            let status = |ok: bool| if ok { AuditStatus::Pass } else { AuditStatus::Fail };

            entries.push(AuditEntry {
                check: "fixed_point",
                n,
                p,
                status: status(diag.fixed_point_residual <= FIXED_POINT_TOL),
                value: diag.fixed_point_residual,
                threshold: FIXED_POINT_TOL,
                worst: diag.fixed_point_worst,
            });
            entries.push(AuditEntry {
                check: "complementarity",
                n,
                p,
                status: status(diag.complementarity == 0.0),
                value: diag.complementarity,
                threshold: 0.0,
                worst: diag.complementarity_worst,
            });
            entries.push(AuditEntry {
                check: "nonnegative_penalties",
                n,
                p,
                status: status(diag.negativity <= 0.0),
                value: diag.negativity,
                threshold: 0.0,
                worst: None,
            });
            entries.push(AuditEntry {
                check: "terminal_condition",
                n,
                p,
                status: status(diag.terminal_mismatch <= 1e-12),
                value: diag.terminal_mismatch,
                threshold: 1e-12,
                worst: None,
            });
            entries.push(AuditEntry {
                check: "step_size_condition",
                n,
                p,
                status: AuditStatus::Info,
                value: sol.stability_index,
                threshold: 1.0,
                worst: None,
            });
            entries.push(AuditEntry {
                check: "barrier_violation",
                n,
                p,
                status: AuditStatus::Info,
                value: diag.barrier_violation,
                threshold: f64::NAN,
                worst: diag.barrier_violation_worst,
            });
            violations.push(diag.barrier_violation);

            // Energy at n and 2n.
            let fine = spec.problem(2 * n, p)?;
            let fine_diag = diagnose(&solve(&fine, spec.scheme, &opts)?)?;
            let drift = (fine_diag.energy - diag.energy).abs() / diag.energy.abs().max(f64::MIN_POSITIVE);
            entries.push(AuditEntry {
                check: "energy_bound",
                n,
                p,
                status: status(diag.energy.is_finite() && fine_diag.energy.is_finite() && drift < ENERGY_DRIFT_TOL),
                value: drift,
                threshold: ENERGY_DRIFT_TOL,
                worst: None,
            });
        }
        let monotone = violations.windows(2).all(|w| w[1] <= w[0]);
        let worst_step = violations
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        entries.push(AuditEntry {
            check: "violation_nonincreasing_in_p",
            n,
            p: f64::NAN,
            status: if monotone { AuditStatus::Pass } else { AuditStatus::Fail },
            value: if violations.len() < 2 { 0.0 } else { worst_step },
            threshold: 0.0,
            worst: None,
        });
    }
    Ok(AuditReport { entries })
}

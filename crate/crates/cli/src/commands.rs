use std::fs;

use anyhow::{Context, Result};
use dbbsde::oracle::MAX_ORACLE_STEPS;
use dbbsde::output::{write_audit, write_comparison, write_solution, write_table, write_trajectory};
use dbbsde::{
    make_grid, oracle_solve, run_audit, run_comparison, run_table, sample_paths, solve, solve_explicit, solve_implicit,
    Error, ExampleId, PathProblem, ProblemSpec, RootFindConfig, SolveOptions, SweepSpec,
};

use crate::config::Config;

/// Largest horizon used for the path-tree comparison in `check`.
const CHECK_ORACLE_STEPS: usize = 8;
const ORACLE_TOL: f64 = 1e-12;

fn problem(cfg: &Config, n: usize, p: f64) -> Result<ProblemSpec, Error> {
    cfg.example.build(make_grid(n, cfg.horizon, cfg.lambda)?, p)
}

fn options(cfg: &Config, keep_layers: bool) -> SolveOptions {
    SolveOptions {
        keep_layers,
        compat_literal_penalty: cfg.compat_literal_penalty,
        ..SolveOptions::default()
    }
}

fn sweep(cfg: &Config, default_n: &[usize], default_p: &[f64]) -> SweepSpec {
    SweepSpec {
        example: cfg.example,
        n_list: cfg
            .n_list
            .clone()
            .or(cfg.n.map(|n| vec![n]))
            .unwrap_or_else(|| default_n.to_vec()),
        p_list: cfg
            .p_list
            .clone()
            .or(cfg.p.map(|p| vec![p]))
            .unwrap_or_else(|| default_p.to_vec()),
        scheme: cfg.scheme,
        horizon: cfg.horizon,
        lambda: cfg.lambda,
        compat_literal_penalty: cfg.compat_literal_penalty,
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

// Avoid printing "-0.0000".
fn fmt4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

pub fn cmd_solve(cfg: &Config) -> Result<()> {
    let n = cfg.require_n()?;
    let p = cfg.require_p()?;
    let prob = problem(cfg, n, p)?;
    let sol = solve(&prob, cfg.scheme, &options(cfg, cfg.out.is_some()))?;
    warn_all(&sol.warnings);
    println!("{}", fmt4(sol.y0()));
    println!("y0_full = {}", sol.y0());
    println!("problem = {}", prob.label);
    println!("scheme = {}", cfg.scheme);
    println!("n = {n}, T = {}, lambda = {}, p = {p}", cfg.horizon, cfg.lambda);
    println!("stability_index = {}", sol.stability_index);
    if let Some(out) = &cfg.out {
        write_solution(out, &sol)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

pub fn cmd_table(cfg: &Config) -> Result<()> {
    let out = cfg.require_out()?;
    let spec = SweepSpec {
        n_list: cfg
            .n_list
            .clone()
            .unwrap_or_else(|| dbbsde::experiments::DEFAULT_N_LIST.to_vec()),
        p_list: cfg
            .p_list
            .clone()
            .unwrap_or_else(|| dbbsde::experiments::DEFAULT_P_LIST.to_vec()),
        ..sweep(cfg, &[], &[])
    };
    let table = run_table(&spec)?;
    write_table(out, &table)?;
    let header: Vec<String> = spec.n_list.iter().map(|n| format!("{:>8}", format!("n={n}"))).collect();
    println!("{:>8} {}", "p", header.join(" "));
    for (p, row) in spec.p_list.iter().zip(&table.values) {
        let cells: Vec<String> = row.iter().map(|&v| format!("{:>8}", fmt4(v))).collect();
        println!("{p:>8} {}", cells.join(" "));
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_paths(cfg: &Config) -> Result<()> {
    let out = cfg.require_out()?;
    let n = cfg.require_n()?;
    let p = cfg.require_p()?;
    let prob = problem(cfg, n, p)?;
    let sol = solve(&prob, cfg.scheme, &options(cfg, true))?;
    warn_all(&sol.warnings);
    let samples = sample_paths(&sol, cfg.seed, cfg.count)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut worst: f64 = 0.0;
    for s in &samples {
        let path = out.join(format!("path_{:04}.csv", s.stream));
        write_trajectory(&path, &sol, s)?;
        worst = worst.max(s.max_violation());
    }
    println!("y0 = {}", fmt4(sol.y0()));
    println!("paths = {}, seed = {}", samples.len(), cfg.seed);
    println!("max_violation = {worst}");
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_compare(cfg: &Config) -> Result<()> {
    let out = cfg.require_out()?;
    let spec = SweepSpec {
        n_list: cfg.n_list.clone().unwrap_or_else(|| vec![50, 100, 200]),
        ..sweep(cfg, &[], &[100.0])
    };
    let report = run_comparison(&spec)?;
    write_comparison(out, &report)?;
    for r in &report.rows {
        println!(
            "p = {}, n = {}: explicit {} implicit {} gap {:e} ms_gap {:e}",
            r.p, r.n, r.explicit_y0, r.implicit_y0, r.root_gap, r.max_layer_ms_gap
        );
    }
    for (p, slope) in &report.fitted_order {
        match slope {
            Some(s) => println!("p = {p}: fitted order {s:.3}"),
            None => println!("p = {p}: fitted order n/a"),
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Path-tree comparison on a small grid, then the invariant audit. Any
/// failure is returned as an invariant error.
pub fn cmd_check(cfg: &Config) -> Result<()> {
    let n = cfg.require_n()?;
    let p = cfg.require_p()?;
    let mut failures = Vec::new();

    let prob = problem(cfg, n, p)?;
    if !prob.is_stable() {
        eprintln!(
            "warning: step-size condition violated (index {:.4} >= 1); convergence bounds do not apply",
            prob.stability_index()
        );
    }

    let small = n.min(CHECK_ORACLE_STEPS).min(MAX_ORACLE_STEPS);
    let small_prob = problem(cfg, small, p)?;
    let lattice = solve(&small_prob, cfg.scheme, &options(cfg, false))?.y0();
    let oracle = oracle_solve(&PathProblem::from(&small_prob), cfg.scheme, &RootFindConfig::default())?.root();
    let gap = (lattice - oracle).abs();
    let ok = gap <= ORACLE_TOL * (1.0 + oracle.abs());
    println!(
        "oracle n={small}: lattice {lattice} tree {oracle} gap {gap:e} {}",
        if ok { "pass" } else { "fail" }
    );
    if !ok {
        failures.push(format!("oracle gap {gap:e} at n={small}"));
    }

    if cfg.example == ExampleId::Unconstrained {
        let opts = options(cfg, false);
        let ex = solve_explicit(&prob, &opts)?.y0();
        let im = solve_implicit(&prob, &opts)?.y0();
        let ok = ex == im;
        println!("explicit {ex} implicit {im} {}", if ok { "pass" } else { "fail" });
        if !ok {
            failures.push("explicit and implicit differ on the unconstrained problem".into());
        }
    }

    let spec = sweep(cfg, &[n], &[p]);
    let report = run_audit(&spec)?;
    for e in &report.entries {
        let worst = e.worst.map(|w| format!(" at {w}")).unwrap_or_default();
        println!(
            "{} n={} p={}: {} value {:e}{worst}",
            e.check,
            e.n,
            e.p,
            e.status.as_str(),
            e.value
        );
    }
    failures.extend(report.failures().map(|e| format!("{} at n={} p={}", e.check, e.n, e.p)));
    if let Some(out) = &cfg.out {
        write_audit(out, &report)?;
        println!("wrote {}", out.display());
    }

    if failures.is_empty() {
        println!("check passed");
        Ok(())
    } else {
        Err(Error::Invariant(failures.join("; ")).into())
    }
}

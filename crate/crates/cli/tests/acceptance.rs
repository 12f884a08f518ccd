//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use dbbsde::experiments::{DEFAULT_N_LIST, DEFAULT_P_LIST};
use dbbsde::{
    diagnose, example1, example2, layer_probabilities, make_grid, oracle_solve, repr_coeffs, run_comparison, run_table,
    solve_explicit, solve_implicit, unconstrained, Driver, ExampleId, PathProblem, ProblemSpec, RootFindConfig, Scheme,
    SolveOptions, StepValues, SweepSpec, TableResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Published `Y_0` grid for example 1; rows follow `DEFAULT_P_LIST`, columns `DEFAULT_N_LIST`.
const TABLE1: [[f64; 5]; 7] = [
    [1.2181, 1.2245, 1.2277, 1.2283, 1.2288],
    [1.2648, 1.2728, 1.2767, 1.2775, 1.2780],
    [1.2808, 1.2894, 1.2936, 1.2945, 1.2950],
    [1.2939, 1.3033, 1.3079, 1.3088, 1.3094],
    [1.2957, 1.3051, 1.3098, 1.3107, 1.3113],
    [1.2971, 1.3066, 1.3113, 1.3122, 1.3129],
    [1.2974, 1.3069, 1.3116, 1.3125, 1.3132],
];

const TABLE_TOL: f64 = 1e-3;
const TABLE_TARGET: f64 = 2e-4;
const RUNTIME_BUDGET_SECS: f64 = 60.0;
const ORACLE_TOL: f64 = 1e-12;
const REPR_TOL: f64 = 1e-12;
const REPR_SAMPLES: usize = 10_000;
const FIXED_POINT_TOL: f64 = 1e-12;
const GAP_RATIO_MAX: f64 = 0.7;
const VIOLATION_MAX: f64 = 0.05;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn outcome(id: u32, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

fn grid(n: usize) -> dbbsde::GridSpec {
    make_grid(n, 1.0, 5.0).unwrap()
}

fn max_table_dev(table: &TableResult, expected: &[[f64; 5]; 7]) -> (f64, usize, usize, (usize, f64)) {
    let mut worst = (0.0, 0usize, 0.0);
    let (mut within_tol, mut within_target) = (0, 0);
    for (i, row) in table.values.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let dev = (v - expected[i][k]).abs();
            if dev <= TABLE_TOL {
                within_tol += 1;
            }
            if dev <= TABLE_TARGET {
                within_target += 1;
            }
            if dev > worst.0 || dev.is_nan() {
                worst = (dev, table.spec.n_list[k], table.spec.p_list[i]);
            }
        }
    }
    (worst.0, within_tol, within_target, (worst.1, worst.2))
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn table1(example1_table: &TableResult) -> Outcome {
    let (dev, ok_tol, ok_target, (wn, wp)) = max_table_dev(example1_table, &TABLE1);
    let cells = TABLE1.len() * TABLE1[0].len();

    let prob = example1(grid(600), 20000.0).unwrap();
    let start = Instant::now();
    let y600 = single_threaded(|| solve_explicit(&prob, &SolveOptions::default()).unwrap().y0());
    let secs = start.elapsed().as_secs_f64();

    let compat = run_table(&SweepSpec {
        compat_literal_penalty: true,
        ..SweepSpec::default()
    })
    .unwrap();
    let (cdev, c_ok, _, _) = max_table_dev(&compat, &TABLE1);

    let pass = ok_tol == cells && secs <= RUNTIME_BUDGET_SECS;
    outcome(
        1,
        "example 1 table",
        pass,
        format!(
            "{ok_tol}/{cells} cells within {TABLE_TOL:e} ({ok_target} within {TABLE_TARGET:e}); max |dev| {dev:.4} at \
             n={wn} p={wp}; computed (100,20)={:.4} vs {:.4}, (600,20000)={y600:.4} vs {:.4}; n=600 single-thread \
             solve {secs:.2}s (budget {RUNTIME_BUDGET_SECS}s); literal-penalty mode: {c_ok}/{cells} within tolerance, \
             max |dev| {cdev:.3e}, (100,20)={:.4e}",
            example1_table.values[0][0], TABLE1[0][0], TABLE1[6][4], compat.values[0][0]
        ),
    )
}

fn spot_checks() -> Outcome {
    let cases = [(-1.0, 500usize, 20000.0, 1.1456), (1.0, 600, 20000.0, 1.3032)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, n, p, expected) in cases {
        let y0 = solve_explicit(&example2(grid(n), a, p).unwrap(), &SolveOptions::default())
            .unwrap()
            .y0();
        let dev = (y0 - expected).abs();
        pass &= dev <= TABLE_TOL;
        parts.push(format!("a={a} n={n} p={p}: {y0:.4} vs {expected:.4} (|dev| {dev:.4})"));
    }
    outcome(2, "example 2 spot checks", pass, parts.join("; "))
}

fn root_sandwich(example1_table: &TableResult, example2_table: &TableResult) -> Outcome {
    let in_range = |t: &TableResult, lo: f64, hi: f64| {
        let vals: Vec<f64> = t.values.iter().flatten().copied().collect();
        let ok = vals.iter().all(|v| (lo..=hi).contains(v));
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (ok, min, max)
    };
    let (ok1, min1, max1) = in_range(example1_table, 1.0, 3.0);
    let (ok2, min2, max2) = in_range(example2_table, 1.0, 2.0);
    outcome(
        3,
        "root sandwich",
        ok1 && ok2,
        format!("example 1 in [{min1:.4}, {max1:.4}] vs [1, 3]; example 2 (a=1) in [{min2:.4}, {max2:.4}] vs [1, 2]"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut worst: (f64, String) = (0.0, String::new());
    let mut cases = 0;
    let mut check = |prob: &ProblemSpec, scheme: Scheme| {
        let opts = SolveOptions::default();
        let lattice = match scheme {
            Scheme::Explicit => solve_explicit(prob, &opts),
            Scheme::Implicit => solve_implicit(prob, &opts),
        }
        .unwrap()
        .y0();
        let tree = oracle_solve(&PathProblem::from(prob), scheme, &RootFindConfig::default())
            .unwrap()
            .root();
        let gap = (lattice - tree).abs() / (1.0 + tree.abs());
        cases += 1;
        if gap > worst.0 || gap.is_nan() {
            worst = (gap, format!("{} n={} {scheme}", prob.label, prob.grid.n()));
        }
    };
    for scheme in [Scheme::Explicit, Scheme::Implicit] {
        // The implicit recursion needs C_g δ < 1, so examples 1 and 2 use a
        // shorter horizon for that scheme.
        let horizon = if scheme == Scheme::Implicit { 0.1 } else { 1.0 };
        for n in 2..=8 {
            let g = make_grid(n, horizon, 5.0).unwrap();
            for p in [20.0, 20000.0] {
                check(&example1(g, p).unwrap(), scheme);
                for a in [-1.0, 1.0] {
                    check(&example2(g, a, p).unwrap(), scheme);
                }
            }
            let g = grid(n);
            check(
                &unconstrained(g, |w, nt| w * w + nt, Driver::zero(), 1e6).unwrap(),
                scheme,
            );
            check(
                &unconstrained(
                    g,
                    |w, nt| (w - nt).max(0.0),
                    Driver::new(1.0, |_, y, z, u| 0.5 * y - 0.3 * z + u),
                    1e6,
                )
                .unwrap(),
                scheme,
            );
        }
    }
    outcome(
        4,
        "lattice vs path tree",
        worst.0 <= ORACLE_TOL,
        format!("{cases} cases, worst relative gap {:.3e} ({})", worst.0, worst.1),
    )
}

fn representation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst: f64 = 0.0;
    let solved = solve_explicit(&example1(grid(200), 100.0).unwrap(), &SolveOptions::full()).unwrap();
    let branches = [(1i8, false), (-1, false), (1, true), (-1, true)];
    for i in 0..REPR_SAMPLES {
        let (g, sv) = if i % 2 == 0 {
            // Arbitrary step values on an arbitrary grid.
            let g = make_grid(
                rng.random_range(1..2000),
                rng.random_range(0.1..5.0),
                rng.random_range(0.1..50.0),
            )
            .unwrap();
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1e3..1e3));
            (g, StepValues::new(v[0], v[1], v[2], v[3]))
        } else {
            // A node of a solved lattice.
            let j = rng.random_range(0..200);
            let (up, jumps) = (rng.random_range(0..=j), rng.random_range(0..=j));
            (
                *solved.grid(),
                StepValues::gather(&solved.layer(j + 1).unwrap().y, j, up, jumps),
            )
        };
        let r = repr_coeffs(&g, &sv);
        for (y, (e, jump)) in sv.as_array().into_iter().zip(branches) {
            worst = worst.max((r.reconstruct(&g, e, jump) - y).abs() / (1.0 + y.abs()));
        }
    }
    outcome(
        5,
        "martingale representation",
        worst <= REPR_TOL,
        format!("{REPR_SAMPLES} samples, worst relative residual {worst:.3e}"),
    )
}

fn fixed_point() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut worst_ak: f64 = 0.0;
    for p in DEFAULT_P_LIST {
        let sol = solve_explicit(&example1(grid(100), p).unwrap(), &SolveOptions::full()).unwrap();
        let d = diagnose(&sol).unwrap();
        pass &= d.fixed_point_residual <= FIXED_POINT_TOL && d.complementarity == 0.0 && d.negativity <= 0.0;
        worst = worst.max(d.fixed_point_residual);
        worst_ak = worst_ak.max(d.complementarity);
    }
    outcome(
        6,
        "fixed point and complementarity",
        pass,
        format!("n=100, p in {DEFAULT_P_LIST:?}: worst residual {worst:.3e}, max |a k| {worst_ak:e}"),
    )
}

fn gap_order() -> Outcome {
    let spec = SweepSpec {
        n_list: vec![50, 100, 200],
        p_list: vec![100.0],
        ..SweepSpec::default()
    };
    let rep = run_comparison(&spec).unwrap();
    let gaps: Vec<f64> = rep.rows.iter().map(|r| r.root_gap).collect();
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = ratios.iter().all(|&r| r <= GAP_RATIO_MAX);
    let order = rep.fitted_order[0].1.unwrap_or(f64::NAN);
    outcome(
        7,
        "explicit/implicit gap order",
        pass,
        format!(
            "gaps {} ratios {ratios:.3?} (max {GAP_RATIO_MAX}); fitted order {order:.3}",
            sci(&gaps)
        ),
    )
}

fn violation_vs_p() -> Outcome {
    let solutions: Vec<_> = DEFAULT_P_LIST
        .iter()
        .map(|&p| solve_explicit(&example1(grid(100), p).unwrap(), &SolveOptions::full()).unwrap())
        .collect();
    let viol: Vec<f64> = solutions
        .iter()
        .map(|s| diagnose(s).unwrap().barrier_violation)
        .collect();
    let monotone = viol.windows(2).all(|w| w[1] <= w[0]);
    let last = *viol.last().unwrap();

    // Where the threshold is exceeded, and how much lattice probability sits there.
    let sol = solutions.last().unwrap();
    let (mut nodes, mut mass) = (0usize, 0.0);
    for layer in sol.layers() {
        let probs = layer_probabilities(sol.grid(), layer.j);
        let width = layer.j + 1;
        for (idx, (&y, &w)) in layer.y.iter().zip(&probs).enumerate() {
            let (xi, zeta) = sol.problem.barriers_at(layer.j, idx / width, idx % width);
            if (xi - y).max(y - zeta) > VIOLATION_MAX {
                nodes += 1;
                mass += w;
            }
        }
    }
    outcome(
        8,
        "barrier violation vs p",
        monotone && last <= VIOLATION_MAX,
        format!(
            "violations {}; non-increasing: {monotone}; at p=20000: {last:.4e} (max {VIOLATION_MAX}), \
             {nodes} nodes above the threshold carrying probability {mass:.3e}",
            sci(&viol)
        ),
    )
}

fn run_cli(args: &[&str], threads: &str) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dbbsde"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = walk(dir)
        .into_iter()
        .map(|p| {
            let bytes = std::fs::read(&p).unwrap();
            (p.strip_prefix(dir).unwrap().display().to_string(), bytes)
        })
        .collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

type Snapshot = (Vec<(String, Vec<u8>)>, String);

fn determinism() -> Outcome {
    let run_all = |threads: &str| -> Result<Snapshot, String> {
        let dir = tempfile::tempdir().unwrap();
        let d = |name: &str| dir.path().join(name).display().to_string();
        let mut stdout = String::new();
        let cmds: Vec<Vec<String>> = vec![
            vec![
                "solve".into(),
                "--n".into(),
                "60".into(),
                "--p".into(),
                "500".into(),
                "--out".into(),
                d("solve.csv"),
            ],
            vec![
                "table".into(),
                "--example".into(),
                "2".into(),
                "--a".into(),
                "-1".into(),
                "--n_list".into(),
                "40,80".into(),
                "--p_list".into(),
                "20,20000".into(),
                "--out".into(),
                d("table.csv"),
            ],
            vec![
                "paths".into(),
                "--n".into(),
                "80".into(),
                "--p".into(),
                "20000".into(),
                "--seed".into(),
                "42".into(),
                "--count".into(),
                "4".into(),
                "--out".into(),
                d("paths"),
            ],
            vec![
                "compare".into(),
                "--n_list".into(),
                "20,40".into(),
                "--p".into(),
                "100".into(),
                "--out".into(),
                d("compare.csv"),
            ],
            vec![
                "check".into(),
                "--n".into(),
                "30".into(),
                "--p".into(),
                "100".into(),
                "--out".into(),
                d("audit.csv"),
            ],
        ];
        for c in &cmds {
            let args: Vec<&str> = c.iter().map(String::as_str).collect();
            stdout.push_str(&run_cli(&args, threads)?.replace(&dir.path().display().to_string(), "<dir>"));
        }
        Ok((snapshot(dir.path()), stdout))
    };
    let runs: Result<Vec<_>, String> = ["1", "1", "4"].iter().map(|t| run_all(t)).collect();
    match runs {
        Err(e) => outcome(9, "determinism", false, e),
        Ok(runs) => {
            let files = runs[0].0.len();
            let same = runs.windows(2).all(|w| w[0] == w[1]);
            outcome(
                9,
                "determinism",
                same && files >= 8,
                format!("5 commands, {files} files; byte-identical across 2 runs at 1 thread and 1 run at 4 threads: {same}"),
            )
        }
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are accepted but not used.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let started = Instant::now();
    let ex1_table = run_table(&SweepSpec::default()).unwrap();
    let ex2_table = run_table(&SweepSpec::for_example(ExampleId::Two { a: 1.0 })).unwrap();
    assert_eq!(ex1_table.spec.n_list, DEFAULT_N_LIST);

    let results = [
        table1(&ex1_table),
        spot_checks(),
        root_sandwich(&ex1_table, &ex2_table),
        oracle_equivalence(),
        representation(),
        fixed_point(),
        gap_order(),
        violation_vs_p(),
        determinism(),
    ];

    println!();
    for r in &results {
        println!(
            "criterion {} ({}): {} | {}",
            r.id,
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed ({:.1}s)",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

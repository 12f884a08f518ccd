//! CSV emission.
//!
//! Files are comma-separated UTF-8 with optional `# key: value` metadata lines
//! before the header. Each file is written to a temporary sibling and renamed
//! into place. Floats use the shortest representation that round-trips, so
//! identical inputs give byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{Error, NodeRef, Result};
use crate::experiments::{AuditReport, ComparisonReport, TableResult};
use crate::solution::SchemeSolution;
use crate::trajectories::{TrajectorySample, RNG_NAME};

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "t", "e", "eta", "w", "ntilde", "y", "xi", "zeta", "a", "k", "A", "K", "alpha",
];

/// Ordered `# key: value` lines.
pub type Metadata = Vec<(String, String)>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes metadata and then the rows produced by `body`, atomically.
pub fn write_csv<F>(path: &Path, meta: &Metadata, body: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<&mut io::BufWriter<&mut NamedTempFile>>) -> csv::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(path))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(path))?;
    {
        let mut buf = io::BufWriter::new(&mut tmp);
        for (k, v) in meta {
            writeln!(buf, "# {k}: {v}").map_err(io_err(path))?;
        }
        let mut w = csv::Writer::from_writer(&mut buf);
        body(&mut w).map_err(csv_err(path))?;
        w.flush().map_err(io_err(path))?;
        drop(w);
        buf.flush().map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn node_str(n: Option<NodeRef>) -> String {
    n.map(|n| n.to_string()).unwrap_or_default()
}

fn solution_meta(sol: &SchemeSolution) -> Metadata {
    let g = sol.grid();
    vec![
        ("problem".into(), sol.problem.label.clone()),
        ("scheme".into(), sol.scheme.to_string()),
        ("n".into(), g.n().to_string()),
        ("T".into(), f(g.horizon())),
        ("lambda".into(), f(g.lambda())),
        ("p".into(), f(sol.problem.p)),
        ("y0".into(), f(sol.y0())),
    ]
}

/// One trajectory per file.
pub fn write_trajectory(path: &Path, sol: &SchemeSolution, sample: &TrajectorySample) -> Result<()> {
    let mut meta = solution_meta(sol);
    meta.push(("rng".into(), RNG_NAME.into()));
    meta.push(("seed".into(), sample.seed.to_string()));
    meta.push(("stream".into(), sample.stream.to_string()));
    meta.push(("max_violation".into(), f(sample.max_violation())));
    write_csv(path, &meta, |w| {
        w.write_record(TRAJECTORY_HEADER)?;
        for r in &sample.records {
            w.write_record([
                f(r.t),
                r.e.to_string(),
                f(r.eta),
                f(r.w),
                f(r.ntilde),
                f(r.y),
                f(r.xi),
                f(r.zeta),
                f(r.a),
                f(r.k),
                f(r.cum_a),
                f(r.cum_k),
                f(r.alpha),
            ])?;
        }
        Ok(())
    })
}

/// Table layout: one row per `p`, one column per `n`. Timings are not written.
pub fn write_table(path: &Path, table: &TableResult) -> Result<()> {
    let s = &table.spec;
    let meta = vec![
        ("example".into(), s.example.label()),
        ("scheme".into(), s.scheme.to_string()),
        ("T".into(), f(s.horizon)),
        ("lambda".into(), f(s.lambda)),
        ("compat_literal_penalty".into(), s.compat_literal_penalty.to_string()),
    ];
    write_csv(path, &meta, |w| {
        let mut header = vec!["p".to_string()];
        header.extend(s.n_list.iter().map(|n| format!("n={n}")));
        w.write_record(&header)?;
        for (p, row) in s.p_list.iter().zip(&table.values) {
            let mut rec = vec![f(*p)];
            rec.extend(row.iter().map(|&v| f(v)));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn write_comparison(path: &Path, report: &ComparisonReport) -> Result<()> {
    let meta = report
        .fitted_order
        .iter()
        .map(|(p, s)| {
            (
                format!("fitted_order(p={})", f(*p)),
                s.map(f).unwrap_or_else(|| "nan".into()),
            )
        })
        .collect();
    write_csv(path, &meta, |w| {
        w.write_record([
            "p",
            "n",
            "delta",
            "explicit_y0",
            "implicit_y0",
            "root_gap",
            "max_layer_ms_gap",
        ])?;
        for r in &report.rows {
            w.write_record([
                f(r.p),
                r.n.to_string(),
                f(r.delta),
                f(r.explicit_y0),
                f(r.implicit_y0),
                f(r.root_gap),
                f(r.max_layer_ms_gap),
            ])?;
        }
        Ok(())
    })
}

pub fn write_audit(path: &Path, report: &AuditReport) -> Result<()> {
    let meta = vec![("passed".into(), report.passed().to_string())];
    write_csv(path, &meta, |w| {
        w.write_record(["check", "n", "p", "status", "value", "threshold", "worst_node"])?;
        for e in &report.entries {
            w.write_record([
                e.check.to_string(),
                e.n.to_string(),
                f(e.p),
                e.status.as_str().to_string(),
                f(e.value),
                f(e.threshold),
                node_str(e.worst),
            ])?;
        }
        Ok(())
    })
}

/// Every stored node in layer order. Coefficient columns are empty on the
/// terminal layer.
pub fn write_solution(path: &Path, sol: &SchemeSolution) -> Result<()> {
    let prob = &sol.problem;
    let grid = sol.grid();
    write_csv(path, &solution_meta(sol), |w| {
        w.write_record([
            "j", "up", "jumps", "t", "w", "ntilde", "xi", "zeta", "y", "z", "u", "v", "a", "k",
        ])?;
        for layer in sol.layers() {
            let j = layer.j;
            let width = j + 1;
            for (idx, &y) in layer.y.iter().enumerate() {
                let (up, jumps) = (idx / width, idx % width);
                let (xi, zeta) = prob.barriers_at(j, up, jumps);
                let mut rec = vec![
                    j.to_string(),
                    up.to_string(),
                    jumps.to_string(),
                    f(grid.time(j)),
                    f(grid.w_value(j, up)),
                    f(grid.ntilde_value(j, jumps)),
                    f(xi),
                    f(zeta),
                    f(y),
                ];
                match &layer.coeffs {
                    Some(c) => rec.extend([c.z[idx], c.u[idx], c.v[idx], c.a[idx], c.k[idx]].map(f)),
                    None => rec.extend(std::iter::repeat_n(String::new(), 5)),
                }
                w.write_record(&rec)?;
            }
        }
        Ok(())
    })
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{parse_text, Config, RawConfig};

#[derive(Parser, Debug)]
#[command(
    name = "dbbsde",
    version,
    about = "Lattice penalization solvers for doubly reflected BSDEs with jumps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    keys: KeyFlags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and print Y0.
    Solve,
    /// Y0 over an (n, p) grid, written as CSV.
    Table,
    /// Sample trajectories and write one CSV per path into `out`.
    Paths,
    /// Explicit vs implicit gap as n grows.
    Compare,
    /// Path-tree comparison and invariant audit.
    Check,
}

/// Every config key is also a flag; flags override the config file.
#[derive(Args, Debug, Default)]
struct KeyFlags {
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "T", global = true, value_name = "T")]
    horizon: Option<String>,
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<String>,
    #[arg(long, global = true)]
    p: Option<String>,
    /// 1, 2 or unconstrained.
    #[arg(long, global = true)]
    example: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<String>,
    /// explicit or implicit.
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long = "compat_literal_penalty", alias = "compat-literal-penalty", global = true)]
    compat_literal_penalty: Option<String>,
    /// Comma-separated list of step counts.
    #[arg(long = "n_list", alias = "n-list", global = true)]
    n_list: Option<String>,
    /// Comma-separated list of penalty parameters.
    #[arg(long = "p_list", alias = "p-list", global = true, allow_hyphen_values = true)]
    p_list: Option<String>,
    /// Number of paths.
    #[arg(long, global = true)]
    count: Option<String>,
}

impl KeyFlags {
    fn overlay(&self, raw: &mut RawConfig) {
        let pairs = [
            ("T", &self.horizon),
            ("n", &self.n),
            ("lambda", &self.lambda),
            ("p", &self.p),
            ("example", &self.example),
            ("a", &self.a),
            ("scheme", &self.scheme),
            ("seed", &self.seed),
            ("out", &self.out),
            ("compat_literal_penalty", &self.compat_literal_penalty),
            ("n_list", &self.n_list),
            ("p_list", &self.p_list),
            ("count", &self.count),
        ];
        for (key, v) in pairs {
            if let Some(v) = v {
                raw.insert(key.to_string(), v.trim().to_string());
            }
        }
    }
}

fn load(flags: &KeyFlags) -> Result<Config> {
    let mut raw = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| dbbsde::Error::Config(format!("reading {}: {e}", path.display())))?;
            parse_text(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RawConfig::new(),
    };
    flags.overlay(&mut raw);
    Ok(Config::from_raw(&raw)?)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(&cli.keys)?;
    match cli.command {
        Command::Solve => commands::cmd_solve(&cfg),
        Command::Table => commands::cmd_table(&cfg),
        Command::Paths => commands::cmd_paths(&cfg),
        Command::Compare => commands::cmd_compare(&cfg),
        Command::Check => commands::cmd_check(&cfg),
    }
}

/// 2: configuration, 3: numerical failure, 4: invariant violation.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<dbbsde::Error>() {
        Some(dbbsde::Error::Config(_)) => 2,
        Some(dbbsde::Error::RootFind { .. }) => 3,
        Some(
            dbbsde::Error::Invariant(_)
            | dbbsde::Error::BarrierViolation { .. }
            | dbbsde::Error::TerminalMismatch { .. },
        ) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

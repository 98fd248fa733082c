//! Command-line front end for the experiment runner.
//!
//! Errors are printed to stderr as a single JSON object and mapped to exit
//! status 2 (configuration), 3 (numerical failure) or 1 (I/O).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use equilibrate::harness::{
    apply_override, dump_game, override_value, run, sweep, sweep_threads, ErrorCode,
    ExperimentConfig, GameSource, HarnessError, HarnessResult,
};

#[derive(Debug, Parser)]
#[command(
    name = "equilibrate",
    version,
    about = "Equilibrium solvers for two-player zero-sum games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config.
    Solve(SolveArgs),
    /// Run every config matching a glob pattern.
    Sweep {
        /// Glob pattern of config files, expanded in sorted order.
        #[arg(long)]
        configs: String,
        /// Directory receiving `summary.csv` and one `run_<i>` directory per config.
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Print a game as a TreeGame JSON document.
    DumpGame {
        /// Game spec such as `kuhn`, `goofspiel:4` or `random_nfg:5x5:0`.
        #[arg(long)]
        game: String,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `curve.svg`.
    #[arg(long)]
    svg: bool,
    /// Print the effective config and exit without running.
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Inner iterations per subproblem.
    #[arg(long = "inner", value_name = "T")]
    inner: Option<u64>,
    /// Number of subproblems.
    #[arg(long = "outer", value_name = "N")]
    outer: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Any other field as `key=value`, with `params.<name>` for parameters.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl SolveArgs {
    fn config(&self) -> HarnessResult<ExperimentConfig> {
        let text = std::fs::read_to_string(&self.config).map_err(|e| {
            HarnessError::new(ErrorCode::Io, format!("{}: {e}", self.config.display()))
        })?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| HarnessError::invalid(format!("{}: {e}", self.config.display())))?;
        let mut set = |key: &str, v: serde_json::Value| apply_override(&mut value, key, v);
        if let Some(g) = &self.game {
            set("game", g.as_str().into())?;
        }
        if let Some(a) = &self.algorithm {
            set("algorithm", a.as_str().into())?;
        }
        if let Some(n) = self.iterations {
            set("total_iterations", n.into())?;
        }
        if let Some(n) = self.eval_every {
            set("eval_every", n.into())?;
        }
        if let Some(n) = self.seed {
            set("seed", n.into())?;
        }
        if let Some(mu) = self.mu {
            set("params.mu", mu.into())?;
        }
        if let Some(t) = self.inner {
            set("params.T", t.into())?;
        }
        if let Some(n) = self.outer {
            set("params.N", n.into())?;
        }
        if let Some(eta) = self.eta {
            set("params.eta", eta.into())?;
        }
        if let Some(out) = &self.out {
            set("output", out.to_string_lossy().into_owned().into())?;
        }
        if self.svg {
            set("svg", true.into())?;
        }
        for assignment in &self.set {
            let (key, raw) = assignment.split_once('=').ok_or_else(|| {
                HarnessError::invalid(format!("--set expects KEY=VALUE, got {assignment:?}"))
            })?;
            set(key.trim(), override_value(raw.trim()))?;
        }
        ExperimentConfig::from_value(value)
    }
}

fn config_paths(pattern: &str) -> HarnessResult<Vec<PathBuf>> {
    let entries = glob::glob(pattern)
        .map_err(|e| HarnessError::invalid(format!("bad glob {pattern:?}: {e}")))?;
    let mut paths = entries
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| HarnessError::new(ErrorCode::Io, e.to_string()))?;
    paths.sort();
    Ok(paths)
}

fn execute(cli: Cli) -> HarnessResult<()> {
    match cli.command {
        Command::Solve(args) => {
            let config = args.config()?;
            if args.print_config {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&config.effective()).expect("configs serialize")
                );
                return Ok(());
            }
            let summary = run(&config)?;
            println!(
                "{}",
                serde_json::json!({
                    "output": summary.output,
                    "final_exploitability": summary.final_exploitability,
                    "records": summary.records,
                })
            );
            Ok(())
        }
        Command::Sweep { configs, out } => {
            let paths = config_paths(&configs)?;
            let configs = paths
                .iter()
                .map(|p| {
                    ExperimentConfig::load(p).map_err(|e| HarnessError {
                        message: format!("{}: {}", p.display(), e.message),
                        ..e
                    })
                })
                .collect::<HarnessResult<Vec<_>>>()?;
            let summary = sweep(&configs, &out, sweep_threads()?)?;
            println!("{}", summary.summary_path.display());
            match summary.first_error() {
                Some(err) => Err(err.clone()),
                None => Ok(()),
            }
        }
        Command::DumpGame { game, out } => {
            let json = dump_game(&game.parse::<GameSource>()?)?;
            match out {
                Some(path) => std::fs::write(&path, format!("{json}\n")).map_err(|e| {
                    HarnessError::new(ErrorCode::Io, format!("{}: {e}", path.display()))
                }),
                None => {
                    println!("{json}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

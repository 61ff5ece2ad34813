use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use effham_cli::check::check;
use effham_cli::compile::compile_text;
use effham_cli::config::{parse_override, RunConfig};
use effham_cli::simulate::{simulate, write_json};
use effham_cli::{CliError, EXIT_CONFIG, EXIT_OK};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "effham", version, about = "Simulate and check effectively Hamiltonian systems")]
struct Cli {
    /// Directory for relative output paths.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Parameter override `key=value`, repeatable.
    #[arg(long = "param", global = true, value_parser = parse_override)]
    params: Vec<(String, f64)>,
    /// Concurrent runs when several configs are given.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate and write `<stem>.csv` plus `<stem>.report.json`.
    Simulate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run the invariant suites; exit 3 if any fails.
    Check {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Print species, ODEs, stoichiometry and conservation laws of a network.
    Compile { network: PathBuf },
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

fn load(path: &Path, overrides: &[(String, f64)]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_overrides(overrides);
    Ok(cfg)
}

fn run_simulate(path: &Path, cli: &Cli) -> (i32, String) {
    let result = load(path, &cli.params).and_then(|cfg| simulate(&cfg, &stem(path), cli.out_dir.as_deref()));
    match result {
        Ok(o) => {
            let r = &o.report;
            let mut line = format!(
                "{}: {} steps={} k_drift_max={} -> {}",
                path.display(),
                r.status,
                r.steps,
                r.k_drift_max.map_or("n/a".into(), |d| format!("{d:e}")),
                o.trajectory_path.display()
            );
            if let Some(e) = &r.error {
                line.push_str(&format!("\n  {e}"));
            }
            (o.exit_code, line)
        }
        Err(e) => (e.exit_code(), format!("{}: error: {e}", path.display())),
    }
}

fn run_check(path: &Path, cli: &Cli) -> (i32, String) {
    let result = load(path, &cli.params).and_then(|cfg| {
        let report = check(&cfg)?;
        if let Some(dir) = &cli.out_dir {
            write_json(&dir.join(format!("{}.check.json", stem(path))), &report)?;
        }
        Ok(report)
    });
    match result {
        Ok(r) => (r.exit_code(), serde_json::to_string_pretty(&r).expect("serializable report")),
        Err(e) => (e.exit_code(), format!("{}: error: {e}", path.display())),
    }
}

fn run_many(configs: &[PathBuf], cli: &Cli, job: fn(&Path, &Cli) -> (i32, String)) -> i32 {
    let stems: HashSet<String> = configs.iter().map(|p| stem(p)).collect();
    if stems.len() != configs.len() {
        eprintln!("error: config file stems must be distinct so outputs do not collide");
        return EXIT_CONFIG;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let results: Vec<(i32, String)> = pool.install(|| configs.par_iter().map(|p| job(p, cli)).collect());
    let mut code = EXIT_OK;
    for (c, text) in results {
        if c == EXIT_OK {
            println!("{text}");
        } else {
            eprintln!("{text}");
        }
        code = code.max(c);
    }
    code
}

fn run_compile(path: &Path, cli: &Cli) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let overrides: BTreeMap<String, f64> = cli.params.iter().cloned().collect();
    match compile_text(&text, &overrides) {
        Ok(c) => {
            for w in &c.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", c.listing);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Simulate { configs } => run_many(configs, &cli, run_simulate),
        Command::Check { configs } => run_many(configs, &cli, run_check),
        Command::Compile { network } => run_compile(network, &cli),
    };
    ExitCode::from(code as u8)
}

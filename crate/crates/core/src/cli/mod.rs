//! Command-line front end for the `qhj` binary.

pub mod suites;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::action3d::RankFamily;
use crate::config::ExperimentConfig;
use crate::error::{QhjError, Result};
pub use suites::{Check, SuiteOutcome};

/// Environment variable overriding the output directory.
pub const OUTPUT_DIR_ENV: &str = "QHJ_OUTPUT_DIR";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qhj",
    version,
    about = "Build and certify reduced actions of the stationary quantum Hamilton-Jacobi equation"
)]
pub struct Cli {
    /// TOML experiment file; the bundled defaults are used without it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides QHJ_OUTPUT_DIR and the config).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the one-dimensional basis and check it.
    Basis,
    /// Certify the one-dimensional reduced action.
    Action1d,
    /// Compare the sum action with the general action and check a 3D field.
    Compose,
    /// Count independent parameters of each family.
    Rank {
        #[arg(long)]
        family: Option<RankFamily>,
    },
    /// Sweep the continuity constant c1.
    Modified,
    /// Product-coefficient rank and separability checks.
    Microstates,
    /// Integrate the trajectory law.
    Trajectory,
    /// Run every suite.
    VerifyAll,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

/// Exit code for an error raised while running a command.
pub fn exit_code(err: &QhjError) -> i32 {
    match err {
        QhjError::InvalidInput(_)
        | QhjError::OutOfDomain { .. }
        | QhjError::GridMismatch(_)
        | QhjError::Growth { .. }
        | QhjError::OffGrid { .. } => EXIT_CONFIG,
        _ => EXIT_VERIFICATION,
    }
}

/// Loads the config named on the command line (or the defaults) and applies overrides.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| QhjError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::bundled(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `--output-dir`, then `QHJ_OUTPUT_DIR`, then the config.
pub fn output_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &cli.output_dir {
        return dir.clone();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(&cfg.output.dir),
    }
}

/// Runs one suite without touching the file system.
pub fn run_suite(command: Command, cfg: &ExperimentConfig) -> Result<Vec<SuiteOutcome>> {
    Ok(match command {
        Command::Basis => vec![suites::basis(cfg)?],
        Command::Action1d => vec![suites::action1d(cfg)?],
        Command::Compose => vec![suites::compose(cfg)?],
        Command::Rank { family } => vec![suites::rank(cfg, family)?],
        Command::Modified => vec![suites::modified(cfg)?],
        Command::Microstates => vec![suites::microstates(cfg)?],
        Command::Trajectory => vec![suites::trajectory(cfg)?],
        Command::VerifyAll => vec![
            suites::basis(cfg)?,
            suites::action1d(cfg)?,
            suites::compose(cfg)?,
            suites::rank(cfg, None)?,
            suites::modified(cfg)?,
            suites::microstates(cfg)?,
            suites::trajectory(cfg)?,
        ],
        Command::PrintConfig => vec![],
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents).map_err(|e| QhjError::InvalidInput(format!("cannot write {name}: {e}")))
}

fn gnuplot_script(csv: &str, header: &str) -> String {
    let cols: Vec<&str> = header.split(',').collect();
    let mut out = format!("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\nset output '{}.png'\nplot ", csv.trim_end_matches(".csv"));
    let series: Vec<String> = (2..=cols.len()).map(|c| format!("'{csv}' using 1:{c} with lines")).collect();
    out.push_str(&series.join(", \\\n     "));
    out.push('\n');
    out
}

/// Writes every file of `outcome` plus `<command>.json` into `dir`.
pub fn write_outcome(outcome: &SuiteOutcome, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| QhjError::InvalidInput(format!("cannot create {}: {e}", dir.display())))?;
    for (name, contents) in &outcome.files {
        write(dir, name, contents)?;
        if cfg.output.gnuplot && name.ends_with(".csv") {
            let header = contents.lines().next().unwrap_or_default();
            write(dir, &format!("{}.gp", name.trim_end_matches(".csv")), &gnuplot_script(name, header))?;
        }
    }
    let json = serde_json::to_string_pretty(&outcome.report(cfg.seed)).expect("report serializes");
    write(dir, &format!("{}.json", outcome.command), &(json + "\n"))
}

fn print_outcome(outcome: &SuiteOutcome) {
    for c in &outcome.checks {
        println!(
            "{} {}.{}: {:.3e} (limit {:.3e}) [{}]",
            if c.passed { "PASS" } else { "FAIL" },
            outcome.command,
            c.name,
            c.value,
            c.tolerance,
            c.relation
        );
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    let cfg = match load_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if cli.command == Command::PrintConfig {
        print!("{}", cfg.to_toml());
        return EXIT_PASS;
    }
    let outcomes = match run_suite(cli.command, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let dir = output_dir(cli, &cfg);
    let mut passed = true;
    for o in &outcomes {
        print_outcome(o);
        if let Err(e) = write_outcome(o, &cfg, &dir) {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        passed &= o.passed();
    }
    if passed {
        EXIT_PASS
    } else {
        EXIT_VERIFICATION
    }
}

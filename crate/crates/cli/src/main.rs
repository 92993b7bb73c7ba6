use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qlevy_cli::builders::{BUILDERS, GENERATORS};
use qlevy_cli::check::check_defs;
use qlevy_cli::config::{load, Kind};
use qlevy_cli::error::CliError;
use qlevy_cli::exec::thread_cap;
use qlevy_cli::experiments::run;
use qlevy_cli::setup::{prepare, Setup};

/// Experiments on quantum Lévy processes over presented *-bialgebras.
#[derive(Parser)]
#[command(name = "qlevy", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a configuration and check every law its objects must satisfy
    Check {
        config: PathBuf,
    },
    /// Check, then run the experiment and write CSV/JSON artefacts
    Run {
        config: PathBuf,
        /// output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List builders, generators, experiment kinds and acceptance criteria
    ListBuiltins,
}

fn setup(path: &Path) -> Result<Setup, CliError> {
    prepare(load(path)?)
}

fn check(path: &Path) -> Result<ExitCode, CliError> {
    let setup = setup(path)?;
    let report = check_defs(&setup)?;
    print!("{}", report.render());
    if report.passed() {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        let failed = report.lines.iter().filter(|l| !l.pass).count();
        println!("{failed} check(s) failed");
        Ok(ExitCode::from(1))
    }
}

fn run_cmd(path: &Path, out: &Path) -> Result<ExitCode, CliError> {
    let threads = thread_cap()?;
    let setup = setup(path)?;
    let (report, output, written) = run(&setup, out, threads)?;
    print!("{}", report.render());
    for a in &output.assertions {
        let status = match (a.pass, a.documented) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented)",
            (false, false) => "FAIL",
        };
        println!("{status:<17} {}  {}", a.name, a.detail);
    }
    println!("wrote {}", written.summary.display());
    Ok(if output.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn list_builtins() {
    println!("bialgebra builders:");
    for (sig, desc) in BUILDERS {
        println!("  {sig:<26} {desc}");
    }
    println!("generator builtins:");
    for (name, desc) in GENERATORS {
        println!("  {name:<26} {desc}");
    }
    println!("experiment kinds:");
    for k in Kind::ALL {
        println!("  {:<26} {}", k.name(), k.description());
    }
    println!("acceptance criteria:");
    for c in qlevy::acceptance::criteria() {
        let note = if c.attainable { "" } else { " (known limitation)" };
        println!("  {:<26} {}{note}", c.id, c.name);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { config } => check(&config),
        Command::Run { config, out } => run_cmd(&config, &out),
        Command::ListBuiltins => {
            list_builtins();
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code() as u8)
    })
}

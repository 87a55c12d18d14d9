use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imexdg::cli_io::{convergence_study, parse_config, run, run_checks, RunConfig};
use imexdg::Error;

#[derive(Parser)]
#[command(name = "imexdg", version, about = "IMEX DG solver for rotating stratified channel flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration to its final time.
    Run { config: PathBuf },
    /// Self-convergence study over hyperbolically refined levels.
    Converge {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Run the built-in invariant checks.
    Check,
}

fn load(path: &PathBuf) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_solver_failure() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => load(&config).and_then(|cfg| {
            let report = run(&cfg)?;
            if let Some(last) = report.rows.last() {
                println!("{}", imexdg::cli_io::DIAGNOSTICS_HEADER);
                println!("{}", last.csv());
            }
            Ok(())
        }),
        Command::Converge { config, levels } => load(&config).and_then(|cfg| {
            let table = convergence_study(&cfg, levels)?;
            print!("{}", table.csv());
            Ok(())
        }),
        Command::Check => run_checks().and_then(|checks| {
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidState {
                    dof: None,
                    reason: "built-in checks failed".into(),
                })
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

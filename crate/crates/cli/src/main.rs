use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use ep_sim::scenario::load_scenario;
use ep_sim::sim::{plot_script, run_simulation, write_csv};
use ep_sim::verify::{run_all, run_suite, DEFAULT_SEED, SUITE_NAMES};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Closed-loop attitude-tracking simulator with numerical verification
/// suites.
///
/// Exit codes: 0 on success, 1 on validation errors (bad scenario, bad
/// arguments, unknown suite), 2 on runtime failures (diverged simulation,
/// failed verification checks, I/O).
#[derive(Parser)]
#[command(name = "ep-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write the time series as CSV.
    Simulate {
        /// Path to the scenario JSON.
        scenario: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Optional gnuplot script path (plots the CSV).
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Run a verification suite and print per-check residuals.
    Verify {
        /// Suite name, or `all`.
        suite: String,
        /// Seed for the random samples.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

const VALIDATION: u8 = 1;
const RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(VALIDATION);
        }
    };

    match cli.command {
        Command::Simulate {
            scenario,
            out,
            plot,
        } => simulate(&scenario, &out, plot.as_deref()),
        Command::Verify { suite, seed } => verify(&suite, seed),
    }
}

fn simulate(
    scenario: &std::path::Path,
    out: &std::path::Path,
    plot: Option<&std::path::Path>,
) -> ExitCode {
    let s = match load_scenario(scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(VALIDATION);
        }
    };
    let records = match run_simulation(&s) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(RUNTIME);
        }
    };
    let write_outputs = || -> std::io::Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(out)?);
        write_csv(&records, &mut file)?;
        file.flush()?;
        if let Some(plot_path) = plot {
            std::fs::write(plot_path, plot_script(&out.display().to_string()))?;
        }
        Ok(())
    };
    if let Err(e) = write_outputs() {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(RUNTIME);
    }
    let last = records.last().expect("at least one record");
    println!(
        "wrote {} records to {} (final t = {}, Lyapunov = {:.6e})",
        records.len(),
        out.display(),
        last.t,
        last.lyapunov
    );
    ExitCode::SUCCESS
}

fn verify(suite: &str, seed: u64) -> ExitCode {
    let reports = if suite == "all" {
        run_all(seed)
    } else {
        match run_suite(suite, seed) {
            Some(r) => vec![r],
            None => {
                eprintln!(
                    "error: unknown suite `{suite}`; expected one of: {}, all",
                    SUITE_NAMES.join(", ")
                );
                return ExitCode::from(VALIDATION);
            }
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut all_passed = true;
    for report in &reports {
        report.print(&mut out).expect("stdout");
        all_passed &= report.passed();
    }
    if all_passed {
        writeln!(out, "all checks passed").expect("stdout");
        ExitCode::SUCCESS
    } else {
        writeln!(out, "some checks FAILED").expect("stdout");
        ExitCode::from(RUNTIME)
    }
}

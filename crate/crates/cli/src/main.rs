use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vir_lab::{catalog, resolve_output_dir, run, CliResult, RunDescriptor, OUTPUT_ENV};

#[derive(Parser)]
#[command(name = "vir-lab", version, about = "Numerical experiments on the Virasoro group and its discretizations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a descriptor; exit 0 if every verdict passes, 2 if one fails, 1 on error.
    Run {
        descriptor: PathBuf,
        /// Overrides the descriptor's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; takes precedence over VIR_LAB_OUT and the descriptor.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the experiments with their payload fields and defaults.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Check a descriptor without running it.
    Validate { descriptor: PathBuf },
}

fn list(json: bool) {
    let entries = catalog();
    if json {
        println!("{}", serde_json::to_string_pretty(&entries).expect("catalog serializes"));
        return;
    }
    for e in entries {
        println!("{}\n  {}", e.name, e.description);
        for f in &e.fields {
            let default = e.defaults.get(f.name).map(|v| v.to_string()).unwrap_or_default();
            println!("    {:<26} {:<12} {}  [default: {}]", f.name, f.kind, f.meaning, default);
        }
        println!();
    }
}

fn main_inner(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::List { json } => {
            list(json);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { descriptor } => {
            let d = RunDescriptor::from_path(&descriptor)?;
            d.plan()?;
            println!("ok: {}", d.experiment.name());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { descriptor, seed, out } => {
            let mut d = RunDescriptor::from_path(&descriptor)?;
            if let Some(s) = seed {
                d.seed = s;
            }
            let dir = resolve_output_dir(out.as_deref(), std::env::var_os(OUTPUT_ENV), &d);
            let report = run(&d, &dir)?;
            for v in &report.verdicts {
                let mark = if v.pass { "pass" } else { "FAIL" };
                println!("{mark} {} = {:.3e} ({} {:.1e})", v.name, v.value, v.relation, v.threshold);
            }
            println!(
                "{}: {} rows -> {} ({:.2} s)",
                d.experiment.name(),
                report.rows,
                report.csv_path.display(),
                report.wall_time_seconds
            );
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use negf_cli::{run_scenario, Overrides, PipelineRegistry};

#[derive(Parser)]
#[command(name = "negf", version, about = "Exact-diagonalization audits of nonequilibrium Green's function identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its artifact bundle.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        pipeline: Option<String>,
    },
    /// List the available pipelines.
    Pipelines,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Pipelines => {
            for p in PipelineRegistry::default().iter() {
                println!("{:<18} {}", p.name(), p.describe());
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            dt,
            xi,
            seed,
            pipeline,
        } => {
            let overrides = Overrides {
                out,
                dt,
                xi,
                seed,
                pipeline,
            };
            match run_scenario(&config, &overrides) {
                Ok(outcome) => {
                    for e in &outcome.bundle.report.entries {
                        let order = e.observed_order.map(|o| format!("  order {o:.2}")).unwrap_or_default();
                        println!(
                            "{} {:<36} {:.3e} (tol {:.1e}){}",
                            if e.passed { "ok  " } else { "FAIL" },
                            e.name,
                            e.residual,
                            e.tolerance,
                            order
                        );
                    }
                    for p in &outcome.written {
                        eprintln!("wrote {}", p.display());
                    }
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lipkernel::{exit, fixtures, RunOptions};

#[derive(Parser)]
#[command(name = "lipkernel", version, about = "Heat-kernel and Green-function checks above Lipschitz graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in an experiment file.
    Run {
        config: PathBuf,
        /// Output directory (default: run.out, then $LIPKERNEL_OUT, then ./lipkernel-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Print the domain and potential catalogs.
    ListFixtures {
        /// Directory of custom `*.knots` boundary tables.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            jobs,
            quiet,
        } => {
            let opts = RunOptions { out, seed, jobs, quiet };
            match lipkernel::run(&config, &opts) {
                Ok(o) => {
                    if !quiet {
                        let failed = o.results.iter().filter(|(_, r)| !r.as_ref().is_ok_and(|x| x.pass())).count();
                        eprintln!(
                            "{} checks, {failed} not passing, {:.1} s; reports in {}",
                            o.results.len(),
                            o.seconds,
                            o.out_dir.display()
                        );
                    }
                    o.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::ListFixtures { catalog } => match fixtures::catalog_text(catalog.as_deref()) {
            Ok(text) => {
                print!("{text}");
                exit::PASS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit::FAULT
            }
        },
    };
    ExitCode::from(code as u8)
}

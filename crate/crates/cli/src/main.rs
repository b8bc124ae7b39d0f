// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use upex_cli::exit;

#[derive(Parser)]
#[command(
    name = "upex",
    version,
    about = "Sublinear expectations of uncertain continuous-time processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a query file against a model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seed for randomised checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the model's convergence tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() {
                exit::PARSE_ERROR
            } else {
                exit::PASS
            };
            return ExitCode::from(code as u8);
        }
    };
    match cli.command {
        Command::Eval {
            model,
            queries,
            out,
            seed,
            tol,
        } => match upex_cli::run(&model, &queries, &out, seed, tol) {
            Ok(code) => {
                if code != exit::PASS {
                    eprintln!(
                        "one or more checks failed; see {}",
                        out.join("report.json").display()
                    );
                }
                ExitCode::from(code as u8)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit::PARSE_ERROR as u8)
            }
        },
    }
}

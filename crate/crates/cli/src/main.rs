use std::process::ExitCode;

use clap::Parser;
use specpol_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Sequential kernels keep output byte-identical across machines; sweeps
    // are parallel over N instead.
    faer::set_global_parallelism(faer::Par::Seq);
    match specpol_cli::commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

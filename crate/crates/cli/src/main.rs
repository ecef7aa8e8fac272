use std::process::ExitCode;

use clap::Parser;
use scenefit_cli::{init_logging, run, Cli};

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(manifest) => {
            log::info!("{} finished, {} outputs", manifest.command, manifest.outputs.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("scenefit: {e}");
            e.into()
        }
    }
}

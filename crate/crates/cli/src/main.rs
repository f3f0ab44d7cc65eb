use std::process::ExitCode;

use clap::Parser;
use maxent_cli::{render, run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("MAXENT_LOG")).init();
    let cli = Cli::parse();
    let envelope = match run(&cli) {
        Ok(e) => e,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let out = render(&envelope, cli.format);
    match &cli.output {
        Some(path) => {
            if let Err(err) = std::fs::write(path, out) {
                eprintln!("error: {}: {err}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{out}"),
    }
    ExitCode::SUCCESS
}

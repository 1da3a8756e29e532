mod args;
mod commands;
mod config;
mod error;
mod render;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use config::{FileConfig, RunConfig};
use error::{CliError, CliResult};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // --help and --version go to stdout and succeed
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let global = cli.global;
    let file = match &global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let (name, default_format) = match &cli.command {
        Command::Ingest(_) => ("ingest", Format::Csv),
        Command::Estimate(_) => ("estimate", Format::Json),
        Command::Stationary(_) => ("stationary", Format::Json),
        Command::Generate(_) => ("generate", Format::Json),
        Command::Decode(_) => ("decode", Format::Json),
        Command::Train(_) => ("train", Format::Json),
        Command::Fitness(_) => ("fitness", Format::Json),
        Command::Report(_) => ("report", Format::Json),
    };
    let format = global.format.or(file.format).unwrap_or(default_format);
    let tolerance = config::tolerance(global.tolerance, &file)?;
    let run = RunConfig::new(name, format, tolerance, global.output.clone());
    let done = match &cli.command {
        Command::Ingest(a) => commands::ingest(a, &file, run),
        Command::Estimate(a) => commands::estimate_cmd(a, &file, run),
        Command::Stationary(a) => commands::stationary(a, &file, run),
        Command::Generate(a) => commands::generate_cmd(a, &file, run),
        Command::Decode(a) => commands::decode(a, &file, run),
        Command::Train(a) => commands::train(a, &file, run),
        Command::Fitness(a) => commands::fitness(a, &file, run),
        Command::Report(a) => commands::report(a, &file, run),
    }?;
    if global.verbose {
        eprintln!("{}", render::to_json(&done.config).trim_end());
    }
    match &global.output {
        Some(path) => commands::write(path, done.output.as_bytes()),
        None => std::io::stdout()
            .lock()
            .write_all(done.output.as_bytes())
            .map_err(|source| CliError::Write {
                path: "<stdout>".into(),
                source,
            }),
    }
}

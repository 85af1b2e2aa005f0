//! Command-line front end for the event gender-bias pipeline.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use config::PipelineConfig;
pub use error::CliError;
pub use output::Outputs;

/// Parses `args`, runs the subcommand, writes its files and prints its
/// summary. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, 2) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    let result = cli.config.resolve().and_then(|cfg| {
        let outputs = execute(&cfg, &cli.command)?;
        outputs.write_to(&cfg.out)?;
        Ok(outputs)
    });
    match result {
        Ok(outputs) => {
            print!("{}", outputs.stdout);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` and runs the subcommand without touching the file system
/// beyond reading inputs.
pub fn invoke<I, T>(args: I) -> Result<Outputs, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Validation(e.to_string()))?;
    let cfg = cli.config.resolve()?;
    execute(&cfg, &cli.command)
}

/// Runs one subcommand, inside a dedicated thread pool when `threads` is set.
pub fn execute(cfg: &PipelineConfig, command: &Command) -> Result<Outputs, CliError> {
    let go = || match command {
        Command::Ingest => commands::ingest(cfg),
        Command::Detect => commands::detect(cfg),
        Command::Rank => commands::rank(cfg),
        Command::Calibrate(a) => commands::calibrate(cfg, a),
        Command::Weat(a) => commands::weat(cfg, a),
        Command::Percentile => commands::percentile(cfg),
        Command::Eval(a) => commands::eval(cfg, a),
        Command::Report => commands::report(cfg),
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

mod args;
mod commands;
mod manifest;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{BenchCommand, ChannelCommand, Cli, Command};
use commands::Output;
use manifest::Manifest;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_AXIOM: u8 = 4;

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Estimate(_) => "estimate",
        Command::Channel(ChannelCommand::Capacity(_)) => "channel capacity",
        Command::Channel(ChannelCommand::Compose(_)) => "channel compose",
        Command::Channel(ChannelCommand::Parallel(_)) => "channel parallel",
        Command::Channel(ChannelCommand::Augment(_)) => "channel augment",
        Command::Axioms(_) => "axioms",
        Command::Bench(BenchCommand::Sweep(_)) => "bench sweep",
        Command::Bench(BenchCommand::Trend(_)) => "bench trend",
        Command::Bench(BenchCommand::Cascade(_)) => "bench cascade",
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("DEPCAP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("DEPCAP_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn emit(bytes: &[u8]) -> ExitCode {
    let mut out = std::io::stdout().lock();
    if out.write_all(bytes).and_then(|_| out.flush()).is_err() {
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let flags = serde_json::to_value(&cli.command).unwrap_or_default();
    let mut manifest = Manifest::new(subcommand_name(&cli.command).to_owned(), flags);

    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        commands::run(&cli, &mut manifest)
    }));
    match outcome {
        Ok(Ok(Output::Json(v))) => emit(format!("{v:#}\n").as_bytes()),
        Ok(Ok(Output::Csv(bytes))) => emit(&bytes),
        Ok(Ok(Output::Failed(v))) => {
            emit(format!("{v:#}\n").as_bytes());
            ExitCode::from(EXIT_AXIOM)
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            })
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

mod args;
mod commands;
mod failure;
mod manifest;
mod source;

use std::process::ExitCode;

use anyhow::anyhow;
use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use failure::{Failure, Outcome};
use manifest::{first_difference, write_atomic, RunManifest};

fn emit(cli: &Cli, text: &str) -> Outcome<()> {
    match &cli.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn replay(cli: &Cli, path: &std::path::Path) -> Outcome<()> {
    let recorded = RunManifest::read(path)?;
    let run = commands::run(&recorded.params, true)?;
    if run.model_hash != recorded.model_hash {
        return Err(Failure::law(format!(
            "model hash changed: recorded {}, now {}",
            recorded.model_hash, run.model_hash
        )));
    }
    if let Some(diff) = first_difference(&recorded.payload, &run.payload, "payload") {
        return Err(Failure::law(format!("replay differs at {diff}")));
    }
    let report = serde_json::json!({
        "replayed": recorded.command,
        "manifest": path.display().to_string(),
        "model_hash": run.model_hash,
        "reproduced": true,
    });
    emit(cli, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    eprintln!("replay of {}: payload reproduced", recorded.command);
    Ok(())
}

fn execute(cli: &Cli) -> Outcome<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::validation(anyhow!("--threads must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::validation(anyhow!("thread pool: {e}")))?;
    }
    if let Some(path) = &cli.replay {
        return replay(cli, path);
    }
    let Some(cmd) = &cli.command else {
        return Err(Failure::parse(anyhow!("no subcommand given (see --help)")));
    };
    let run = commands::run(cmd, false)?;
    let manifest = RunManifest::new(cmd.clone(), run.model_hash, run.payload);
    emit(cli, &manifest.to_json())?;
    eprintln!("{}: {}", cmd.name(), run.summary);
    match run.law_failure {
        Some(msg) => Err(Failure::law(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(failure::PARSE),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

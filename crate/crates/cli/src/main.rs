use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod error;
mod verify;

use args::{Cli, CommandName, RunConfig};
use error::CliError;

fn run() -> Result<(), CliError> {
    let (name, raw) = Cli::parse().command.split();
    let cfg = RunConfig::resolve(name, &raw)?;
    let (text, pass) = match name {
        CommandName::Bounds => (commands::bounds(&cfg)?, true),
        CommandName::Evolve => (commands::evolve(&cfg)?, true),
        CommandName::Threshold => (commands::threshold(&cfg)?, true),
        CommandName::Couple => (commands::couple(&cfg)?, true),
        CommandName::HardcoreCheck => commands::hardcore_check(&cfg)?,
        CommandName::Verify => commands::verify(&cfg)?,
    };
    emit(cfg.out.as_deref(), &text)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(count_failures(&text)))
    }
}

fn count_failures(text: &str) -> usize {
    serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .and_then(|v| match &v["result"] {
            serde_json::Value::Array(items) => Some(items.iter().filter(|c| c["pass"] == false).count()),
            _ => None,
        })
        .unwrap_or(1)
}

fn emit(out: Option<&str>, text: &str) -> std::io::Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => {
            let path = Path::new(path);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)
        }
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

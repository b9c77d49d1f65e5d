use std::path::PathBuf;
use std::process::ExitCode;

use bclab::config::RunConfig;
use bclab::runner::{run, Command};
use bclab::Error;
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, ValueEnum)]
enum Sub {
    Tail,
    Sandwich,
    Mixing,
    Sp,
    Bc,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Tail => Command::Tail,
            Sub::Sandwich => Command::Sandwich,
            Sub::Mixing => Command::Mixing,
            Sub::Sp => Command::Sp,
            Sub::Bc => Command::Bc,
        }
    }
}

/// Shrinking-target and smooth-sandwich experiments on the torus.
#[derive(Parser)]
#[command(name = "bclab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("bclab: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail(&Error::Config(format!("cannot read {}: {e}", cli.config.display()))),
    };
    let mut cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let outcome = match run(cli.command.into(), &cfg, &cli.out, cli.workers) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    print!("{}", outcome.report);
    for check in &outcome.checks {
        println!("{check}");
    }
    match outcome.verdict() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

//! `Σ h″(T^t x) / Σ ∫h″` over 200 starting points: the spread narrows as N grows.

use bclab::config::RunConfig;
use bclab::runner::{execute, Command};

fn main() -> bclab::Result<()> {
    let cfg = RunConfig::parse("bc.ratio_horizons = 500,2000,20000\nbc.hit_samples = 20\n")?;
    let out = execute(Command::Bc, &cfg)?;
    print!("{}", out.report);
    Ok(())
}

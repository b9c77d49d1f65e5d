//! Second-moment ratio of `h″` sums on dyadic windows, exactly over a 512²
//! grid and by Monte Carlo on 1024², against the ceiling `2EC² ed_sup`.

use bclab::config::RunConfig;
use bclab::runner::{execute, Command};

fn main() -> bclab::Result<()> {
    for text in [
        "grid.n = 512\nsp.mode = exact\n",
        "grid.n = 1024\nsp.mode = monte_carlo\nsp.samples = 4096\nrun.seed = 7\n",
    ] {
        let cfg = RunConfig::parse(text)?;
        let out = execute(Command::Sp, &cfg)?;
        print!("{}", out.report);
        print!("{}", out.file("sp.csv").unwrap_or_default());
        for c in &out.checks {
            println!("{c}");
        }
    }
    Ok(())
}

//! Drives a subcommand through the library and writes its outputs to a
//! temporary directory, as the CLI does.

use bclab::config::RunConfig;
use bclab::runner::{run, Command};

fn main() -> bclab::Result<()> {
    let cfg = RunConfig::parse("grid.n = 256\nmixing.t_max = 12\n")?;
    let dir = tempfile::tempdir()?;
    for cmd in [Command::Tail, Command::Mixing] {
        let out = run(cmd, &cfg, dir.path(), Some(2))?;
        println!("{cmd}: passed = {}", out.passed());
    }
    let mut names: Vec<_> = std::fs::read_dir(dir.path())?.map(|e| e.map(|e| e.file_name())).collect::<Result<_, _>>()?;
    names.sort();
    println!("{names:?}");
    Ok(())
}

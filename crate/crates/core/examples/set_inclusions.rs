//! Cell-exact check of `A(z+δ) ⊂ A′(z,ε) ⊂ A(z) ⊂ A″(z,ε) ⊂ A(z−δ)` at the
//! derived `ε`, then with an `ε` that is far too large.

use bclab::grid::TorusGrid;
use bclab::mollifier::{check_squeeze, derived_epsilon};
use bclab::tail::{dl_log_dist, fit_dl, tail_function, uniform_levels, LOG_DIST_Z0};

fn main() -> bclab::Result<()> {
    let grid = TorusGrid::new(2, 1024)?;
    let delta = dl_log_dist(grid, &[0.5, 0.5])?;
    let cert = fit_dl(&tail_function(&delta, &uniform_levels(0.0, 4.5, 0.01))?, 0.5, LOG_DIST_Z0)?;
    let eps = derived_epsilon(&delta, 0.5, LOG_DIST_Z0, 4.0)?;
    println!("derived epsilon {eps:.5}");
    for i in 0..10 {
        let z = LOG_DIST_Z0 + (4.0 - LOG_DIST_Z0) * i as f64 / 9.0;
        println!("{}", check_squeeze(&delta, z, eps, &cert)?);
    }
    println!("oversized:");
    for z in [1.5, 3.0] {
        println!("{}", check_squeeze(&delta, z, 0.05, &cert)?);
    }
    Ok(())
}

//! Tail of `Δ(x) = −log dist(x, c)` on a 1024² grid against `πe^{−2z}`, the
//! decay certificate at two lags, and the continuity modulus on the level shell.

use bclab::grid::TorusGrid;
use bclab::tail::{continuity_modulus, continuity_modulus_banded, dl_log_dist, fit_dl, tail_function, uniform_levels, LogDistance, LOG_DIST_Z0};

fn main() -> bclab::Result<()> {
    let grid = TorusGrid::new(2, 1024)?;
    let center = [0.5, 0.5];
    let delta = dl_log_dist(grid, &center)?;
    let exact = LogDistance::new(&center)?;
    let tail = tail_function(&delta, &uniform_levels(-0.5, 4.5, 0.01))?;
    for z in [1.0, 2.0, 3.0, 4.0] {
        let e = exact.exact_tail(z).unwrap_or(f64::NAN);
        println!("Phi({z}) = {:.5e}  exact {e:.5e}  rel err {:+.2e}", tail.at(z), tail.at(z) / e - 1.0);
    }
    for lag in [0.5, 1.0] {
        let cert = fit_dl(&tail, lag, LOG_DIST_Z0)?;
        println!("lag {lag}: c = {:.4} (e^(-2 lag) = {:.4}), holds: {}", cert.c, (-2.0 * lag).exp(), cert.holds_on(&tail));
    }
    let scales: Vec<f64> = (1..=8).map(|k| k as f64 / 1024.0).collect();
    let full = continuity_modulus(&delta, LOG_DIST_Z0, &scales)?;
    let shell = continuity_modulus_banded(&delta, LOG_DIST_Z0, 4.5, &scales)?;
    println!("{:>8} {:>12} {:>12}", "scale", "full set", "shell");
    for ((e, a), (_, b)) in full.pairs.iter().zip(&shell.pairs) {
        println!("{e:>8.5} {a:>12.4} {b:>12.4}");
    }
    Ok(())
}

//! Builds the smooth sandwich `h′ ≤ 1_{A(z)} ≤ h″` for `Δ = −log dist` on a
//! 1024² torus grid over a range of levels and checks the pointwise chain,
//! the mass squeeze, and one regularity constant for every level.

use std::time::Instant;

use bclab::grid::TorusGrid;
use bclab::mollifier::{build_bump, epsilon_rule, min_bump_epsilon, sandwich_scan, theoretical_c};
use bclab::tail::{continuity_modulus, dl_log_dist, fit_dl, tail_function, uniform_levels, LOG_DIST_Z0};

fn main() -> bclab::Result<()> {
    let clock = Instant::now();
    let grid = TorusGrid::new(2, 1024)?;
    let delta = dl_log_dist(grid, &[0.5, 0.5])?;
    let (dl_delta, z_max) = (0.5, 4.0);

    let tail = tail_function(&delta, &uniform_levels(0.0, z_max + dl_delta, 0.01))?;
    let dl = fit_dl(&tail, dl_delta, LOG_DIST_Z0)?;
    println!("DL certificate: z0={:.4} c={:.4} delta={}", dl.z0, dl.c, dl.delta);

    let scales: Vec<f64> = (1..=8).map(|k| k as f64 / grid.n() as f64).collect();
    let modulus = continuity_modulus(&delta, dl.z0, &scales)?;
    let rule = epsilon_rule(Some(&modulus), dl_delta, z_max);
    let epsilon = rule.max(min_bump_epsilon(grid));
    println!("epsilon: rule {rule:.5}, kernel floor {:.5}, using {epsilon:.5}", min_bump_epsilon(grid));

    let spec = build_bump(grid, epsilon)?;
    let c = theoretical_c(&spec, 1, dl.c)?;
    let levels: Vec<f64> = (0..30).map(|i| dl.z0 + (z_max - dl.z0) * i as f64 / 29.0).collect();
    let rows = sandwich_scan(&delta, &levels, &spec, 1, c)?;

    println!("{:>6} {:>10} {:>10} {:>10} {:>9} {:>9}  chain squeeze", "z", "phi", "|h'|_1", "|h''|_1", "new", "old");
    for r in &rows {
        println!(
            "{:>6.3} {:>10.3e} {:>10.3e} {:>10.3e} {:>9.3} {:>9.3}  {:>5} {:>7}",
            r.z,
            r.phi,
            r.l1_lo,
            r.l1_hi,
            r.ratio_new_lo.unwrap_or(f64::NAN),
            r.ratio_old_lo.unwrap_or(f64::NAN),
            r.chain_violations == 0,
            r.squeeze_holds(dl.c, grid),
        );
    }
    let worst = rows
        .iter()
        .flat_map(|r| [r.ratio_new_lo, r.ratio_new_hi])
        .flatten()
        .fold(0.0, f64::max);
    println!("C = {c:.3}, largest ratio_new = {worst:.3}; uniform: {}", rows.iter().all(|r| r.regular()));
    println!("elapsed {:.1?}", clock.elapsed());
    Ok(())
}

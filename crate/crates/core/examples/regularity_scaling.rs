//! Why the regularity constant must scale with `√‖h‖₁`: over shrinking level
//! sets one constant bounds `‖h‖_{2,1}/√‖h‖₁`, while `‖h‖_{2,1}/‖h‖₁` blows up.

use bclab::grid::TorusGrid;
use bclab::mollifier::{build_bump, build_sandwich, check_regular, min_bump_epsilon, theoretical_c};
use bclab::tail::{dl_log_dist, fit_dl, tail_function, uniform_levels, LOG_DIST_Z0};

fn main() -> bclab::Result<()> {
    let grid = TorusGrid::new(2, 512)?;
    let delta = dl_log_dist(grid, &[0.5, 0.5])?;
    let cert = fit_dl(&tail_function(&delta, &uniform_levels(0.0, 4.5, 0.01))?, 0.5, LOG_DIST_Z0)?;
    let spec = build_bump(grid, min_bump_epsilon(grid))?;
    let c = theoretical_c(&spec, 1, cert.c)?;
    println!("C = {c:.2}");
    println!("{:>5} {:>11} {:>10} {:>10}", "z", "|h'|_1", "new", "old");
    for z in [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
        let h = build_sandwich(&delta, z, spec.epsilon(), &spec)?.h_lo;
        let r = check_regular(&h, c, 1)?;
        println!("{z:>5.2} {:>11.4e} {:>10.3} {:>10.2}  {}", h.integral(), r.measured_ratio_new, r.measured_ratio_old, if r.valid() { "ok" } else { "FAIL" });
    }
    Ok(())
}

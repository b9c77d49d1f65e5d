//! Shrinking targets `{Δ ≥ r_t}` with `μ = 1/(t+1)` along cat-map orbits: the
//! hit count tracks `Σ μ` and its ratio stays in the DL band.

use bclab::dynamics::MapSystem;
use bclab::experiment::{ensemble, hit_count, TargetSchedule};
use bclab::tail::LogDistance;

fn main() -> bclab::Result<()> {
    let cat = MapSystem::cat();
    let delta = LogDistance::new(&[0.5, 0.5])?;
    let schedule = TargetSchedule::harmonic(&delta, 100_000)?;
    for n in [1_000u64, 10_000, 100_000] {
        let s = ensemble(&cat, 100, 0, |x| {
            let h = hit_count(&cat, &delta, &schedule, x, n)?;
            Ok(h.ratio.unwrap_or(f64::NAN))
        })?;
        println!(
            "N = {n:>6}: expected {:>7.3}, ratio q05 {:.3} median {:.3} q95 {:.3}",
            schedule.partial_sum(n as usize),
            s.q05,
            s.median,
            s.q95
        );
    }
    Ok(())
}

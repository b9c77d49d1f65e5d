//! Random checks of `‖ψ ∗ h‖₂ ≤ ‖ψ‖₁ ‖h‖₂` for nonnegative kernels on a 128² grid.

use bclab::grid::{convolve, lp_norm, GridFunction, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bclab::Result<()> {
    let grid = TorusGrid::new(2, 128)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let width = rng.gen_range(0.01..0.3);
        let (cx, cy) = (rng.gen::<f64>(), rng.gen::<f64>());
        let psi = GridFunction::from_fn(grid, |[x, y]| {
            let d = bclab::grid::torus_distance(&[x, y], &[cx, cy]);
            (-(d / width).powi(2)).exp()
        })?;
        let h = GridFunction::new(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let lhs = lp_norm(&convolve(&psi, &h)?, 2.0)?;
        let rhs = lp_norm(&psi, 1.0)? * lp_norm(&h, 2.0)?;
        worst = worst.max(lhs - rhs);
    }
    println!("largest ‖ψ∗h‖₂ − ‖ψ‖₁‖h‖₂ over 50 pairs: {worst:.3e}");
    Ok(())
}

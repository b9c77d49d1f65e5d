//! Characters under the cat map: `e_k ∘ T = e_{Mᵀk}`, so correlations of
//! cosines are exactly 0 or 1/2 on any grid.

use std::f64::consts::PI;

use bclab::dynamics::{correlation, MapSystem};
use bclab::grid::{GridFunction, TorusGrid};

fn main() -> bclab::Result<()> {
    let grid = TorusGrid::new(2, 64)?;
    let cat = MapSystem::cat();
    let re = |k: [f64; 2]| GridFunction::from_fn(grid, move |[x, y]| (2.0 * PI * (k[0] * x + k[1] * y)).cos());
    let e10 = re([1.0, 0.0])?;
    for k in [[2.0, 1.0], [1.0, 1.0], [1.0, 0.0], [3.0, 2.0]] {
        println!("<Re e_(1,0) o T, Re e_{k:?}> = {:+.3e}", correlation(&cat, &e10, &re(k)?, 1)?);
    }
    println!("<Re e_(1,0) o T^2, Re e_(5,3)> = {:+.3e}", correlation(&cat, &e10, &re([5.0, 3.0])?, 2)?);
    Ok(())
}

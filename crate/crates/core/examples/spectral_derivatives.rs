//! Spectral derivatives against central differences and the Sobolev norm of a
//! trigonometric polynomial against its closed form.

use std::f64::consts::PI;

use bclab::grid::{central_difference, derivative, lp_norm, sobolev_norm, GridFunction, MultiIndex, TorusGrid};

fn main() -> bclab::Result<()> {
    for n in [64, 128, 256, 512] {
        let grid = TorusGrid::new(2, n)?;
        let f = GridFunction::from_fn(grid, |[x, y]| (2.0 * PI * x).sin() * (4.0 * PI * y).cos().exp())?;
        let spectral = derivative(&f, &MultiIndex::new(&[1, 0])?)?;
        let fd = central_difference(&f, 0)?;
        let err = lp_norm(&spectral.zip_with(&fd, |a, b| a - b)?, 2.0)?;
        println!("n = {n:>3}: ‖∂ₓf − δₓf‖₂ = {err:.3e}");
    }
    let grid = TorusGrid::new(2, 64)?;
    let g = GridFunction::from_fn(grid, |[x, y]| (2.0 * PI * (x + 2.0 * y)).cos())?;
    // Σ_{|α| ≤ 1} ‖D^α g‖₂ = (1 + 2π + 4π)/√2.
    let closed = (1.0 + 6.0 * PI) / 2f64.sqrt();
    println!("‖cos 2π(x+2y)‖_(2,1) = {:.12} (closed form {closed:.12})", sobolev_norm(&g, 1)?);
    Ok(())
}

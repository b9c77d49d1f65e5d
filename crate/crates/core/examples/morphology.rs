//! Erosion and dilation of a disk by exact Euclidean distance, and the
//! complement duality between them.

use bclab::grid::{dilate, erode, IndicatorMask, TorusGrid};

fn main() -> bclab::Result<()> {
    let grid = TorusGrid::new(2, 256)?;
    let disk = IndicatorMask::from_fn(grid, |[x, y]| (x - 0.5).hypot(y - 0.5) <= 0.2);
    let eps = 10.5 / 256.0;
    let inner = erode(&disk, eps)?;
    let outer = dilate(&disk, eps)?;
    let area = |r: f64| std::f64::consts::PI * r * r;
    println!("disk      {:.5} (pi r^2 = {:.5})", disk.measure(), area(0.2));
    println!("eroded    {:.5} (pi (r-eps)^2 = {:.5})", inner.measure(), area(0.2 - eps));
    println!("dilated   {:.5} (pi (r+eps)^2 = {:.5})", outer.measure(), area(0.2 + eps));
    let dual = dilate(&disk.complement(), eps)?.complement();
    println!("erode(A) == complement(dilate(complement A)): {}", dual == inner);
    Ok(())
}

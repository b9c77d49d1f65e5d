//! Exact Euclidean erosion and dilation on the torus.
//!
//! Distances are measured between grid points with the torus metric. The
//! squared distance transform is the separable lower-envelope algorithm
//! (Felzenszwalb–Huttenlocher) run over three periodic copies of each line,
//! which is exact because no torus axis offset exceeds half a period.

use super::{IndicatorMask, TorusGrid};
use crate::error::{Error, Result};

/// Smallest structuring radius, in units of the grid spacing.
pub const RESOLUTION_CELLS: f64 = 4.0;

/// Lower envelope of parabolas `(x - q)^2 + f(q)` over `q` in three periodic
/// copies of the line, evaluated at `x = 0..n`.
fn envelope_1d(f: &[f64], out: &mut [f64], sites: &mut Vec<f64>, heights: &mut Vec<f64>, bounds: &mut Vec<f64>) {
    let n = f.len();
    sites.clear();
    heights.clear();
    bounds.clear();
    for shift in [-1i64, 0, 1] {
        for (i, &h) in f.iter().enumerate() {
            if !h.is_finite() {
                continue;
            }
            let q = i as f64 + (shift * n as i64) as f64;
            // Pop parabolas hidden by the new one.
            while let Some(&p) = sites.last() {
                let hp = *heights.last().unwrap();
                let s = ((h + q * q) - (hp + p * p)) / (2.0 * (q - p));
                if s <= *bounds.last().unwrap() {
                    sites.pop();
                    heights.pop();
                    bounds.pop();
                } else {
                    bounds.push(s);
                    break;
                }
            }
            if sites.is_empty() {
                bounds.clear();
                bounds.push(f64::NEG_INFINITY);
            }
            sites.push(q);
            heights.push(h);
        }
    }
    if sites.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    // bounds[k] is the left end of parabola k's interval.
    let mut k = 0;
    for (x, o) in out.iter_mut().enumerate() {
        let x = x as f64;
        while k + 1 < sites.len() && bounds[k + 1] < x {
            k += 1;
        }
        let d = x - sites[k];
        *o = d * d + heights[k];
    }
}

/// Squared torus distance from every grid point to the nearest cell of
/// `features`, in units of squared grid spacings (exact integers). Cells are
/// `INFINITY` when `features` is empty.
pub fn squared_distance_transform(features: &IndicatorMask) -> Vec<f64> {
    let grid = features.grid();
    let n = grid.n();
    let init: Vec<f64> = features
        .bits()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let (mut sites, mut heights, mut bounds) = (Vec::new(), Vec::new(), Vec::new());
    let mut out = vec![0.0; n];
    if grid.dim() == 1 {
        envelope_1d(&init, &mut out, &mut sites, &mut heights, &mut bounds);
        return out;
    }
    // Pass along the contiguous axis, then along the strided one.
    let mut stage = vec![0.0; grid.len()];
    for row in 0..n {
        let line = &init[row * n..(row + 1) * n];
        envelope_1d(line, &mut out, &mut sites, &mut heights, &mut bounds);
        stage[row * n..(row + 1) * n].copy_from_slice(&out);
    }
    let mut result = vec![0.0; grid.len()];
    let mut column = vec![0.0; n];
    for col in 0..n {
        for row in 0..n {
            column[row] = stage[row * n + col];
        }
        envelope_1d(&column, &mut out, &mut sites, &mut heights, &mut bounds);
        for row in 0..n {
            result[row * n + col] = out[row];
        }
    }
    result
}

fn guard(grid: TorusGrid, epsilon: f64) -> Result<f64> {
    let min = RESOLUTION_CELLS / grid.n() as f64;
    if !(epsilon >= min) {
        return Err(Error::ResolutionTooCoarse {
            what: "epsilon",
            value: epsilon,
            guard: min,
        });
    }
    let r = epsilon * grid.n() as f64;
    Ok(r * r)
}

/// `{x ∈ A : dist(x, Aᶜ) ≥ ε}`.
pub fn erode(a: &IndicatorMask, epsilon: f64) -> Result<IndicatorMask> {
    Ok(erode_many(a, &[epsilon])?.remove(0))
}

/// `{x : dist(x, A) ≤ ε}`.
pub fn dilate(a: &IndicatorMask, epsilon: f64) -> Result<IndicatorMask> {
    Ok(dilate_many(a, &[epsilon])?.remove(0))
}

/// [`erode`] at several radii, sharing one distance transform.
pub fn erode_many(a: &IndicatorMask, epsilons: &[f64]) -> Result<Vec<IndicatorMask>> {
    let radii = epsilons.iter().map(|&e| guard(a.grid(), e)).collect::<Result<Vec<_>>>()?;
    let d2 = squared_distance_transform(&a.complement());
    radii
        .into_iter()
        .map(|r2| {
            let bits = a.bits().iter().zip(&d2).map(|(&inside, &d)| inside && d >= r2).collect();
            IndicatorMask::new(a.grid(), bits)
        })
        .collect()
}

/// [`dilate`] at several radii, sharing one distance transform.
pub fn dilate_many(a: &IndicatorMask, epsilons: &[f64]) -> Result<Vec<IndicatorMask>> {
    let radii = epsilons.iter().map(|&e| guard(a.grid(), e)).collect::<Result<Vec<_>>>()?;
    let d2 = squared_distance_transform(a);
    radii
        .into_iter()
        .map(|r2| IndicatorMask::new(a.grid(), d2.iter().map(|&d| d <= r2).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::torus_distance;
    use std::f64::consts::PI;

    fn brute_force_d2(features: &IndicatorMask) -> Vec<f64> {
        let g = features.grid();
        let n = g.n() as f64;
        let pts: Vec<usize> = (0..g.len()).filter(|&i| features.bits()[i]).collect();
        (0..g.len())
            .map(|i| {
                let p = g.point(i);
                pts.iter()
                    .map(|&j| {
                        let d = torus_distance(&p, &g.point(j)) * n;
                        (d * d).round()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn transform_matches_brute_force() {
        let g = TorusGrid::new(2, 32).unwrap();
        let mut state = 12345u64;
        let bits = (0..g.len())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33).is_multiple_of(37)
            })
            .collect();
        let m = IndicatorMask::new(g, bits).unwrap();
        assert_eq!(squared_distance_transform(&m), brute_force_d2(&m));

        let g1 = TorusGrid::new(1, 64).unwrap();
        let m1 = IndicatorMask::from_fn(g1, |[x, _]| (0.1..0.2).contains(&x));
        assert_eq!(squared_distance_transform(&m1), brute_force_d2(&m1));
    }

    #[test]
    fn erode_disk_shrinks_radius() {
        let g = TorusGrid::new(2, 512).unwrap();
        let c = [0.5, 0.5];
        let a = IndicatorMask::from_fn(g, |p| torus_distance(&p, &c) <= 0.3);
        let e = erode(&a, 0.1).unwrap();
        assert!(e.is_subset_of(&a));
        let expected = PI * 0.04;
        let tol = 2.0 * (2.0 * PI * 0.2) / 512.0;
        assert!((e.measure() - expected).abs() <= tol, "{}", e.measure());
    }

    #[test]
    fn dilate_disk_grows_radius() {
        let g = TorusGrid::new(2, 512).unwrap();
        let c = [0.5, 0.5];
        let a = IndicatorMask::from_fn(g, |p| torus_distance(&p, &c) <= 0.2);
        let d = dilate(&a, 0.1).unwrap();
        assert!(a.is_subset_of(&d));
        let expected = PI * 0.09;
        let tol = 2.0 * (2.0 * PI * 0.3) / 512.0;
        assert!((d.measure() - expected).abs() <= tol, "{}", d.measure());
    }

    #[test]
    fn trivial_sets() {
        let g = TorusGrid::new(2, 64).unwrap();
        let full = IndicatorMask::full(g);
        let empty = IndicatorMask::empty(g);
        assert_eq!(erode(&full, 0.2).unwrap(), full);
        assert_eq!(erode(&empty, 0.2).unwrap(), empty);
        assert_eq!(dilate(&empty, 0.2).unwrap(), empty);
        assert_eq!(dilate(&full, 0.2).unwrap(), full);
    }

    #[test]
    fn resolution_guard() {
        let g = TorusGrid::new(2, 64).unwrap();
        let a = IndicatorMask::full(g);
        assert!(matches!(erode(&a, 3.0 / 64.0), Err(Error::ResolutionTooCoarse { .. })));
        assert!(dilate(&a, 4.0 / 64.0).is_ok());
    }

    #[test]
    fn opening_of_convex_set_contains_it() {
        let g = TorusGrid::new(2, 64).unwrap();
        let a = IndicatorMask::from_fn(g, |p| torus_distance(&p, &[0.4, 0.6]) <= 0.17);
        let eps = 5.5 / 64.0;
        let closed = erode(&dilate(&a, eps).unwrap(), eps).unwrap();
        assert!(a.is_subset_of(&closed));
    }
}

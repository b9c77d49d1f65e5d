//! Discrete calculus on the unit torus `T^d`, `d ∈ {1, 2}`.
//!
//! A [`TorusGrid`] carries `n` points per axis at `i / n`. Functions are
//! stored axis-major (the first axis varies slowest), so the point with
//! multi-index `(i0, i1)` lives at flat index `i0 * n + i1`. Integrals are
//! Riemann sums: every cell has measure `n^{-d}`.

mod io;
mod morphology;
mod spectral;

pub use io::{read_binary, write_binary, write_csv};
pub use morphology::{dilate, dilate_many, erode, erode_many, squared_distance_transform, RESOLUTION_CELLS};
pub use spectral::{central_difference, convolve, derivative, sobolev_norm, Spectrum};

use crate::error::{Error, Result};

/// Largest derivative order accepted by [`derivative`].
pub const MAX_DERIVATIVE_ORDER: usize = 3;

/// Uniform grid on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be a power of two >= 16, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of one cell, `n^{-d}`.
    pub fn cell_measure(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// Multi-index of a flat index (unused trailing axes are zero).
    #[inline]
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    #[inline]
    pub fn flatten(&self, ix: [usize; 2]) -> usize {
        if self.dim == 1 {
            ix[0]
        } else {
            ix[0] * self.n + ix[1]
        }
    }

    /// Coordinates of a grid point in `[0, 1)^d` (trailing axis zero in 1-D).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(idx);
        let h = self.spacing();
        [a as f64 * h, b as f64 * h]
    }

    /// Flat index of the grid point nearest to `x`.
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let n = self.n as f64;
        let mut ix = [0usize; 2];
        for (k, slot) in ix.iter_mut().enumerate().take(self.dim) {
            let v = (x[k].rem_euclid(1.0) * n + 0.5).floor() as usize;
            *slot = v % self.n;
        }
        self.flatten(ix)
    }

    /// Iterator over the coordinates of every grid point, in storage order.
    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Torus distance: per-axis wrap to `[-1/2, 1/2]`, then Euclidean norm.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = (a - b).rem_euclid(1.0);
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// A real-valued function sampled on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at every grid point. `f` receives `[x, y]` (`y = 0` in 1-D).
    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut([f64; 2]) -> f64) -> Result<Self> {
        let values = grid.points().map(&mut f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Nearest-cell lookup at an arbitrary point of the torus.
    pub fn sample(&self, x: &[f64]) -> f64 {
        self.values[self.grid.nearest_index(x)]
    }

    /// `∫ f dμ` as a Riemann sum.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `⟨f, g⟩ = ∫ f g dμ`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_measure())
    }

    /// Superlevel set `{f ≥ z}` (ties included).
    pub fn superlevel(&self, z: f64) -> IndicatorMask {
        IndicatorMask {
            grid: self.grid,
            bits: self.values.iter().map(|&v| v >= z).collect(),
        }
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }
}

/// `(Σ |f|^p n^{-d})^{1/p}`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("L^p exponent must be >= 1, got {p}")));
    }
    let cell = f.grid.cell_measure();
    let s = if p == 1.0 {
        f.values.iter().map(|v| v.abs()).sum::<f64>()
    } else if p == 2.0 {
        f.values.iter().map(|v| v * v).sum::<f64>()
    } else if p.is_infinite() {
        return Ok(f.values.iter().fold(0.0, |m, v| m.max(v.abs())));
    } else {
        f.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()
    };
    Ok((s * cell).powf(1.0 / p))
}

/// Multi-index `α = (α_1, …, α_d)` selecting the operator `∂^{α_1}_1 ⋯ ∂^{α_d}_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    components: [usize; 2],
    dim: usize,
}

impl MultiIndex {
    pub fn new(components: &[usize]) -> Result<Self> {
        if components.is_empty() || components.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "multi-index must have 1 or 2 components, got {}",
                components.len()
            )));
        }
        let mut c = [0usize; 2];
        c[..components.len()].copy_from_slice(components);
        Ok(Self {
            components: c,
            dim: components.len(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            components: [0; 2],
            dim,
        }
    }

    pub fn components(&self) -> &[usize] {
        &self.components[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `|α|`.
    pub fn order(&self) -> usize {
        self.components().iter().sum()
    }

    /// Every multi-index of dimension `dim` with `|α| ≤ max_order`, ordered by
    /// total order and then lexicographically. There are `C(ℓ+d, d)` of them.
    pub fn up_to(dim: usize, max_order: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            if dim == 1 {
                out.push(Self {
                    components: [order, 0],
                    dim,
                });
            } else {
                for a in (0..=order).rev() {
                    out.push(Self {
                        components: [a, order - a],
                        dim,
                    });
                }
            }
        }
        out
    }
}

/// Boolean set of grid cells; the carrier of superlevel sets and their
/// morphological variants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMask {
    grid: TorusGrid,
    bits: Vec<bool>,
}

impl IndicatorMask {
    pub fn new(grid: TorusGrid, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} cells, got {}",
                grid.len(),
                bits.len()
            )));
        }
        Ok(Self { grid, bits })
    }

    pub fn empty(grid: TorusGrid) -> Self {
        Self {
            grid,
            bits: vec![false; grid.len()],
        }
    }

    pub fn full(grid: TorusGrid) -> Self {
        Self {
            grid,
            bits: vec![true; grid.len()],
        }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> bool) -> Self {
        Self {
            grid,
            bits: grid.points().map(f).collect(),
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_measure()
    }

    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.grid == other.grid && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Number of cells in `self` but not in `other`.
    pub fn excess_over(&self, other: &Self) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && !b)
            .count()
    }

    pub fn to_function(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Boundary length estimate: the number of in/out cell faces times the
    /// spacing, scaled by `π/4` to undo the bias of axis-aligned faces on
    /// curved boundaries. In 1-D this is the number of boundary points.
    pub fn perimeter(&self) -> f64 {
        let n = self.grid.n;
        let mut faces = 0usize;
        for idx in 0..self.bits.len() {
            let [a, b] = self.grid.unflatten(idx);
            let here = self.bits[idx];
            let right = self.grid.flatten([(a + 1) % n, b]);
            if self.bits[right] != here {
                faces += 1;
            }
            if self.grid.dim == 2 {
                let up = self.grid.flatten([a, (b + 1) % n]);
                if self.bits[up] != here {
                    faces += 1;
                }
            }
        }
        if self.grid.dim == 1 {
            faces as f64
        } else {
            faces as f64 * self.grid.spacing() * std::f64::consts::FRAC_PI_4
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_guards() {
        assert!(TorusGrid::new(2, 8).is_err());
        assert!(TorusGrid::new(2, 48).is_err());
        assert!(TorusGrid::new(3, 16).is_err());
        let g = TorusGrid::new(2, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.cell_measure() * g.len() as f64 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_examples() {
        let g = TorusGrid::new(2, 32).unwrap();
        let one = GridFunction::constant(g, 1.0);
        assert!((lp_norm(&one, 2.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(lp_norm(&GridFunction::zeros(g), 2.0).unwrap(), 0.0);

        let g1 = TorusGrid::new(1, 256).unwrap();
        let s = GridFunction::from_fn(g1, |[x, _]| (2.0 * PI * x).sin()).unwrap();
        assert!((lp_norm(&s, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn lp_norm_rejects_small_exponent() {
        let g = TorusGrid::new(1, 16).unwrap();
        let f = GridFunction::constant(g, 1.0);
        assert!(matches!(lp_norm(&f, 0.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn non_finite_values_rejected() {
        let g = TorusGrid::new(1, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(GridFunction::new(g, v).is_err());
    }

    #[test]
    fn multi_index_enumeration_counts() {
        // C(l + d, d)
        assert_eq!(MultiIndex::up_to(2, 0).len(), 1);
        assert_eq!(MultiIndex::up_to(2, 1).len(), 3);
        assert_eq!(MultiIndex::up_to(2, 3).len(), 10);
        assert_eq!(MultiIndex::up_to(1, 3).len(), 4);
        for a in MultiIndex::up_to(2, 3) {
            assert_eq!(a.order(), a.components().iter().sum::<usize>());
        }
    }

    #[test]
    fn torus_distance_wraps() {
        assert!((torus_distance(&[0.05, 0.0], &[0.95, 0.0]) - 0.1).abs() < 1e-15);
        let far = torus_distance(&[0.0, 0.0], &[0.5, 0.5]);
        assert!((far - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn perimeter_of_disk() {
        let g = TorusGrid::new(2, 512).unwrap();
        let r = 0.2;
        let m = IndicatorMask::from_fn(g, |p| torus_distance(&p, &[0.5, 0.5]) <= r);
        let p = m.perimeter();
        assert!((p / (2.0 * PI * r) - 1.0).abs() < 0.02, "perimeter {p}");
    }

    #[test]
    fn mask_measure_in_unit_interval() {
        let g = TorusGrid::new(2, 16).unwrap();
        assert_eq!(IndicatorMask::full(g).measure(), 1.0);
        assert_eq!(IndicatorMask::empty(g).measure(), 0.0);
    }
}

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{lp_norm, GridFunction, MultiIndex, TorusGrid, MAX_DERIVATIVE_ORDER};
use crate::error::{Error, Result};

/// Discrete Fourier coefficients of a grid function (unnormalized forward DFT).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: TorusGrid,
    data: Vec<Complex64>,
}

/// Signed frequency of DFT bin `j` on an `n`-point axis; bin `n/2` is the
/// Nyquist frequency `-n/2`.
#[inline]
fn frequency(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    out
}

fn fft_in_place(grid: TorusGrid, data: &mut Vec<Complex64>, inverse: bool) {
    let n = grid.n();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    // Rows of length n are contiguous; the chunked call transforms each one.
    fft.process(data);
    if grid.dim() == 2 {
        let mut t = transpose(data, n);
        fft.process(&mut t);
        *data = transpose(&t, n);
    }
}

impl Spectrum {
    pub fn forward(f: &GridFunction) -> Self {
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_in_place(f.grid(), &mut data, false);
        Self { grid: f.grid(), data }
    }

    /// Spectrum of the band-limited function with Fourier coefficients
    /// `c(k)`; Nyquist bins are left empty.
    pub fn from_coefficients(grid: TorusGrid, c: impl Fn([i64; 2]) -> f64) -> Self {
        let n = grid.n();
        let total = grid.len() as f64;
        let data = (0..grid.len())
            .map(|idx| {
                let [a, b] = grid.unflatten(idx);
                if a == n / 2 || (grid.dim() == 2 && b == n / 2) {
                    return Complex64::new(0.0, 0.0);
                }
                let k1 = if grid.dim() == 2 { frequency(b, n) } else { 0 };
                Complex64::new(total * c([frequency(a, n), k1]), 0.0)
            })
            .collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Inverse transform, keeping the real part.
    pub fn to_function(&self) -> GridFunction {
        let mut data = self.data.clone();
        fft_in_place(self.grid, &mut data, true);
        let scale = 1.0 / self.grid.len() as f64;
        let values = data.iter().map(|c| c.re * scale).collect();
        GridFunction::new(self.grid, values).expect("inverse transform of finite data is finite")
    }

    /// Spectrum of `D^α f`: multiplication by `Π (2πi k_m)^{α_m}`, with odd
    /// orders annihilating the unpaired Nyquist bin so real inputs stay real.
    pub fn differentiate(&self, alpha: &MultiIndex) -> Self {
        let n = self.grid.n();
        let orders = alpha.components();
        let axis_factor = |j: usize, order: usize| -> Complex64 {
            if order == 0 {
                return Complex64::new(1.0, 0.0);
            }
            if j == n / 2 && order % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            let w = Complex64::new(0.0, 2.0 * PI * frequency(j, n) as f64);
            w.powu(order as u32)
        };
        let f0: Vec<Complex64> = (0..n).map(|j| axis_factor(j, orders[0])).collect();
        let data = if self.grid.dim() == 1 {
            self.data.iter().zip(&f0).map(|(c, m)| c * m).collect()
        } else {
            let f1: Vec<Complex64> = (0..n).map(|j| axis_factor(j, orders[1])).collect();
            self.data
                .iter()
                .enumerate()
                .map(|(idx, c)| c * f0[idx / n] * f1[idx % n])
                .collect()
        };
        Self { grid: self.grid, data }
    }

    pub fn multiply(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }
}

fn check_alpha(grid: TorusGrid, alpha: &MultiIndex) -> Result<()> {
    if alpha.dim() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "multi-index of dimension {} on a {}-d grid",
            alpha.dim(),
            grid.dim()
        )));
    }
    if alpha.order() > MAX_DERIVATIVE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "derivative order {} exceeds the cap {MAX_DERIVATIVE_ORDER}",
            alpha.order()
        )));
    }
    Ok(())
}

/// Spectral `D^α f`; exact for band-limited `f`.
pub fn derivative(f: &GridFunction, alpha: &MultiIndex) -> Result<GridFunction> {
    check_alpha(f.grid(), alpha)?;
    if alpha.order() == 0 {
        return Ok(f.clone());
    }
    Ok(Spectrum::forward(f).differentiate(alpha).to_function())
}

/// `‖f‖_{2,ℓ} = Σ_{|α| ≤ ℓ} ‖D^α f‖_2`.
pub fn sobolev_norm(f: &GridFunction, ell: usize) -> Result<f64> {
    let grid = f.grid();
    let spectrum = Spectrum::forward(f);
    let mut total = 0.0;
    for alpha in MultiIndex::up_to(grid.dim(), ell) {
        check_alpha(grid, &alpha)?;
        let d = if alpha.order() == 0 {
            f.clone()
        } else {
            spectrum.differentiate(&alpha).to_function()
        };
        total += lp_norm(&d, 2.0)?;
    }
    Ok(total)
}

/// Cyclic convolution `(ψ∗f)(x) = ∫ ψ(g) f(x − g) dg` with the Riemann-sum
/// measure, computed through the DFT.
pub fn convolve(psi: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    psi.check_same_grid(f)?;
    let product = Spectrum::forward(psi).multiply(&Spectrum::forward(f));
    Ok(product.to_function().scale(psi.grid().cell_measure()))
}

/// Second-order central difference along `axis`. Cross-check oracle for
/// [`derivative`]; not used on the main path.
pub fn central_difference(f: &GridFunction, axis: usize) -> Result<GridFunction> {
    let grid = f.grid();
    if axis >= grid.dim() {
        return Err(Error::InvalidParameter(format!("axis {axis} on a {}-d grid", grid.dim())));
    }
    let n = grid.n();
    let inv_2h = n as f64 / 2.0;
    let v = f.values();
    let values = (0..grid.len())
        .map(|idx| {
            let mut ix = grid.unflatten(idx);
            let c = ix[axis];
            ix[axis] = (c + 1) % n;
            let fwd = v[grid.flatten(ix)];
            ix[axis] = (c + n - 1) % n;
            let back = v[grid.flatten(ix)];
            (fwd - back) * inv_2h
        })
        .collect();
    GridFunction::new(grid, values)
}

//! Distance-like functions, their tail functions `Φ(z) = μ{Δ ≥ z}`, and
//! certificates for the tail-decay and uniform-continuity conditions.

use std::collections::VecDeque;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{torus_distance, GridFunction, TorusGrid};

/// Default `z₀` for [`LogDistance`]: at and above it the superlevel ball has
/// radius below `1/2` and the analytic tail is exact.
pub const LOG_DIST_Z0: f64 = LN_2 + 0.1;

/// `Δ(x) = -log dist(x, center)`, the reference distance-like function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDistance {
    dim: usize,
    center: [f64; 2],
}

impl LogDistance {
    pub fn new(center: &[f64]) -> Result<Self> {
        let dim = center.len();
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("center must have 1 or 2 coordinates, got {dim}")));
        }
        if center.iter().any(|c| !(0.0..1.0).contains(c)) {
            return Err(Error::InvalidParameter(format!("center {center:?} outside [0,1)^d")));
        }
        let mut c = [0.0; 2];
        c[..dim].copy_from_slice(center);
        Ok(Self { dim, center: c })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.dim]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        -torus_distance(&x[..self.dim], self.center()).ln()
    }

    /// Radius of the superlevel ball `{Δ ≥ z}`.
    pub fn radius(z: f64) -> f64 {
        (-z).exp()
    }

    /// `μ{Δ ≥ z}` in closed form, valid while the ball radius is at most `1/2`.
    pub fn exact_tail(&self, z: f64) -> Option<f64> {
        let r = Self::radius(z);
        if r > 0.5 {
            return None;
        }
        Some(if self.dim == 1 { 2.0 * r } else { PI * r * r })
    }

    /// Level `z` with `exact_tail(z) = phi`, if that level lies in the exact range.
    pub fn level_for_tail(&self, phi: f64) -> Option<f64> {
        if !(phi > 0.0) {
            return None;
        }
        let r = if self.dim == 1 { phi / 2.0 } else { (phi / PI).sqrt() };
        (r <= 0.5).then(|| -r.ln())
    }

    /// Samples `Δ` on `grid`; the grid point nearest the center is clamped
    /// to `-log(1/(2n))` so every value stays finite.
    pub fn sample(&self, grid: TorusGrid) -> Result<GridFunction> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!(
                "{}-d center on a {}-d grid",
                self.dim,
                grid.dim()
            )));
        }
        let clamp = (2.0 * grid.n() as f64).ln();
        let centre_cell = grid.nearest_index(self.center());
        let values = (0..grid.len())
            .map(|i| {
                if i == centre_cell {
                    clamp
                } else {
                    -torus_distance(&grid.point(i)[..self.dim], self.center()).ln()
                }
            })
            .collect();
        GridFunction::new(grid, values)
    }
}

/// Grid sample of `-log dist(·, center)`.
pub fn dl_log_dist(grid: TorusGrid, center: &[f64]) -> Result<GridFunction> {
    LogDistance::new(center)?.sample(grid)
}

/// Evenly spaced levels `lo, lo + step, …` up to `hi` (inclusive within
/// rounding).
pub fn uniform_levels(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

/// Sampled tail function `Φ(z) = μ(Δ⁻¹([z, ∞)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFunction {
    z: Vec<f64>,
    phi: Vec<f64>,
}

impl TailFunction {
    pub fn new(z: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if z.len() != phi.len() || z.is_empty() {
            return Err(Error::InvalidParameter("tail samples and values must be nonempty and of equal length".into()));
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("tail levels must be strictly increasing".into()));
        }
        if phi.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("tail values must lie in [0, 1]".into()));
        }
        if phi.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("tail values must be nonincreasing".into()));
        }
        Ok(Self { z, phi })
    }

    pub fn levels(&self) -> &[f64] {
        &self.z
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    /// Tail value at the sampled level nearest to `z`.
    pub fn at(&self, z: f64) -> f64 {
        let i = match self.z.binary_search_by(|v| v.total_cmp(&z)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.z.len() => i - 1,
            Err(i) => {
                if (z - self.z[i - 1]) <= (self.z[i] - z) {
                    i - 1
                } else {
                    i
                }
            }
        };
        self.phi[i]
    }

    /// CSV with columns `z, phi`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["z", "phi"])?;
        for (z, p) in self.z.iter().zip(&self.phi) {
            w.write_record([z.to_string(), p.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
    }
}

/// `Φ(z)` for each requested level, by counting cells with `Δ ≥ z`.
pub fn tail_function(delta: &GridFunction, z_samples: &[f64]) -> Result<TailFunction> {
    if z_samples.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("tail levels must be strictly increasing".into()));
    }
    let mut sorted = delta.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let phi = z_samples
        .iter()
        .map(|&z| {
            let below = sorted.partition_point(|&v| v < z);
            (sorted.len() - below) as f64 / total
        })
        .collect();
    TailFunction::new(z_samples.to_vec(), phi)
}

/// Witness `(z₀, c, δ)` for `Φ(z) ≥ c Φ(z − δ)` on all sampled `z ≥ z₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DLCertificate {
    pub z0: f64,
    pub c: f64,
    pub delta: f64,
}

impl DLCertificate {
    /// Re-checks the certificate against a tail, independently of the fit.
    pub fn holds_on(&self, tail: &TailFunction) -> bool {
        let levels = tail.levels();
        let k = match lag_in_samples(levels, self.delta) {
            Ok(k) => k,
            Err(_) => return false,
        };
        levels.iter().enumerate().all(|(i, &z)| {
            if z < self.z0 - 1e-12 || i < k {
                return true;
            }
            tail.values()[i] >= self.c * tail.values()[i - k] * (1.0 - 1e-12)
        })
    }
}

impl fmt::Display for DLCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "z0={}", self.z0)?;
        writeln!(f, "c={}", self.c)?;
        writeln!(f, "delta={}", self.delta)
    }
}

impl FromStr for DLCertificate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kv = crate::config::parse_key_values(s)?;
        let get = |k: &str| -> Result<f64> {
            kv.get(k)
                .ok_or_else(|| Error::Config(format!("missing key {k}")))?
                .parse()
                .map_err(|_| Error::Config(format!("bad number for {k}")))
        };
        Ok(Self {
            z0: get("z0")?,
            c: get("c")?,
            delta: get("delta")?,
        })
    }
}

fn lag_in_samples(levels: &[f64], delta: f64) -> Result<usize> {
    if levels.len() < 2 {
        return Err(Error::InvalidParameter("need at least two tail samples".into()));
    }
    let step = levels[1] - levels[0];
    let uniform = levels
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.max(1.0));
    if !uniform {
        return Err(Error::InvalidParameter("tail levels must be evenly spaced".into()));
    }
    let ratio = delta / step;
    let k = ratio.round();
    if !(delta > 0.0) || k < 1.0 || (ratio - k).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} is not a positive multiple of the sample spacing {step}"
        )));
    }
    Ok(k as usize)
}

/// The largest `c` with `Φ(z) ≥ c Φ(z − δ)` over every sampled `z ≥ z₀`.
pub fn fit_dl(tail: &TailFunction, delta: f64, z0: f64) -> Result<DLCertificate> {
    let levels = tail.levels();
    let values = tail.values();
    let k = lag_in_samples(levels, delta)?;
    let tol = 1e-9 * (levels[1] - levels[0]);
    let start = levels
        .iter()
        .position(|&z| z >= z0 - tol)
        .ok_or_else(|| Error::InvalidParameter(format!("z0 = {z0} beyond the sampled range")))?;
    if start < k {
        return Err(Error::InvalidParameter(format!(
            "samples must reach down to z0 - delta = {}",
            z0 - delta
        )));
    }
    if !(values[start] > 0.0) {
        return Err(Error::ZeroTail { z: levels[start] });
    }
    let mut c = f64::INFINITY;
    for i in start..levels.len() {
        if values[i] == 0.0 {
            return Err(Error::ZeroTail { z: levels[i] });
        }
        c = c.min(values[i] / values[i - k]);
    }
    Ok(DLCertificate {
        z0,
        c: c.min(1.0),
        delta,
    })
}

/// Oscillation of `Δ` at spatial scale `ε` over the superlevel set at `z₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityModulus {
    pub z0: f64,
    /// `(ε_space, ε_value)` pairs in the order requested.
    pub pairs: Vec<(f64, f64)>,
}

impl ContinuityModulus {
    /// The largest listed `ε_space` whose oscillation stays below `delta`.
    pub fn largest_scale_below(&self, delta: f64) -> Option<f64> {
        self.pairs
            .iter()
            .filter(|(_, v)| *v < delta)
            .map(|(e, _)| *e)
            .fold(None, |m, e| Some(m.map_or(e, |m: f64| m.max(e))))
    }
}

/// Sliding max/min over a periodic line with half-width `w`.
fn sliding_extrema(line: &[f64], w: usize, max_out: &mut [f64], min_out: &mut [f64]) {
    let n = line.len();
    if 2 * w + 1 >= n {
        let mx = line.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mn = line.iter().copied().fold(f64::INFINITY, f64::min);
        max_out.iter_mut().for_each(|v| *v = mx);
        min_out.iter_mut().for_each(|v| *v = mn);
        return;
    }
    let at = |j: isize| line[j.rem_euclid(n as isize) as usize];
    let mut qmax: VecDeque<isize> = VecDeque::new();
    let mut qmin: VecDeque<isize> = VecDeque::new();
    let w = w as isize;
    for j in -w..(n as isize + w) {
        let v = at(j);
        while qmax.back().is_some_and(|&b| at(b) <= v) {
            qmax.pop_back();
        }
        qmax.push_back(j);
        while qmin.back().is_some_and(|&b| at(b) >= v) {
            qmin.pop_back();
        }
        qmin.push_back(j);
        let centre = j - w;
        if centre >= 0 {
            while *qmax.front().unwrap() < centre - w {
                qmax.pop_front();
            }
            while *qmin.front().unwrap() < centre - w {
                qmin.pop_front();
            }
            max_out[centre as usize] = at(*qmax.front().unwrap());
            min_out[centre as usize] = at(*qmin.front().unwrap());
        }
    }
}

/// Max and min of `values` over the open disk of radius `r` cells around
/// every grid point.
fn disk_extrema(grid: TorusGrid, values: &[f64], r: f64) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n();
    let r2 = r * r;
    let half_width = |dy: usize| -> Option<usize> {
        let rest = r2 - (dy * dy) as f64;
        if rest <= 0.0 {
            return None;
        }
        let mut w = rest.sqrt().floor() as usize;
        while (w * w) as f64 >= rest {
            w -= 1;
        }
        Some(w)
    };
    if grid.dim() == 1 {
        let (mut mx, mut mn) = (vec![0.0; n], vec![0.0; n]);
        sliding_extrema(values, half_width(0).unwrap_or(0), &mut mx, &mut mn);
        return (mx, mn);
    }
    let mut acc_max = vec![f64::NEG_INFINITY; grid.len()];
    let mut acc_min = vec![f64::INFINITY; grid.len()];
    let mut row_max = vec![0.0; grid.len()];
    let mut row_min = vec![0.0; grid.len()];
    let reach = (r.ceil() as usize).min(n);
    for dy in 0..=reach {
        let Some(w) = half_width(dy) else { continue };
        for row in 0..n {
            let s = row * n..(row + 1) * n;
            let (mx, mn) = (&mut row_max[s.clone()], &mut row_min[s.clone()]);
            sliding_extrema(&values[s], w, mx, mn);
        }
        let shifts: &[isize] = if dy == 0 { &[0] } else { &[dy as isize, -(dy as isize)] };
        for &shift in shifts {
            for row in 0..n {
                let src = (row as isize + shift).rem_euclid(n as isize) as usize;
                for col in 0..n {
                    let (d, s) = (row * n + col, src * n + col);
                    acc_max[d] = acc_max[d].max(row_max[s]);
                    acc_min[d] = acc_min[d].min(row_min[s]);
                }
            }
        }
    }
    (acc_max, acc_min)
}

fn modulus_impl(delta: &GridFunction, z_lo: f64, z_hi: f64, scales: &[f64]) -> Result<ContinuityModulus> {
    let grid = delta.grid();
    let v = delta.values();
    let base: Vec<usize> = (0..grid.len()).filter(|&i| v[i] >= z_lo && v[i] < z_hi).collect();
    if base.is_empty() {
        return Err(Error::InvalidParameter(format!("superlevel set at z0 = {z_lo} is empty")));
    }
    let mut pairs = Vec::with_capacity(scales.len());
    for &eps in scales {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("spatial scale must be positive, got {eps}")));
        }
        let (mx, mn) = disk_extrema(grid, v, eps * grid.n() as f64);
        let osc = base
            .iter()
            .map(|&i| (mx[i] - v[i]).max(v[i] - mn[i]))
            .fold(0.0, f64::max);
        pairs.push((eps, osc));
    }
    Ok(ContinuityModulus { z0: z_lo, pairs })
}

/// For each `ε_space`, `sup |Δ(x) − Δ(y)|` over grid pairs with `Δ(x) ≥ z₀`
/// and `dist(x, y) < ε_space`.
pub fn continuity_modulus(delta: &GridFunction, z0: f64, scales: &[f64]) -> Result<ContinuityModulus> {
    modulus_impl(delta, z0, f64::INFINITY, scales)
}

/// As [`continuity_modulus`], restricting base points to `z_lo ≤ Δ(x) < z_hi`.
pub fn continuity_modulus_banded(
    delta: &GridFunction,
    z_lo: f64,
    z_hi: f64,
    scales: &[f64],
) -> Result<ContinuityModulus> {
    modulus_impl(delta, z_lo, z_hi, scales)
}

//! Second-moment statistics, smooth ergodic ratios, and shrinking-target
//! hit counts along sampled orbits.

use rayon::prelude::*;

use crate::dynamics::{MapSystem, Observable, Orbit, StartPoint};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::tail::LogDistance;

/// Radii `r_t` with their target measures `Φ(r_t)`, `t = 1, 2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSchedule {
    r: Vec<f64>,
    phis: Vec<f64>,
}

impl TargetSchedule {
    pub fn new(r: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        if r.len() != phis.len() || r.is_empty() {
            return Err(Error::InvalidParameter("schedule radii and measures must be nonempty and of equal length".into()));
        }
        if r.iter().any(|v| !v.is_finite()) || phis.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("schedule entries must be finite with measures in [0, 1]".into()));
        }
        Ok(Self { r, phis })
    }

    /// `Φ(r_t) = 1/(t+1)` from the exact tail of `Δ`.
    pub fn harmonic(delta: &LogDistance, len: usize) -> Result<Self> {
        let phis: Vec<f64> = (1..=len).map(|t| 1.0 / (t as f64 + 1.0)).collect();
        let r = phis
            .iter()
            .map(|&p| {
                delta
                    .level_for_tail(p)
                    .ok_or_else(|| Error::InvalidParameter(format!("measure {p} is outside the exact tail range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(r, phis)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    /// `Σ_{t ≤ N} Φ(r_t)`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.phis[..n.min(self.len())].iter().sum()
    }

    pub fn check_levels(&self, z0: f64) -> Result<()> {
        match self.r.iter().position(|&r| r < z0) {
            Some(i) => Err(Error::InvalidParameter(format!("r_{} = {} is below z0 = {z0}", i + 1, self.r[i]))),
            None => Ok(()),
        }
    }
}

/// `h_t` for `t ≥ 1`: a single function is used at every time.
fn h_at(h_list: &[GridFunction], t: u64) -> &GridFunction {
    if h_list.len() == 1 {
        &h_list[0]
    } else {
        &h_list[(t - 1) as usize]
    }
}

fn masses(h_list: &[GridFunction], horizon: u64) -> Result<Vec<f64>> {
    if h_list.is_empty() {
        return Err(Error::InvalidParameter("empty function list".into()));
    }
    if h_list.len() > 1 && (h_list.len() as u64) < horizon {
        return Err(Error::InvalidParameter(format!(
            "{} functions for a horizon of {horizon}",
            h_list.len()
        )));
    }
    if h_list.iter().any(|h| h.grid() != h_list[0].grid()) {
        return Err(Error::GridMismatch("functions live on different grids".into()));
    }
    let distinct = h_list
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let mass = if h.min() == h.max() { h.min() } else { h.integral() };
            if h.min() < 0.0 || mass > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!("h_{} must be nonnegative with mass <= 1", i + 1)));
            }
            Ok(mass)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut a = Vec::with_capacity(horizon as usize + 1);
    a.push(0.0);
    a.extend((1..=horizon).map(|t| if distinct.len() == 1 { distinct[0] } else { distinct[(t - 1) as usize] }));
    Ok(a)
}

/// How the second moment is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpMode {
    /// Every grid cell, orbits through the exact grid permutation.
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Windows `(M, N)` with `N = 2^k ≤ n_max` and `M ∈ {1, N/2}`.
pub fn dyadic_windows(n_max: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut n = 2;
    while n <= n_max {
        out.push((1, n));
        if n / 2 > 1 {
            out.push((n / 2, n));
        }
        n *= 2;
    }
    out
}

/// `2 E C² sup_t Σ_s e^{−λ‖f_s f_t⁻¹‖}`, per unit `Σ a_t`.
pub fn sp_bound(e: f64, c: f64, lambda: f64, ed_sup: f64) -> Result<f64> {
    if [e, c, lambda, ed_sup].iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("sp bound inputs must be positive".into()));
    }
    Ok(2.0 * e * c * c * ed_sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SPReport {
    pub windows: Vec<(u64, u64)>,
    pub ratios: Vec<f64>,
    /// Standard errors of the ratios; zero in exact mode.
    pub std_errors: Vec<f64>,
    pub bound: f64,
}

impl SPReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    /// Every window satisfies `ratio ≤ bound + k·SE + 1e−9`.
    pub fn holds(&self, k: f64) -> bool {
        self.ratios
            .iter()
            .zip(&self.std_errors)
            .all(|(r, se)| *r <= self.bound + k * se + 1e-9)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["M", "N", "ratio", "bound"])?;
        for ((m, n), r) in self.windows.iter().zip(&self.ratios) {
            w.write_record([m.to_string(), n.to_string(), r.to_string(), self.bound.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
    }
}

const CHUNK: usize = 1024;

/// Per-window `(Σ D², Σ D⁴)` over a chunk of starting points. Each start
/// supplies prefix sums of `h_t(T^t x) − a_t`, so `D` is a difference of two
/// prefixes.
fn window_moments(
    windows: &[(u64, u64)],
    horizon: u64,
    starts: impl Iterator<Item = Result<Vec<f64>>>,
) -> Result<Vec<(f64, f64)>> {
    let mut acc = vec![(0.0, 0.0); windows.len()];
    for prefix in starts {
        let prefix = prefix?;
        debug_assert_eq!(prefix.len() as u64, horizon + 1);
        for (k, &(m, n)) in windows.iter().enumerate() {
            let d = prefix[n as usize] - prefix[(m - 1) as usize];
            let d2 = d * d;
            acc[k].0 += d2;
            acc[k].1 += d2 * d2;
        }
    }
    Ok(acc)
}

/// The second-moment ratio on each window.
pub fn sp_report(
    system: &MapSystem,
    h_list: &[GridFunction],
    windows: &[(u64, u64)],
    mode: SpMode,
    bound: f64,
) -> Result<SPReport> {
    if windows.is_empty() || windows.iter().any(|&(m, n)| !(1 <= m && m < n)) {
        return Err(Error::InvalidParameter("windows must satisfy 1 <= M < N".into()));
    }
    let horizon = windows.iter().map(|w| w.1).max().unwrap();
    let a = masses(h_list, horizon)?;
    let mut a_prefix = vec![0.0; a.len()];
    for t in 1..a.len() {
        a_prefix[t] = a_prefix[t - 1] + a[t];
    }
    let sums: Vec<f64> = windows.iter().map(|&(m, n)| a_prefix[n as usize] - a_prefix[(m - 1) as usize]).collect();
    if let Some(k) = sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroDenominator(format!("window {:?} has zero total mass", windows[k])));
    }
    let grid = h_list[0].grid();

    let (chunks, count): (Vec<Vec<(f64, f64)>>, usize) = match mode {
        SpMode::Exact => {
            if !system.is_invertible() {
                return Err(Error::IncompatibleGrid {
                    n: grid.n(),
                    reason: "exact integration needs an invertible grid map".into(),
                });
            }
            let step = system.grid_map(grid, 1)?;
            let cells: Vec<usize> = (0..grid.len()).collect();
            let chunks = cells
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let starts = chunk.iter().map(|&x0| {
                        let mut prefix = vec![0.0; horizon as usize + 1];
                        let mut x = x0;
                        for t in 1..=horizon {
                            x = step[x];
                            prefix[t as usize] = prefix[t as usize - 1] + (h_at(h_list, t).values()[x] - a[t as usize]);
                        }
                        Ok(prefix)
                    });
                    window_moments(windows, horizon, starts)
                })
                .collect::<Result<Vec<_>>>()?;
            (chunks, grid.len())
        }
        SpMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidParameter("Monte Carlo mode needs at least 2 samples".into()));
            }
            let ids: Vec<u64> = (0..samples as u64).collect();
            let chunks = ids
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let starts = chunk.iter().map(|&i| {
                        let mut orbit = Orbit::new(system, system.start_point(seed, i))?;
                        let mut prefix = vec![0.0; horizon as usize + 1];
                        for t in 1..=horizon {
                            orbit.advance()?;
                            prefix[t as usize] = prefix[t as usize - 1] + (h_at(h_list, t).observe(&orbit) - a[t as usize]);
                        }
                        Ok(prefix)
                    });
                    window_moments(windows, horizon, starts)
                })
                .collect::<Result<Vec<_>>>()?;
            (chunks, samples)
        }
    };
    let mut total = vec![(0.0, 0.0); windows.len()];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.0 += c.0;
            t.1 += c.1;
        }
    }
    let s = count as f64;
    let mut ratios = Vec::with_capacity(windows.len());
    let mut std_errors = Vec::with_capacity(windows.len());
    for (k, &(sum2, sum4)) in total.iter().enumerate() {
        let mean = sum2 / s;
        ratios.push(mean / sums[k]);
        std_errors.push(match mode {
            SpMode::Exact => 0.0,
            SpMode::MonteCarlo { .. } => {
                let var = ((sum4 - s * mean * mean) / (s - 1.0)).max(0.0);
                var.sqrt() / s.sqrt() / sums[k]
            }
        });
    }
    Ok(SPReport {
        windows: windows.to_vec(),
        ratios,
        std_errors,
        bound,
    })
}

/// `∫ (Σ_{t=M}^{N} h_t ∘ T^t − Σ a_t)² dμ / Σ_{t=M}^{N} a_t`.
pub fn sp_statistic(system: &MapSystem, h_list: &[GridFunction], m: u64, n: u64, mode: SpMode) -> Result<f64> {
    Ok(sp_report(system, h_list, &[(m, n)], mode, f64::INFINITY)?.ratios[0])
}

/// `Σ_{t ≤ N} h_t(T^t x₀) / Σ_{t ≤ N} a_t` at each requested `N`.
pub fn smooth_ratios(system: &MapSystem, h_list: &[GridFunction], start: StartPoint, ns: &[u64]) -> Result<Vec<f64>> {
    let horizon = ns.iter().copied().max().ok_or_else(|| Error::InvalidParameter("no horizons".into()))?;
    let a = masses(h_list, horizon)?;
    let mut orbit = Orbit::new(system, start)?;
    let (mut num, mut den) = (0.0, 0.0);
    let mut out = vec![0.0; ns.len()];
    for t in 1..=horizon {
        orbit.advance()?;
        num += h_at(h_list, t).observe(&orbit);
        den += a[t as usize];
        for (slot, &n) in out.iter_mut().zip(ns) {
            if n == t {
                if den < 5.0 {
                    return Err(Error::InvalidParameter(format!(
                        "total mass {den} up to N = {n} is below 5"
                    )));
                }
                *slot = num / den;
            }
        }
    }
    Ok(out)
}

pub fn smooth_ratio(system: &MapSystem, h_list: &[GridFunction], start: StartPoint, n: u64) -> Result<f64> {
    Ok(smooth_ratios(system, h_list, start, &[n])?[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitStatistics {
    /// `S_N = #{t ≤ N : Δ(T^t x) ≥ r_t}`.
    pub hits: u64,
    /// `Σ_{t ≤ N} Φ(r_t)`.
    pub expected: f64,
    /// `S_N / expected`, absent when nothing is expected.
    pub ratio: Option<f64>,
    pub zero_expected: bool,
}

pub fn hit_count<D: Observable + ?Sized>(
    system: &MapSystem,
    delta: &D,
    schedule: &TargetSchedule,
    start: StartPoint,
    n: u64,
) -> Result<HitStatistics> {
    if (schedule.len() as u64) < n {
        return Err(Error::InvalidParameter(format!("schedule of length {} for N = {n}", schedule.len())));
    }
    if delta.dim() != system.dim() {
        return Err(Error::GridMismatch(format!("{}-d function for a {}-d map", delta.dim(), system.dim())));
    }
    let mut orbit = Orbit::new(system, start)?;
    let mut hits = 0;
    for &r in &schedule.radii()[..n as usize] {
        orbit.advance()?;
        if delta.observe(&orbit) >= r {
            hits += 1;
        }
    }
    let expected = schedule.partial_sum(n as usize);
    let zero_expected = expected <= 0.0;
    Ok(HitStatistics {
        hits,
        expected,
        ratio: (!zero_expected).then(|| hits as f64 / expected),
        zero_expected,
    })
}

/// Distribution summary of an ensemble statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("summary needs finite values".into()));
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mean,
            sd,
            q05: quantile(&sorted, 0.05),
            q25: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q75: quantile(&sorted, 0.75),
            q95: quantile(&sorted, 0.95),
            values,
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }

    /// Fraction of values in `[lo, hi]`.
    pub fn coverage(&self, lo: f64, hi: f64) -> f64 {
        self.values.iter().filter(|v| (lo..=hi).contains(*v)).count() as f64 / self.values.len() as f64
    }
}

/// `sample_count` counter-based starting points for `system`.
pub fn sample_starts(system: &MapSystem, sample_count: usize, seed: u64) -> Vec<StartPoint> {
    (0..sample_count as u64).map(|i| system.start_point(seed, i)).collect()
}

/// Runs `f` at every sampled start in parallel; results keep sample order.
#[allow(clippy::redundant_closure)]
pub fn ensemble_map<T: Send>(
    system: &MapSystem,
    sample_count: usize,
    seed: u64,
    f: impl Fn(StartPoint) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    sample_starts(system, sample_count, seed).into_par_iter().map(|x| f(x)).collect()
}

pub fn ensemble(
    system: &MapSystem,
    sample_count: usize,
    seed: u64,
    f: impl Fn(StartPoint) -> Result<f64> + Sync,
) -> Result<Summary> {
    Summary::from_values(ensemble_map(system, sample_count, seed, f)?)
}

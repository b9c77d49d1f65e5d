use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::MapSystem;
use crate::error::{Error, Result};
use crate::grid::{sobolev_norm, GridFunction};

/// Centered correlations of a finite family at a list of times, with the
/// members' Sobolev norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    times: Vec<u64>,
    norms: Vec<f64>,
    /// `rows[i][p·m + q] = ⟨φ_p ∘ T^{t_i}, φ_q⟩ − ∫φ_p ∫φ_q`.
    rows: Vec<Vec<f64>>,
    ell: usize,
}

impl CorrelationTable {
    pub fn new(times: Vec<u64>, norms: Vec<f64>, rows: Vec<Vec<f64>>, ell: usize) -> Result<Self> {
        let m = norms.len();
        if times.len() != rows.len() || rows.iter().any(|r| r.len() != m * m) {
            return Err(Error::InvalidParameter("correlation table has inconsistent shape".into()));
        }
        if norms.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameter("family contains a zero function".into()));
        }
        Ok(Self { times, norms, rows, ell })
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// `max_{p,q} |corr_pq(t)| / (‖φ_p‖_{2,ℓ} ‖φ_q‖_{2,ℓ})` at each time.
    pub fn envelope(&self) -> Vec<f64> {
        let m = self.norms.len();
        self.rows
            .iter()
            .map(|row| {
                (0..m * m)
                    .map(|i| row[i].abs() / (self.norms[i / m] * self.norms[i % m]))
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Correlations of grid functions with `φ ∘ T^t` pulled exactly through the grid.
pub fn grid_correlations(system: &MapSystem, family: &[GridFunction], ell: usize, times: &[u64]) -> Result<CorrelationTable> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty observable family".into()));
    }
    if family.iter().any(|f| f.grid() != family[0].grid()) {
        return Err(Error::GridMismatch("family members live on different grids".into()));
    }
    let norms = family.iter().map(|f| sobolev_norm(f, ell)).collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = family.iter().map(|f| f.integral()).collect();
    let m = family.len();
    let rows = times
        .par_iter()
        .map(|&t| {
            let mut row = vec![0.0; m * m];
            for p in 0..m {
                let pulled = system.pull(&family[p], t)?;
                for q in 0..m {
                    row[p * m + q] = pulled.inner(&family[q])? - means[p] * means[q];
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelationTable::new(times.to_vec(), norms, rows, ell)
}

/// Fitted `(E, λ, ℓ)` with `|corr(t)| ≤ E e^{−λ‖f_t‖} ‖φ‖_{2,ℓ} ‖ψ‖_{2,ℓ}` on
/// the tested family and times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingCertificate {
    pub e: f64,
    pub lambda: f64,
    pub ell: usize,
    /// Coefficient of determination of the log-linear fit.
    pub fit_quality: f64,
    /// Standard error of the fitted slope.
    pub slope_se: f64,
}

impl MixingCertificate {
    /// `E e^{−λ‖g‖}`.
    pub fn bound(&self, norm_g: f64) -> f64 {
        self.e * (-self.lambda * norm_g).exp()
    }
}

impl fmt::Display for MixingCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "E={}", self.e)?;
        writeln!(f, "lambda={}", self.lambda)?;
        writeln!(f, "ell={}", self.ell)?;
        writeln!(f, "r2={}", self.fit_quality)
    }
}

impl FromStr for MixingCertificate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kv = crate::config::parse_key_values(s)?;
        let get = |k: &str| -> Result<&String> { kv.get(k).ok_or_else(|| Error::Config(format!("missing key {k}"))) };
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Config(format!("bad number for {k}"))) };
        Ok(Self {
            e: num("E")?,
            lambda: num("lambda")?,
            ell: get("ell")?.parse().map_err(|_| Error::Config("bad ell".into()))?,
            fit_quality: num("r2")?,
            slope_se: 0.0,
        })
    }
}

/// Least-squares fit of `log envelope(t)` against `‖f_t‖ = t log ρ` over the
/// table's positive times. `E` is the smallest constant that makes the
/// fitted rate a bound at every tabulated time, `t = 0` included.
pub fn fit_mixing(system: &MapSystem, table: &CorrelationTable) -> Result<MixingCertificate> {
    let env = table.envelope();
    let pts: Vec<(f64, f64)> = table
        .times()
        .iter()
        .zip(&env)
        .filter(|(&t, &e)| t > 0 && e > 0.0 && e.is_finite())
        .map(|(&t, &e)| (system.norm(t, 0), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::NotMixing(format!(
            "only {} times with nonzero correlation; need 3 to fit a rate",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let se = if pts.len() > 2 { (ssr / (k - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    let lambda = -slope;
    if !(lambda > 0.0) || lambda - 2.0 * se <= 0.0 {
        return Err(Error::NotMixing(format!(
            "fitted rate {lambda:.4} (standard error {se:.4}) is not significantly positive"
        )));
    }
    let e = table
        .times()
        .iter()
        .zip(&env)
        .map(|(&t, &v)| v * (lambda * system.norm(t, 0)).exp())
        .fold(0.0, f64::max);
    Ok(MixingCertificate {
        e,
        lambda,
        ell: table.ell(),
        fit_quality: r2,
        slope_se: se,
    })
}

/// [`fit_mixing`] on grid functions over `t_range`.
pub fn fit_mixing_grid(
    system: &MapSystem,
    family: &[GridFunction],
    ell: usize,
    t_range: std::ops::RangeInclusive<u64>,
) -> Result<MixingCertificate> {
    let times: Vec<u64> = t_range.collect();
    fit_mixing(system, &grid_correlations(system, family, ell, &times)?)
}

/// `max_{t ≤ H} Σ_{s=1}^{H} e^{−λ|s−t| log ρ}`.
pub fn ed_sum(system: &MapSystem, lambda: f64, horizon: u64) -> Result<f64> {
    if !(lambda > 0.0) || horizon == 0 {
        return Err(Error::InvalidParameter(format!("need lambda > 0 and horizon >= 1, got {lambda}, {horizon}")));
    }
    let q = (-lambda * system.log_rate()).exp();
    // Σ_{k=0}^{j} q^k.
    let partial = |j: u64| -> f64 {
        if q == 0.0 {
            1.0
        } else {
            (1.0 - q.powf(j as f64 + 1.0)) / (1.0 - q)
        }
    };
    // For 1 ≤ t ≤ H the sum is partial(t−1) + partial(H−t) − 1; it peaks at the middle.
    let t = horizon.div_ceil(2);
    Ok(partial(t - 1) + partial(horizon - t) - 1.0)
}

/// `1 + 2/(ρ^λ − 1)`, the limit of [`ed_sum`] as the horizon grows.
pub fn ed_sum_limit(system: &MapSystem, lambda: f64) -> f64 {
    1.0 + 2.0 / (system.norm_rate().powf(lambda) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_ed(system: &MapSystem, lambda: f64, h: u64) -> f64 {
        (1..=h)
            .map(|t| (1..=h).map(|s| (-lambda * system.norm(s, t)).exp()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ed_sum_examples() {
        let cat = MapSystem::cat();
        assert_eq!(ed_sum(&cat, 1.0, 1).unwrap(), 1.0);
        for h in [2, 3, 10, 33] {
            assert!((ed_sum(&cat, 1.0, h).unwrap() - brute_ed(&cat, 1.0, h)).abs() < 1e-12);
        }
        let limit = ed_sum_limit(&cat, 1.0);
        assert!((limit - (1.0 + 2.0 / 1.618033988749895)).abs() < 1e-12);
        let mut prev = 0.0;
        for h in 1..200 {
            let v = ed_sum(&cat, 1.0, h).unwrap();
            assert!(v >= prev && v <= limit + 1e-12);
            prev = v;
        }
        assert!((ed_sum(&cat, 200.0, 50).unwrap() - 1.0).abs() < 1e-12);
        let dbl = MapSystem::doubling();
        assert!((ed_sum_limit(&dbl, 1.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_synthetic_rate() {
        let cat = MapSystem::cat();
        let times: Vec<u64> = (0..=10).collect();
        let rows = times.iter().map(|&t| vec![2.0 * (-1.5 * cat.norm(t, 0)).exp()]).collect();
        let table = CorrelationTable::new(times, vec![1.0], rows, 0).unwrap();
        let cert = fit_mixing(&cat, &table).unwrap();
        assert!((cert.lambda - 1.5).abs() < 1e-10);
        assert!((cert.e - 2.0).abs() < 1e-9);
        assert!((cert.fit_quality - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_text_round_trip() {
        let c = MixingCertificate { e: 1.25, lambda: 2.5, ell: 1, fit_quality: 0.99, slope_se: 0.0 };
        let back: MixingCertificate = c.to_string().parse().unwrap();
        assert_eq!(back, c);
    }
}

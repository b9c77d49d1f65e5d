//! Flat `key = value` run configuration, one dotted key per line.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt;

use crate::dynamics::MapSystem;
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::tail::{LogDistance, LOG_DIST_Z0};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped,
/// repeated keys are an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", no + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {k}", no + 1)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonChoice {
    Rule,
    Fixed(f64),
}

impl fmt::Display for EpsilonChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonChoice::Rule => f.write_str("rule"),
            EpsilonChoice::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Cat,
    Toral,
    Doubling,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Closed-form Fourier coefficients, correlations on the frequency lattice.
    Spectral,
    /// The same family sampled on the grid, correlations by grid pulling.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpModeKind {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid_dim: usize,
    pub grid_n: usize,
    pub center: Vec<f64>,
    pub dl_z0: f64,
    pub dl_delta: f64,
    pub tail_z_min: f64,
    pub tail_z_max: f64,
    pub tail_z_step: f64,
    pub sandwich_z_min: f64,
    pub sandwich_z_max: f64,
    pub sandwich_levels: usize,
    pub sandwich_ell: usize,
    pub sandwich_epsilon: EpsilonChoice,
    pub squeeze_epsilon: EpsilonChoice,
    pub squeeze_levels: usize,
    pub system_kind: SystemKind,
    pub system_matrix: [[i64; 2]; 2],
    pub system_shift: Vec<f64>,
    pub system_norm_rate: f64,
    pub mixing_family: FamilyKind,
    pub mixing_ell: usize,
    pub mixing_t_min: u64,
    pub mixing_t_max: u64,
    pub sp_mode: SpModeKind,
    pub sp_n_max: u64,
    pub sp_samples: usize,
    pub sp_level: f64,
    pub bc_level: f64,
    pub bc_ratio_horizons: Vec<u64>,
    pub bc_ratio_samples: usize,
    pub bc_hit_horizon: u64,
    pub bc_hit_samples: usize,
    pub bc_min_coverage: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_dim: 2,
            grid_n: 1024,
            center: vec![0.5, 0.5],
            dl_z0: LOG_DIST_Z0,
            dl_delta: 0.5,
            tail_z_min: 0.0,
            tail_z_max: 4.5,
            tail_z_step: 0.01,
            sandwich_z_min: LOG_DIST_Z0,
            sandwich_z_max: 4.0,
            sandwich_levels: 30,
            sandwich_ell: 1,
            sandwich_epsilon: EpsilonChoice::Rule,
            squeeze_epsilon: EpsilonChoice::Rule,
            squeeze_levels: 10,
            system_kind: SystemKind::Cat,
            system_matrix: [[2, 1], [1, 1]],
            system_shift: vec![2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0],
            system_norm_rate: E,
            mixing_family: FamilyKind::Spectral,
            mixing_ell: 1,
            mixing_t_min: 1,
            mixing_t_max: 20,
            sp_mode: SpModeKind::Exact,
            sp_n_max: 2048,
            sp_samples: 4096,
            sp_level: 2.13,
            bc_level: 2.13,
            bc_ratio_horizons: vec![2000, 20000],
            bc_ratio_samples: 200,
            bc_hit_horizon: 100_000,
            bc_hit_samples: 100,
            bc_min_coverage: 0.9,
            seed: 0,
        }
    }
}

fn list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value for {key}: {value:?}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn num_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|s| num(key, s.trim())).collect()
}

fn epsilon(key: &str, value: &str) -> Result<EpsilonChoice> {
    if value == "rule" {
        Ok(EpsilonChoice::Rule)
    } else {
        let v: f64 = num(key, value)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(bad(key, value));
        }
        Ok(EpsilonChoice::Fixed(v))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let mut c = Self::default();
        for (k, v) in &kv {
            let v = v.as_str();
            match k.as_str() {
                "grid.dim" => c.grid_dim = num(k, v)?,
                "grid.n" => c.grid_n = num(k, v)?,
                "delta.center" => c.center = num_list(k, v)?,
                "dl.z0" => c.dl_z0 = num(k, v)?,
                "dl.delta" => c.dl_delta = num(k, v)?,
                "tail.z_min" => c.tail_z_min = num(k, v)?,
                "tail.z_max" => c.tail_z_max = num(k, v)?,
                "tail.z_step" => c.tail_z_step = num(k, v)?,
                "sandwich.z_min" => c.sandwich_z_min = num(k, v)?,
                "sandwich.z_max" => c.sandwich_z_max = num(k, v)?,
                "sandwich.levels" => c.sandwich_levels = num(k, v)?,
                "sandwich.ell" => c.sandwich_ell = num(k, v)?,
                "sandwich.epsilon" => c.sandwich_epsilon = epsilon(k, v)?,
                "squeeze.epsilon" => c.squeeze_epsilon = epsilon(k, v)?,
                "squeeze.levels" => c.squeeze_levels = num(k, v)?,
                "system.kind" => {
                    c.system_kind = match v {
                        "cat" => SystemKind::Cat,
                        "toral" => SystemKind::Toral,
                        "doubling" => SystemKind::Doubling,
                        "rotation" => SystemKind::Rotation,
                        _ => return Err(bad(k, v)),
                    }
                }
                "system.matrix" => {
                    let m: Vec<i64> = num_list(k, v)?;
                    if m.len() != 4 {
                        return Err(bad(k, v));
                    }
                    c.system_matrix = [[m[0], m[1]], [m[2], m[3]]];
                }
                "system.shift" => c.system_shift = num_list(k, v)?,
                "system.norm_rate" => c.system_norm_rate = num(k, v)?,
                "mixing.family" => {
                    c.mixing_family = match v {
                        "spectral" => FamilyKind::Spectral,
                        "grid" => FamilyKind::Grid,
                        _ => return Err(bad(k, v)),
                    }
                }
                "mixing.ell" => c.mixing_ell = num(k, v)?,
                "mixing.t_min" => c.mixing_t_min = num(k, v)?,
                "mixing.t_max" => c.mixing_t_max = num(k, v)?,
                "sp.mode" => {
                    c.sp_mode = match v {
                        "exact" => SpModeKind::Exact,
                        "monte_carlo" => SpModeKind::MonteCarlo,
                        _ => return Err(bad(k, v)),
                    }
                }
                "sp.n_max" => c.sp_n_max = num(k, v)?,
                "sp.samples" => c.sp_samples = num(k, v)?,
                "sp.level" => c.sp_level = num(k, v)?,
                "bc.level" => c.bc_level = num(k, v)?,
                "bc.ratio_horizons" => c.bc_ratio_horizons = num_list(k, v)?,
                "bc.ratio_samples" => c.bc_ratio_samples = num(k, v)?,
                "bc.hit_horizon" => c.bc_hit_horizon = num(k, v)?,
                "bc.hit_samples" => c.bc_hit_samples = num(k, v)?,
                "bc.min_coverage" => c.bc_min_coverage = num(k, v)?,
                "run.seed" => c.seed = num(k, v)?,
                _ => return Err(Error::Config(format!("unknown key {k}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let kind = match self.system_kind {
            SystemKind::Cat => "cat",
            SystemKind::Toral => "toral",
            SystemKind::Doubling => "doubling",
            SystemKind::Rotation => "rotation",
        };
        let m = self.system_matrix;
        let lines = [
            ("grid.dim", self.grid_dim.to_string()),
            ("grid.n", self.grid_n.to_string()),
            ("delta.center", list(&self.center)),
            ("dl.z0", self.dl_z0.to_string()),
            ("dl.delta", self.dl_delta.to_string()),
            ("tail.z_min", self.tail_z_min.to_string()),
            ("tail.z_max", self.tail_z_max.to_string()),
            ("tail.z_step", self.tail_z_step.to_string()),
            ("sandwich.z_min", self.sandwich_z_min.to_string()),
            ("sandwich.z_max", self.sandwich_z_max.to_string()),
            ("sandwich.levels", self.sandwich_levels.to_string()),
            ("sandwich.ell", self.sandwich_ell.to_string()),
            ("sandwich.epsilon", self.sandwich_epsilon.to_string()),
            ("squeeze.epsilon", self.squeeze_epsilon.to_string()),
            ("squeeze.levels", self.squeeze_levels.to_string()),
            ("system.kind", kind.to_string()),
            ("system.matrix", list(&[m[0][0], m[0][1], m[1][0], m[1][1]])),
            ("system.shift", list(&self.system_shift)),
            ("system.norm_rate", self.system_norm_rate.to_string()),
            (
                "mixing.family",
                match self.mixing_family {
                    FamilyKind::Spectral => "spectral",
                    FamilyKind::Grid => "grid",
                }
                .to_string(),
            ),
            ("mixing.ell", self.mixing_ell.to_string()),
            ("mixing.t_min", self.mixing_t_min.to_string()),
            ("mixing.t_max", self.mixing_t_max.to_string()),
            (
                "sp.mode",
                match self.sp_mode {
                    SpModeKind::Exact => "exact",
                    SpModeKind::MonteCarlo => "monte_carlo",
                }
                .to_string(),
            ),
            ("sp.n_max", self.sp_n_max.to_string()),
            ("sp.samples", self.sp_samples.to_string()),
            ("sp.level", self.sp_level.to_string()),
            ("bc.level", self.bc_level.to_string()),
            ("bc.ratio_horizons", list(&self.bc_ratio_horizons)),
            ("bc.ratio_samples", self.bc_ratio_samples.to_string()),
            ("bc.hit_horizon", self.bc_hit_horizon.to_string()),
            ("bc.hit_samples", self.bc_hit_samples.to_string()),
            ("bc.min_coverage", self.bc_min_coverage.to_string()),
            ("run.seed", self.seed.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid_dim, self.grid_n)
    }

    pub fn log_distance(&self) -> Result<LogDistance> {
        LogDistance::new(&self.center)
    }

    pub fn system(&self) -> Result<MapSystem> {
        match self.system_kind {
            SystemKind::Cat => Ok(MapSystem::cat()),
            SystemKind::Toral => MapSystem::toral(self.system_matrix),
            SystemKind::Doubling => Ok(MapSystem::doubling()),
            SystemKind::Rotation => MapSystem::rotation(&self.system_shift, self.system_norm_rate),
        }
    }

    /// Tail sample levels `z_min, z_min + step, …, z_max`.
    pub fn tail_levels(&self) -> Vec<f64> {
        crate::tail::uniform_levels(self.tail_z_min, self.tail_z_max, self.tail_z_step)
    }

    /// Evenly spaced levels over `[z_min, z_max]`, endpoints included.
    pub fn sandwich_z_levels(&self) -> Vec<f64> {
        spread(self.sandwich_z_min, self.sandwich_z_max, self.sandwich_levels)
    }

    pub fn squeeze_z_levels(&self) -> Vec<f64> {
        spread(self.sandwich_z_min, self.sandwich_z_max, self.squeeze_levels)
    }

    fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.grid().map_err(cfg)?;
        self.log_distance().map_err(cfg)?;
        let system = self.system().map_err(cfg)?;
        if self.center.len() != self.grid_dim {
            return Err(Error::Config("delta.center must have grid.dim coordinates".into()));
        }
        let positive = [
            ("dl.delta", self.dl_delta),
            ("tail.z_step", self.tail_z_step),
            ("bc.min_coverage", self.bc_min_coverage),
        ];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("{k} must be positive, got {v}")));
        }
        let lag = self.dl_delta / self.tail_z_step;
        if (lag - lag.round()).abs() > 1e-6 {
            return Err(Error::Config("dl.delta must be a multiple of tail.z_step".into()));
        }
        if !(self.tail_z_min < self.tail_z_max) || self.dl_z0 - self.dl_delta < self.tail_z_min - 1e-9 {
            return Err(Error::Config("tail levels must cover [dl.z0 - dl.delta, tail.z_max]".into()));
        }
        if !(self.sandwich_z_min <= self.sandwich_z_max) || self.sandwich_levels == 0 || self.squeeze_levels == 0 {
            return Err(Error::Config("sandwich level range is empty".into()));
        }
        if self.sandwich_z_min < self.dl_z0 {
            return Err(Error::Config("sandwich.z_min must not lie below dl.z0".into()));
        }
        if self.sandwich_z_max + self.dl_delta > self.tail_z_max + 1e-9 {
            return Err(Error::Config("tail.z_max must reach sandwich.z_max + dl.delta".into()));
        }
        if self.sandwich_ell > crate::grid::MAX_DERIVATIVE_ORDER || self.mixing_ell > crate::grid::MAX_DERIVATIVE_ORDER {
            return Err(Error::Config("derivative order exceeds the cap".into()));
        }
        if !(1 <= self.mixing_t_min && self.mixing_t_min + 2 <= self.mixing_t_max) {
            return Err(Error::Config("mixing times must satisfy 1 <= t_min and at least three points".into()));
        }
        if self.sp_n_max < 2 || self.sp_samples < 2 {
            return Err(Error::Config("sp.n_max and sp.samples must be at least 2".into()));
        }
        if self.bc_ratio_horizons.is_empty() || self.bc_ratio_horizons.contains(&0) || self.bc_hit_horizon == 0 {
            return Err(Error::Config("bc horizons must be positive".into()));
        }
        if self.bc_ratio_samples == 0 || self.bc_hit_samples == 0 {
            return Err(Error::Config("bc sample counts must be positive".into()));
        }
        if system.dim() != self.grid_dim {
            return Err(Error::Config(format!("{}-d system on a {}-d grid", system.dim(), self.grid_dim)));
        }
        Ok(())
    }
}

fn spread(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn modified_round_trips() {
        let text = "grid.n = 256\nsystem.kind = rotation\nsystem.shift = 0.1,0.3\nsqueeze.epsilon = 0.125\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.grid_n, 256);
        assert_eq!(c.squeeze_epsilon, EpsilonChoice::Fixed(0.125));
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "grid.n = 100",
            "grid.n = 1024\ngrid.n = 512",
            "nonsense",
            "grid.color = red",
            "dl.delta = 0.333",
            "system.matrix = 1,1,0,1\nsystem.kind = toral",
            "system.kind = doubling",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let kv = parse_key_values("# header\n\na = 1 # trailing\n").unwrap();
        assert_eq!(kv.get("a").map(String::as_str), Some("1"));
    }
}

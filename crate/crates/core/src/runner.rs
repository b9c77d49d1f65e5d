//! End-to-end subcommands: each one computes its output files in memory,
//! then writes them all atomically into the output directory.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{EpsilonChoice, FamilyKind, RunConfig, SpModeKind};
use crate::dynamics::{
    ed_sum, fit_mixing, grid_correlations, spectral_correlations, CorrelationTable, MapSystem, MixingCertificate,
    SpectralObservable,
};
use crate::error::{Error, Result};
use crate::experiment::{
    dyadic_windows, ensemble_map, hit_count, smooth_ratios, sp_bound, sp_report, SpMode, Summary, TargetSchedule,
};
use crate::grid::{GridFunction, TorusGrid};
use crate::mollifier::{
    build_bump, build_sandwich, check_squeeze, derived_epsilon, min_bump_epsilon, sandwich_csv, sandwich_scan,
    theoretical_c, SqueezeReport,
};
use crate::tail::{dl_log_dist, fit_dl, tail_function, DLCertificate, TailFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Tail,
    Sandwich,
    Mixing,
    Sp,
    Bc,
}

impl Command {
    pub const ALL: [Command; 5] = [Command::Tail, Command::Sandwich, Command::Mixing, Command::Sp, Command::Bc];

    pub fn name(self) -> &'static str {
        match self {
            Command::Tail => "tail",
            Command::Sandwich => "sandwich",
            Command::Mixing => "mixing",
            Command::Sp => "sp",
            Command::Bc => "bc",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

/// One pass/fail line of a run's verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: Command,
    /// `(file name, contents)`, excluding the provenance record.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
    /// Human-readable summary printed by the CLI.
    pub report: String,
    /// Certificates and derived constants recorded in the provenance file.
    pub certificates: Value,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn verdict(&self) -> Result<()> {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::Assertion(format!("{} failed: {}", self.command, failed.join(", "))))
        }
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    fn verdict_text(&self) -> String {
        self.checks.iter().map(|c| format!("{c}\n")).collect()
    }
}

/// Hex SHA-256 of the canonical text form of `cfg`.
pub fn config_hash(cfg: &RunConfig) -> String {
    Sha256::digest(cfg.to_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Grid, sampled `Δ`, its tail and DL certificate.
struct Field {
    grid: TorusGrid,
    delta: GridFunction,
    tail: TailFunction,
    dl: DLCertificate,
}

fn field(cfg: &RunConfig) -> Result<Field> {
    let grid = cfg.grid()?;
    let delta = dl_log_dist(grid, &cfg.center)?;
    let tail = tail_function(&delta, &cfg.tail_levels())?;
    let dl = fit_dl(&tail, cfg.dl_delta, cfg.dl_z0)?;
    Ok(Field { grid, delta, tail, dl })
}

fn rule_epsilon(cfg: &RunConfig, f: &Field) -> Result<f64> {
    derived_epsilon(&f.delta, cfg.dl_delta, cfg.sandwich_z_min, cfg.sandwich_z_max)
}

fn sandwich_epsilon(cfg: &RunConfig, f: &Field) -> Result<f64> {
    Ok(match cfg.sandwich_epsilon {
        EpsilonChoice::Fixed(e) => e,
        EpsilonChoice::Rule => rule_epsilon(cfg, f)?.max(min_bump_epsilon(f.grid)),
    })
}

/// `h″` at `level` with the sandwich `ε` and its regularity constant.
struct UpperFunction {
    h: GridFunction,
    epsilon: f64,
    c: f64,
}

fn upper_function(cfg: &RunConfig, f: &Field, level: f64) -> Result<UpperFunction> {
    if level < f.dl.z0 {
        return Err(Error::InvalidParameter(format!("level {level} lies below z0 = {}", f.dl.z0)));
    }
    let epsilon = sandwich_epsilon(cfg, f)?;
    let spec = build_bump(f.grid, epsilon)?;
    let c = theoretical_c(&spec, cfg.sandwich_ell, f.dl.c)?;
    let h = build_sandwich(&f.delta, level, epsilon, &spec)?.h_hi;
    Ok(UpperFunction { h, epsilon, c })
}

fn mixing_table(cfg: &RunConfig, system: &MapSystem) -> Result<CorrelationTable> {
    let family = SpectralObservable::standard_family(system.dim());
    let times: Vec<u64> = std::iter::once(0).chain(cfg.mixing_t_min..=cfg.mixing_t_max).collect();
    match cfg.mixing_family {
        FamilyKind::Spectral => spectral_correlations(system, &family, cfg.mixing_ell, &times),
        FamilyKind::Grid => {
            let grid = cfg.grid()?;
            let sampled = family.iter().map(|f| f.to_grid(grid)).collect::<Result<Vec<_>>>()?;
            grid_correlations(system, &sampled, cfg.mixing_ell, &times)
        }
    }
}

fn dl_json(dl: &DLCertificate) -> Value {
    json!({ "z0": dl.z0, "c": dl.c, "delta": dl.delta })
}

fn mixing_json(m: &MixingCertificate) -> Value {
    json!({ "E": m.e, "lambda": m.lambda, "ell": m.ell, "r2": m.fit_quality, "slope_se": m.slope_se })
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

fn cmd_tail(cfg: &RunConfig) -> Result<Outcome> {
    let f = field(cfg)?;
    let phi = f.tail.values();
    let monotone = phi.windows(2).all(|w| w[1] <= w[0]);
    let checks = vec![
        Check::new("tail monotone", monotone, format!("{} levels", phi.len())),
        Check::new(
            "dl certificate",
            f.dl.holds_on(&f.tail),
            format!("Phi(z+{}) >= {:.6} Phi(z) for z >= {:.4}", f.dl.delta, f.dl.c, f.dl.z0),
        ),
    ];
    Ok(Outcome {
        command: Command::Tail,
        files: vec![("tail.csv".into(), f.tail.to_csv()?), ("dl_certificate.txt".into(), f.dl.to_string())],
        report: format!("DL certificate: z0={} c={} delta={}\n", f.dl.z0, f.dl.c, f.dl.delta),
        checks,
        certificates: json!({ "dl": dl_json(&f.dl) }),
    })
}

fn cmd_sandwich(cfg: &RunConfig) -> Result<Outcome> {
    let f = field(cfg)?;
    let rule = rule_epsilon(cfg, &f)?;
    let epsilon = sandwich_epsilon(cfg, &f)?;
    let spec = build_bump(f.grid, epsilon)?;
    let c = theoretical_c(&spec, cfg.sandwich_ell, f.dl.c)?;
    let rows = sandwich_scan(&f.delta, &cfg.sandwich_z_levels(), &spec, cfg.sandwich_ell, c)?;
    let squeeze_eps = match cfg.squeeze_epsilon {
        EpsilonChoice::Fixed(e) => e,
        EpsilonChoice::Rule => rule,
    };
    let squeezes = cfg
        .squeeze_z_levels()
        .iter()
        .map(|&z| check_squeeze(&f.delta, z, squeeze_eps, &f.dl))
        .collect::<Result<Vec<SqueezeReport>>>()?;

    let chain_bad = rows.iter().filter(|r| r.chain_violations > 0).count();
    let squeeze_bad = rows.iter().filter(|r| !r.squeeze_holds(f.dl.c, f.grid)).count();
    let worst_new = rows
        .iter()
        .flat_map(|r| [r.ratio_new_lo, r.ratio_new_hi])
        .flatten()
        .fold(0.0, f64::max);
    let mut checks = vec![
        Check::new("pointwise chain", chain_bad == 0, format!("{chain_bad} of {} levels violate h' <= 1_A <= h''", rows.len())),
        Check::new("measure squeeze", squeeze_bad == 0, format!("{squeeze_bad} of {} levels outside the band", rows.len())),
        Check::new(
            "uniform C",
            rows.iter().all(|r| r.regular()),
            format!("C = {c:.6}, largest |h|_(2,{}) / sqrt|h|_1 = {worst_new:.6}", cfg.sandwich_ell),
        ),
    ];
    let first = rows.iter().find(|r| r.z >= 1.0 - 1e-9);
    let last = rows.last().filter(|r| r.z >= 4.0 - 1e-9);
    if let (Some(a), Some(b)) = (first, last) {
        if let (Some(ra), Some(rb)) = (a.ratio_old_lo, b.ratio_old_lo) {
            let growth = rb / ra;
            checks.push(Check::new(
                "old ratio growth",
                growth >= 10.0,
                format!("|h'|_(2,{0}) / |h'|_1 grows {growth:.3}x from z = {1:.4} to z = {2:.4}", cfg.sandwich_ell, a.z, b.z),
            ));
        }
    }
    let failing: Vec<&SqueezeReport> = squeezes.iter().filter(|s| !s.inclusions_hold()).collect();
    checks.push(Check::new(
        "set inclusions",
        failing.is_empty(),
        match failing.first() {
            None => format!("{} levels at eps = {squeeze_eps}", squeezes.len()),
            Some(s) => format!(
                "{} of {} levels fail, first at z = {}: {}",
                failing.len(),
                squeezes.len(),
                s.z,
                s.failures.iter().map(|(i, k)| format!("{i} ({k} cells)")).collect::<Vec<_>>().join("; ")
            ),
        },
    ));

    let squeeze_text: String = squeezes.iter().map(|s| format!("{s}\n")).collect();
    let report = format!(
        "epsilon: sandwich {epsilon} (rule {rule}, kernel floor {}), squeeze {squeeze_eps}\nC = {c}\n",
        min_bump_epsilon(f.grid)
    );
    Ok(Outcome {
        command: Command::Sandwich,
        files: vec![("sandwich.csv".into(), sandwich_csv(&rows)?), ("squeeze.txt".into(), squeeze_text)],
        report,
        checks,
        certificates: json!({
            "dl": dl_json(&f.dl),
            "epsilon": epsilon,
            "epsilon_rule": rule,
            "squeeze_epsilon": squeeze_eps,
            "C": c,
            "ell": cfg.sandwich_ell,
        }),
    })
}

fn cmd_mixing(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let table = mixing_table(cfg, &system)?;
    let cert = fit_mixing(&system, &table)?;
    let env = table.envelope();
    let rows: Vec<Vec<String>> = table
        .times()
        .iter()
        .zip(&env)
        .map(|(&t, e)| {
            let g = system.norm(t, 0);
            vec![t.to_string(), g.to_string(), e.to_string(), cert.bound(g).to_string()]
        })
        .collect();
    let under = table
        .times()
        .iter()
        .zip(&env)
        .all(|(&t, &e)| e <= cert.bound(system.norm(t, 0)) * (1.0 + 1e-12));
    let checks = vec![
        Check::new("positive rate", cert.lambda > 0.0, format!("lambda = {:.6} (se {:.2e})", cert.lambda, cert.slope_se)),
        Check::new("fit quality", cert.fit_quality >= 0.8, format!("r2 = {:.6}", cert.fit_quality)),
        Check::new("envelope under bound", under, format!("{} times", table.times().len())),
    ];
    Ok(Outcome {
        command: Command::Mixing,
        files: vec![
            ("correlation.csv".into(), csv_text(&["t", "norm_g", "corr", "bound"], rows)?),
            ("mixing_certificate.txt".into(), cert.to_string()),
        ],
        report: format!("mixing certificate: {}\n", cert.to_string().trim_end().replace('\n', " ")),
        checks,
        certificates: json!({ "mixing": mixing_json(&cert) }),
    })
}

fn cmd_sp(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let cert = fit_mixing(&system, &mixing_table(cfg, &system)?)?;
    let f = field(cfg)?;
    let upper = upper_function(cfg, &f, cfg.sp_level)?;
    let ed = ed_sum(&system, cert.lambda, cfg.sp_n_max)?;
    let bound = sp_bound(cert.e, upper.c, cert.lambda, ed)?;
    let (mode, k) = match cfg.sp_mode {
        SpModeKind::Exact => (SpMode::Exact, 0.0),
        SpModeKind::MonteCarlo => (
            SpMode::MonteCarlo {
                samples: cfg.sp_samples,
                seed: cfg.seed,
            },
            3.0,
        ),
    };
    let report = sp_report(&system, std::slice::from_ref(&upper.h), &dyadic_windows(cfg.sp_n_max), mode, bound)?;
    let checks = vec![Check::new(
        "second-moment ceiling",
        report.holds(k),
        format!("max ratio {:.6} vs bound {bound:.6}, {} windows", report.max_ratio(), report.windows.len()),
    )];
    Ok(Outcome {
        command: Command::Sp,
        files: vec![("sp.csv".into(), report.to_csv()?)],
        report: format!(
            "mass a = {:.6}, C = {:.6}, ed_sup = {ed:.6}, bound = {bound:.6}, max ratio = {:.6}\n",
            upper.h.integral(),
            upper.c,
            report.max_ratio()
        ),
        checks,
        certificates: json!({
            "dl": dl_json(&f.dl),
            "mixing": mixing_json(&cert),
            "epsilon": upper.epsilon,
            "C": upper.c,
            "ed_sup": ed,
            "sp_bound": bound,
        }),
    })
}

fn band_line(label: &str, s: &Summary) -> String {
    format!(
        "{label}: q05={:.4} q25={:.4} median={:.4} q75={:.4} q95={:.4} mean={:.4} sd={:.4}\n",
        s.q05, s.q25, s.median, s.q75, s.q95, s.mean, s.sd
    )
}

fn cmd_bc(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let f = field(cfg)?;
    let upper = upper_function(cfg, &f, cfg.bc_level)?;
    let h = [upper.h.clone()];
    let horizons = &cfg.bc_ratio_horizons;
    let ratios = ensemble_map(&system, cfg.bc_ratio_samples, cfg.seed, |x| smooth_ratios(&system, &h, x, horizons))?;

    let mut report = format!("smooth ratios, h'' at z = {} with mass {:.6}\n", cfg.bc_level, upper.h.integral());
    let mut checks = Vec::new();
    let mut ratio_rows = Vec::new();
    let mut iqrs = Vec::new();
    for (j, &n) in horizons.iter().enumerate() {
        let values: Vec<f64> = ratios.iter().map(|r| r[j]).collect();
        for (i, v) in values.iter().enumerate() {
            ratio_rows.push(vec![i.to_string(), n.to_string(), v.to_string()]);
        }
        let s = Summary::from_values(values.clone())?;
        report += &band_line(&format!("  N = {n}"), &s);
        iqrs.push(s.iqr());
        if j + 1 == horizons.len() {
            let dev = Summary::from_values(values.iter().map(|v| (v - 1.0).abs()).collect())?;
            checks.push(Check::new(
                "median deviation",
                dev.median <= 0.1,
                format!("median |ratio - 1| = {:.6} at N = {n}", dev.median),
            ));
        }
    }
    if horizons.len() > 1 {
        checks.push(Check::new(
            "iqr shrinks",
            iqrs.windows(2).all(|w| w[1] < w[0]),
            format!("IQR {}", iqrs.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" -> ")),
        ));
    }

    let delta = cfg.log_distance()?;
    let n_hit = cfg.bc_hit_horizon;
    let schedule = TargetSchedule::harmonic(&delta, n_hit as usize)?;
    schedule.check_levels(f.dl.z0)?;
    let hits = ensemble_map(&system, cfg.bc_hit_samples, cfg.seed, |x| hit_count(&system, &delta, &schedule, x, n_hit))?;
    let hit_rows = hits.iter().enumerate().map(|(i, s)| {
        vec![
            i.to_string(),
            n_hit.to_string(),
            s.hits.to_string(),
            s.expected.to_string(),
            s.ratio.map(|r| r.to_string()).unwrap_or_default(),
        ]
    });
    let hit_csv = csv_text(&["seed", "N", "S_N", "expected", "ratio"], hit_rows)?;
    let (lo, hi) = (f.dl.c, 1.0 / f.dl.c);
    let inside = hits.iter().filter(|s| s.ratio.is_some_and(|r| (lo..=hi).contains(&r))).count();
    let coverage = inside as f64 / hits.len() as f64;
    let finite: Vec<f64> = hits.iter().filter_map(|s| s.ratio).collect();
    if !finite.is_empty() {
        report += &band_line(&format!("hit ratios, N = {n_hit}"), &Summary::from_values(finite)?);
    }
    report += &format!("coverage of [{lo:.4}, {hi:.4}]: {coverage:.4}\n");
    checks.push(Check::new(
        "hit band coverage",
        coverage >= cfg.bc_min_coverage,
        format!("{inside} of {} ratios in [c, 1/c] = [{lo:.6}, {hi:.6}]", hits.len()),
    ));

    Ok(Outcome {
        command: Command::Bc,
        files: vec![
            ("ratio.csv".into(), csv_text(&["seed", "N", "ratio"], ratio_rows)?),
            ("hits.csv".into(), hit_csv),
        ],
        report,
        checks,
        certificates: json!({
            "dl": dl_json(&f.dl),
            "epsilon": upper.epsilon,
            "C": upper.c,
            "coverage": coverage,
        }),
    })
}

/// Runs `command` without touching the filesystem.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Tail => cmd_tail(cfg),
        Command::Sandwich => cmd_sandwich(cfg),
        Command::Mixing => cmd_mixing(cfg),
        Command::Sp => cmd_sp(cfg),
        Command::Bc => cmd_bc(cfg),
    }
}

/// [`execute`] on a pool of `workers` threads (rayon's default when absent).
pub fn execute_with_workers(command: Command, cfg: &RunConfig, workers: Option<usize>) -> Result<Outcome> {
    match workers {
        None => execute(command, cfg),
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {k} workers: {e}")))?
            .install(|| execute(command, cfg)),
    }
}

fn provenance(outcome: &Outcome, cfg: &RunConfig) -> String {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let record = json!({
        "command": outcome.command.name(),
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "grid_n": cfg.grid_n,
        "grid_dim": cfg.grid_dim,
        "certificates": outcome.certificates,
        "checks_passed": outcome.passed(),
        "timestamp": timestamp,
    });
    serde_json::to_string_pretty(&record).expect("provenance serializes") + "\n"
}

/// Writes every output of `outcome` plus `verdict.txt` and
/// `provenance.json`. All files are staged as temporaries in `dir` first and
/// renamed into place only once every one of them has been written.
pub fn write_outputs(dir: &Path, outcome: &Outcome, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut all: Vec<(String, String)> = outcome.files.clone();
    all.push(("verdict.txt".into(), outcome.verdict_text()));
    all.push(("provenance.json".into(), provenance(outcome, cfg)));
    let mut staged = Vec::with_capacity(all.len());
    for (name, contents) in &all {
        let mut tmp = tempfile::Builder::new().prefix(".bclab-").tempfile_in(dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        staged.push((dir.join(name), tmp));
    }
    let mut paths = Vec::with_capacity(staged.len());
    for (path, tmp) in staged {
        tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Executes, writes outputs, and returns the outcome. Check failures are not
/// errors here; see [`Outcome::verdict`].
pub fn run(command: Command, cfg: &RunConfig, out: &Path, workers: Option<usize>) -> Result<Outcome> {
    let outcome = execute_with_workers(command, cfg, workers)?;
    write_outputs(out, &outcome, cfg)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig::parse("grid.n = 128\nsandwich.levels = 4\nsqueeze.levels = 3\n").unwrap()
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!(matches!("plot".parse::<Command>(), Err(Error::Config(_))));
    }

    #[test]
    fn tail_outputs_and_hash() {
        let cfg = small();
        let o = execute(Command::Tail, &cfg).unwrap();
        assert!(o.passed());
        assert!(o.file("tail.csv").unwrap().starts_with("z,phi\n"));
        let dl: DLCertificate = o.file("dl_certificate.txt").unwrap().parse().unwrap();
        assert!(dl.c > 0.0 && dl.c <= 1.0);
        assert_eq!(config_hash(&cfg), config_hash(&cfg.clone()));
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(config_hash(&cfg), config_hash(&other));
    }

    #[test]
    fn outputs_are_written_and_worker_count_is_irrelevant() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        let a = run(Command::Tail, &cfg, dir.path(), Some(1)).unwrap();
        let b = execute_with_workers(Command::Tail, &cfg, Some(3)).unwrap();
        assert_eq!(a.files, b.files);
        let mut names: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, ["dl_certificate.txt", "provenance.json", "tail.csv", "verdict.txt"]);
        let prov: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("provenance.json")).unwrap()).unwrap();
        assert_eq!(prov["config_sha256"], config_hash(&cfg));
        assert!(matches!(execute_with_workers(Command::Tail, &cfg, Some(0)), Err(Error::Config(_))));
    }
}

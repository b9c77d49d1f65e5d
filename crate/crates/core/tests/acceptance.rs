//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line for each, and exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bclab::dynamics::{
    correlation, ed_sum, ed_sum_limit, fit_mixing, spectral_correlations, MapSystem, SpectralObservable,
};
use bclab::experiment::{
    dyadic_windows, ensemble, ensemble_map, hit_count, smooth_ratios, sp_bound, sp_report, SpMode, Summary,
    TargetSchedule,
};
use bclab::grid::{convolve, lp_norm, GridFunction, TorusGrid};
use bclab::mollifier::{
    build_bump, build_sandwich, check_squeeze, derived_epsilon, evaluate_sandwich, min_bump_epsilon, sandwich_scan,
    theoretical_c, SandwichRow,
};
use bclab::tail::{dl_log_dist, fit_dl, tail_function, uniform_levels, DLCertificate, LogDistance, LOG_DIST_Z0};
use bclab::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CENTER: [f64; 2] = [0.5, 0.5];
const DL_DELTA: f64 = 0.5;
const Z_MAX: f64 = 4.0;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

/// `Δ` on the 1024² grid with its DL certificate.
struct Field {
    grid: TorusGrid,
    delta: GridFunction,
    dl: DLCertificate,
}

fn field() -> Result<Field> {
    let grid = TorusGrid::new(2, 1024)?;
    let delta = dl_log_dist(grid, &CENTER)?;
    let tail = tail_function(&delta, &uniform_levels(0.0, Z_MAX + DL_DELTA, 0.01))?;
    let dl = fit_dl(&tail, DL_DELTA, LOG_DIST_Z0)?;
    Ok(Field { grid, delta, dl })
}

struct Scan {
    rows: Vec<SandwichRow>,
    epsilon: f64,
    c: f64,
    ell: usize,
    at_one: SandwichRow,
}

fn scan(f: &Field) -> Result<Scan> {
    let epsilon = derived_epsilon(&f.delta, DL_DELTA, LOG_DIST_Z0, Z_MAX)?.max(min_bump_epsilon(f.grid));
    let spec = build_bump(f.grid, epsilon)?;
    let ell = 1;
    let c = theoretical_c(&spec, ell, f.dl.c)?;
    let levels: Vec<f64> = (0..30).map(|i| LOG_DIST_Z0 + (Z_MAX - LOG_DIST_Z0) * i as f64 / 29.0).collect();
    let rows = sandwich_scan(&f.delta, &levels, &spec, ell, c)?;
    let at_one = evaluate_sandwich(&f.delta, 1.0, &spec, ell, c)?;
    Ok(Scan { rows, epsilon, c, ell, at_one })
}

fn young() -> Result<Verdict> {
    let grid = TorusGrid::new(2, 128)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..200 {
        let psi = if i % 2 == 0 {
            GridFunction::new(grid, (0..grid.len()).map(|_| rng.gen::<f64>()).collect())?
        } else {
            let (w, cx, cy) = (rng.gen_range(0.01..0.3), rng.gen::<f64>(), rng.gen::<f64>());
            GridFunction::from_fn(grid, |x| (-(bclab::grid::torus_distance(&x, &[cx, cy]) / w).powi(2)).exp())?
        };
        let h = GridFunction::new(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let lhs = lp_norm(&convolve(&psi, &h)?, 2.0)?;
        let rhs = lp_norm(&psi, 1.0)? * lp_norm(&h, 2.0)?;
        worst = worst.max(lhs - (rhs + 1e-9));
    }
    verdict(worst <= 0.0, format!("200 pairs at n = 128, max ‖ψ∗h‖₂ − ‖ψ‖₁‖h‖₂ − 1e-9 = {worst:.3e}"))
}

fn sandwich_chain(f: &Field, s: &Scan) -> Result<Verdict> {
    let chain_bad = s.rows.iter().map(|r| r.chain_violations).sum::<usize>();
    let squeeze_bad: Vec<f64> = s.rows.iter().filter(|r| !r.squeeze_holds(f.dl.c, f.grid)).map(|r| r.z).collect();
    verdict(
        chain_bad == 0 && squeeze_bad.is_empty(),
        format!(
            "30 levels in [{LOG_DIST_Z0:.4}, {Z_MAX}], eps = {:.5}, c = {:.4}: {chain_bad} chain violations, squeeze fails at {squeeze_bad:?}",
            s.epsilon, f.dl.c
        ),
    )
}

fn uniform_regularity(s: &Scan) -> Result<Verdict> {
    let worst = s
        .rows
        .iter()
        .flat_map(|r| [r.ratio_new_lo, r.ratio_new_hi])
        .flatten()
        .fold(0.0, f64::max);
    let all_regular = s.rows.iter().all(|r| r.regular()) && s.rows.iter().all(|r| r.ratio_new_hi.is_some());
    let last = s.rows.last().expect("nonempty scan");
    let growth = match (s.at_one.ratio_old_lo, last.ratio_old_lo) {
        (Some(a), Some(b)) => b / a,
        _ => return Err(Error::ZeroFunction),
    };
    verdict(
        all_regular && growth >= 10.0,
        format!(
            "C = {:.2} vs max ‖h‖_(2,{}) / √‖h‖₁ = {worst:.2}; ‖h′‖_(2,1) / ‖h′‖₁ grows {growth:.1}x from z = 1 to z = {}",
            s.c, s.ell, last.z
        ),
    )
}

fn inclusions(f: &Field) -> Result<Verdict> {
    let eps = derived_epsilon(&f.delta, DL_DELTA, LOG_DIST_Z0, Z_MAX)?;
    let mut bad = Vec::new();
    for i in 0..10 {
        let z = LOG_DIST_Z0 + (Z_MAX - LOG_DIST_Z0) * i as f64 / 9.0;
        let r = check_squeeze(&f.delta, z, eps, &f.dl)?;
        if !r.inclusions_hold() {
            bad.push(r.to_string());
        }
    }
    let oversized = check_squeeze(&f.delta, 3.0, 0.05, &f.dl)?;
    let reported = oversized.failures.iter().map(|(i, k)| format!("{i} ({k} cells)")).collect::<Vec<_>>();
    verdict(
        bad.is_empty() && !reported.is_empty(),
        format!(
            "10 levels at eps = {eps:.5}: {} failing; eps = 0.05 at z = 3 reports {}",
            bad.len(),
            if reported.is_empty() { "nothing".to_string() } else { reported.join(", ") }
        ),
    )
}

fn characters() -> Result<Verdict> {
    let grid = TorusGrid::new(2, 64)?;
    let cat = MapSystem::cat();
    let re = |k: [i64; 2]| GridFunction::from_fn(grid, move |[x, y]| (2.0 * PI * (k[0] as f64 * x + k[1] as f64 * y)).cos());
    let push = |k: [i64; 2]| [2 * k[0] + k[1], k[0] + k[1]];
    let ks: Vec<[i64; 2]> = (-2..=2).flat_map(|a| (0..=2).map(move |b| [a, b])).filter(|k| *k != [0, 0]).collect();
    let mut worst: f64 = 0.0;
    for &k in &ks {
        let (image, phi) = (push(k), re(k)?);
        for &j in &ks {
            if j != image && j != [-image[0], -image[1]] {
                worst = worst.max(correlation(&cat, &phi, &re(j)?, 1)?.abs());
            }
        }
    }
    let matched = correlation(&cat, &re([1, 0])?, &re([2, 1])?, 1)?;
    verdict(
        worst <= 1e-12 && (matched - 0.5).abs() <= 1e-12,
        format!("max distinct |corr| = {worst:.2e}, <Re e_(1,0) o T, Re e_(2,1)> - 1/2 = {:.2e}", matched - 0.5),
    )
}

fn mixing() -> Result<Verdict> {
    let cat = MapSystem::cat();
    let family = SpectralObservable::standard_family(2);
    let times: Vec<u64> = (0..=20).collect();
    let cert = fit_mixing(&cat, &spectral_correlations(&cat, &family, 1, &times)?)?;
    let rotation = MapSystem::rotation(&[2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0], std::f64::consts::E)?;
    let rot = fit_mixing(&rotation, &spectral_correlations(&rotation, &family, 1, &times)?);
    let not_mixing = matches!(rot, Err(Error::NotMixing(_)));
    let limit = ed_sum_limit(&cat, 1.0);
    let mut ed_ok = true;
    for h in [1, 2, 5, 20, 100, 2048, 100_000] {
        ed_ok &= ed_sum(&cat, 1.0, h)? <= 1.0 + 2.0 / (cat.norm_rate() - 1.0) + 1e-12;
    }
    verdict(
        cert.lambda > 0.0 && cert.fit_quality >= 0.8 && not_mixing && ed_ok,
        format!(
            "cat: lambda = {:.4}, r2 = {:.4}, E = {:.4}; rotation not mixing: {not_mixing}; ed_sum(1) <= {limit:.6}: {ed_ok}",
            cert.lambda, cert.fit_quality, cert.e
        ),
    )
}

fn second_moment() -> Result<Verdict> {
    let cat = MapSystem::cat();
    let family = SpectralObservable::standard_family(2);
    let times: Vec<u64> = (0..=20).collect();
    let cert = fit_mixing(&cat, &spectral_correlations(&cat, &family, 1, &times)?)?;
    let n_max = 2048;
    let ed = ed_sum(&cat, cert.lambda, n_max)?;
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, mode, k) in [
        (512, SpMode::Exact, 0.0),
        (1024, SpMode::MonteCarlo { samples: 4096, seed: 7 }, 3.0),
    ] {
        let grid = TorusGrid::new(2, n)?;
        let delta = dl_log_dist(grid, &CENTER)?;
        let dl = fit_dl(&tail_function(&delta, &uniform_levels(0.0, Z_MAX + DL_DELTA, 0.01))?, DL_DELTA, LOG_DIST_Z0)?;
        let eps = derived_epsilon(&delta, DL_DELTA, LOG_DIST_Z0, Z_MAX)?.max(min_bump_epsilon(grid));
        let spec = build_bump(grid, eps)?;
        let c = theoretical_c(&spec, 1, dl.c)?;
        let h = build_sandwich(&delta, 2.13, eps, &spec)?.h_hi;
        let bound = sp_bound(cert.e, c, cert.lambda, ed)?;
        let report = sp_report(&cat, &[h], &dyadic_windows(n_max), mode, bound)?;
        ok &= report.holds(k);
        let label = if k == 0.0 { "exact" } else { "monte carlo" };
        lines.push(format!("{label} n = {n}: max ratio {:.4} <= {bound:.4e} over {} windows", report.max_ratio(), report.windows.len()));
    }
    verdict(ok, lines.join("; "))
}

fn upper_h(f: &Field, z: f64) -> Result<GridFunction> {
    let eps = derived_epsilon(&f.delta, DL_DELTA, LOG_DIST_Z0, Z_MAX)?.max(min_bump_epsilon(f.grid));
    let spec = build_bump(f.grid, eps)?;
    Ok(build_sandwich(&f.delta, z, eps, &spec)?.h_hi)
}

fn ergodic_ratio(f: &Field) -> Result<Verdict> {
    let cat = MapSystem::cat();
    let h = [upper_h(f, 2.13)?];
    let horizons = [2_000u64, 20_000];
    let ratios = ensemble_map(&cat, 200, 0, |x| smooth_ratios(&cat, &h, x, &horizons))?;
    let at = |j: usize| Summary::from_values(ratios.iter().map(|r| r[j]).collect());
    let (early, late) = (at(0)?, at(1)?);
    let dev = Summary::from_values(ratios.iter().map(|r| (r[1] - 1.0).abs()).collect())?;
    verdict(
        dev.median <= 0.1 && late.iqr() < early.iqr(),
        format!(
            "a = {:.4}, 200 starts: median |ratio - 1| at N = 2e4 is {:.4}; IQR {:.4} -> {:.4}",
            h[0].integral(),
            dev.median,
            early.iqr(),
            late.iqr()
        ),
    )
}

fn hit_band(f: &Field) -> Result<Verdict> {
    let cat = MapSystem::cat();
    let delta = LogDistance::new(&CENTER)?;
    let n = 100_000u64;
    let schedule = TargetSchedule::harmonic(&delta, n as usize)?;
    schedule.check_levels(f.dl.z0)?;
    let (lo, hi) = (f.dl.c, 1.0 / f.dl.c);
    let s = ensemble(&cat, 100, 0, |x| Ok(hit_count(&cat, &delta, &schedule, x, n)?.ratio.unwrap_or(f64::NAN)))?;
    let coverage = s.coverage(lo, hi);
    verdict(
        coverage >= 0.9,
        format!(
            "N = 1e5, 100 starts, expected {:.3}: {:.0}% of ratios in [{lo:.4}, {hi:.4}] (median {:.3}, q05 {:.3}, q95 {:.3})",
            schedule.partial_sum(n as usize),
            100.0 * coverage,
            s.median,
            s.q05,
            s.q95
        ),
    )
}

fn report(index: usize, limit: Option<u64>, elapsed: Duration, outcome: Result<Verdict>) -> bool {
    let secs = elapsed.as_secs_f64();
    let (passed, detail) = match outcome {
        Ok(v) => {
            let in_time = limit.is_none_or(|l| secs < l as f64);
            let timing = match limit {
                Some(l) => format!(" [{secs:.1}s, limit {l}s]"),
                None => format!(" [{secs:.1}s]"),
            };
            (v.passed && in_time, v.detail + &timing)
        }
        Err(e) => (false, format!("error: {e} [{secs:.1}s]")),
    };
    println!("{} criterion {index}: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() -> ExitCode {
    let mut all = true;
    let (r, t) = timed(young);
    all &= report(1, Some(10), t, r);

    let ((f, s), t_scan) = timed(|| {
        let f = field();
        let s = f.as_ref().map_err(|e| Error::InvalidParameter(e.to_string())).and_then(scan);
        (f, s)
    });
    match (&f, &s) {
        (Ok(f), Ok(s)) => {
            all &= report(2, Some(60), t_scan, sandwich_chain(f, s));
            all &= report(3, Some(60), t_scan, uniform_regularity(s));
        }
        _ => {
            let msg = f.as_ref().err().or(s.as_ref().err()).map(|e| e.to_string()).unwrap_or_default();
            for k in [2, 3] {
                all &= report(k, None, t_scan, Err(Error::InvalidParameter(msg.clone())));
            }
        }
    }
    let f = match f {
        Ok(f) => f,
        Err(e) => {
            for k in 4..=9 {
                report(k, None, Duration::ZERO, Err(Error::InvalidParameter(e.to_string())));
            }
            return ExitCode::FAILURE;
        }
    };
    let (r, t) = timed(|| inclusions(&f));
    all &= report(4, None, t, r);
    let (r, t) = timed(characters);
    all &= report(5, None, t, r);
    let (r, t) = timed(mixing);
    all &= report(6, Some(30), t, r);
    let (r, t) = timed(second_moment);
    all &= report(7, Some(120), t, r);
    let (r, t) = timed(|| ergodic_ratio(&f));
    all &= report(8, Some(120), t, r);
    let (r, t) = timed(|| hit_band(&f));
    all &= report(9, Some(180), t, r);

    if all {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}

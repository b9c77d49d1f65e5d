//! Bump kernels, the smooth sandwich `h′ ≤ 1_{A(z)} ≤ h″`, and the
//! regularity constants that control it.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    dilate_many, erode_many, lp_norm, sobolev_norm, torus_distance, GridFunction, IndicatorMask, MultiIndex,
    Spectrum, TorusGrid, RESOLUTION_CELLS,
};
use crate::tail::{continuity_modulus_banded, ContinuityModulus, DLCertificate};

/// Pointwise tolerance on convolved values.
pub const CHAIN_TOLERANCE: f64 = 1e-12;

/// Unit-mass bump `ψ` supported in the `ε/4` ball around the origin.
#[derive(Debug, Clone)]
pub struct MollifierSpec {
    epsilon: f64,
    kernel: GridFunction,
    spectrum: Spectrum,
}

/// Smallest sandwich scale whose kernel radius `ε/4` passes the resolution guard.
pub fn min_bump_epsilon(grid: TorusGrid) -> f64 {
    4.0 * RESOLUTION_CELLS / grid.n() as f64
}

pub fn build_bump(grid: TorusGrid, epsilon: f64) -> Result<MollifierSpec> {
    let radius = epsilon / 4.0;
    let guard = RESOLUTION_CELLS / grid.n() as f64;
    if !(radius >= guard) {
        return Err(Error::ResolutionTooCoarse {
            what: "epsilon/4",
            value: radius,
            guard,
        });
    }
    let origin = [0.0; 2];
    let raw = GridFunction::from_fn(grid, |p| {
        let s = torus_distance(&p[..grid.dim()], &origin[..grid.dim()]) / radius;
        if s < 1.0 {
            (-1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    })?;
    let kernel = raw.scale(1.0 / raw.integral());
    let spectrum = Spectrum::forward(&kernel);
    Ok(MollifierSpec {
        epsilon,
        kernel,
        spectrum,
    })
}

impl MollifierSpec {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grid(&self) -> TorusGrid {
        self.kernel.grid()
    }

    pub fn kernel(&self) -> &GridFunction {
        &self.kernel
    }

    /// `ψ ∗ 1_A`, clipped to `[0, 1]` to remove transform round-off.
    pub fn smooth(&self, mask: &IndicatorMask) -> Result<GridFunction> {
        if mask.grid() != self.grid() {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", mask.grid(), self.grid())));
        }
        if mask.is_empty() {
            return Ok(GridFunction::zeros(self.grid()));
        }
        let cell = self.grid().cell_measure();
        let raw = self.spectrum.multiply(&Spectrum::forward(&mask.to_function())).to_function();
        raw.map(|v| (v * cell).clamp(0.0, 1.0))
    }

    /// `Σ_{|α| ≤ ℓ} ‖D^α ψ‖₁`.
    pub fn derivative_l1_sum(&self, ell: usize) -> Result<f64> {
        let mut total = 0.0;
        for alpha in MultiIndex::up_to(self.grid().dim(), ell) {
            let d = if alpha.order() == 0 {
                self.kernel.clone()
            } else {
                crate::grid::derivative(&self.kernel, &alpha)?
            };
            total += lp_norm(&d, 1.0)?;
        }
        Ok(total)
    }
}

/// `C = (1/√c) Σ_{|α| ≤ ℓ} ‖D^α ψ‖₁`.
pub fn theoretical_c(spec: &MollifierSpec, ell: usize, c: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParameter(format!("DL constant must lie in (0, 1], got {c}")));
    }
    Ok(spec.derivative_l1_sum(ell)? / c.sqrt())
}

/// One `ε` for a whole level range: the modulus scale (when some listed scale
/// keeps the oscillation below `δ`) capped by `(1 − e^{−δ}) e^{−z_max}`.
pub fn epsilon_rule(modulus: Option<&ContinuityModulus>, delta: f64, z_max: f64) -> f64 {
    let geometric = (1.0 - (-delta).exp()) * (-z_max).exp();
    match modulus.and_then(|m| m.largest_scale_below(delta)) {
        Some(e) => e.min(geometric),
        None => geometric,
    }
}

/// Largest spatial scale probed by [`derived_epsilon`], in cells.
pub const MODULUS_MAX_CELLS: usize = 16;

/// [`epsilon_rule`] with the modulus of `delta` measured on the shell
/// `z_min − δ ≤ Δ < z_max + δ` at scales `1/n, …, 16/n`.
pub fn derived_epsilon(delta: &GridFunction, dl_delta: f64, z_min: f64, z_max: f64) -> Result<f64> {
    let n = delta.grid().n() as f64;
    let scales: Vec<f64> = (1..=MODULUS_MAX_CELLS).map(|k| k as f64 / n).collect();
    let modulus = continuity_modulus_banded(delta, z_min - dl_delta, z_max + dl_delta, &scales)?;
    Ok(epsilon_rule(Some(&modulus), dl_delta, z_max))
}

/// The pair `(h′, h″)` at level `z` with the masks it is built from.
#[derive(Debug, Clone)]
pub struct SmoothSandwich {
    pub z: f64,
    pub epsilon: f64,
    /// `h′ = ψ ∗ 1_{A′(z, ε/2)}`.
    pub h_lo: GridFunction,
    /// `h″ = ψ ∗ 1_{A″(z, ε/2)}`.
    pub h_hi: GridFunction,
    /// `A(z)`.
    pub mask: IndicatorMask,
    /// `A′(z, ε)`.
    pub mask_in: IndicatorMask,
    /// `A″(z, ε)`.
    pub mask_out: IndicatorMask,
    /// `A′(z, ε/2)` was empty, so `h′ ≡ 0`.
    pub lo_empty: bool,
}

impl SmoothSandwich {
    /// Cells where `1_{A′(z,ε)} ≤ h′ ≤ 1_{A(z)} ≤ h″ ≤ 1_{A″(z,ε)}` fails.
    pub fn chain_violations(&self) -> usize {
        let ind = |m: &IndicatorMask, i: usize| if m.bits()[i] { 1.0 } else { 0.0 };
        (0..self.mask.grid().len())
            .filter(|&i| {
                let lo = self.h_lo.values()[i];
                let hi = self.h_hi.values()[i];
                let chain = [ind(&self.mask_in, i), lo, ind(&self.mask, i), hi, ind(&self.mask_out, i)];
                chain.windows(2).any(|w| w[0] > w[1] + CHAIN_TOLERANCE)
            })
            .count()
    }

    pub fn chain_holds(&self) -> bool {
        self.chain_violations() == 0
    }
}

pub fn build_sandwich(delta: &GridFunction, z: f64, epsilon: f64, spec: &MollifierSpec) -> Result<SmoothSandwich> {
    if delta.grid() != spec.grid() {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", delta.grid(), spec.grid())));
    }
    if (epsilon - spec.epsilon).abs() > 1e-12 * spec.epsilon {
        return Err(Error::InvalidParameter(format!(
            "sandwich scale {epsilon} does not match the kernel scale {}",
            spec.epsilon
        )));
    }
    let mask = delta.superlevel(z);
    let mut inner = erode_many(&mask, &[epsilon / 2.0, epsilon])?;
    let mut outer = dilate_many(&mask, &[epsilon / 2.0, epsilon])?;
    let (mask_in, half_in) = (inner.pop().unwrap(), inner.pop().unwrap());
    let (mask_out, half_out) = (outer.pop().unwrap(), outer.pop().unwrap());
    Ok(SmoothSandwich {
        z,
        epsilon,
        h_lo: spec.smooth(&half_in)?,
        h_hi: spec.smooth(&half_out)?,
        lo_empty: half_in.is_empty(),
        mask,
        mask_in,
        mask_out,
    })
}

/// The four inclusions `A(z+δ) ⊂ A′(z,ε) ⊂ A(z) ⊂ A″(z,ε) ⊂ A(z−δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inclusion {
    UpperInEroded,
    ErodedInSet,
    SetInDilated,
    DilatedInLower,
}

impl fmt::Display for Inclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inclusion::UpperInEroded => "A(z+delta) in A'(z,eps)",
            Inclusion::ErodedInSet => "A'(z,eps) in A(z)",
            Inclusion::SetInDilated => "A(z) in A''(z,eps)",
            Inclusion::DilatedInLower => "A''(z,eps) in A(z-delta)",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeReport {
    pub z: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    /// Failing inclusions with the number of offending cells.
    pub failures: Vec<(Inclusion, usize)>,
    /// Measures of `A(z+δ)`, `A′(z,ε)`, `A(z)`, `A″(z,ε)`, `A(z−δ)`.
    pub measures: [f64; 5],
}

impl SqueezeReport {
    pub fn inclusions_hold(&self) -> bool {
        self.failures.is_empty()
    }

    /// `c μ(A) − τ ≤ μ(A′) ≤ μ(A″) ≤ μ(A)/c + τ`.
    pub fn measure_chain_holds(&self, tau: f64) -> bool {
        let [_, inner, set, outer, _] = self.measures;
        self.c * set - tau <= inner && inner <= outer && outer <= set / self.c + tau
    }

    /// `μ(A′)/μ(A)` and `μ(A″)/μ(A)`.
    pub fn ratios(&self) -> (f64, f64) {
        let [_, inner, set, outer, _] = self.measures;
        (inner / set, outer / set)
    }
}

impl fmt::Display for SqueezeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.ratios();
        write!(f, "z={} eps={} delta={} ratio_in={lo} ratio_out={hi}", self.z, self.epsilon, self.delta)?;
        if self.failures.is_empty() {
            write!(f, " inclusions=ok")
        } else {
            for (inc, cells) in &self.failures {
                write!(f, " FAIL[{inc}: {cells} cells]")?;
            }
            Ok(())
        }
    }
}

pub fn check_squeeze(delta: &GridFunction, z: f64, epsilon: f64, cert: &DLCertificate) -> Result<SqueezeReport> {
    if epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let set = delta.superlevel(z);
    let upper = delta.superlevel(z + cert.delta);
    let lower = delta.superlevel(z - cert.delta);
    let (inner, outer) = if epsilon == 0.0 {
        (set.clone(), set.clone())
    } else {
        (
            erode_many(&set, &[epsilon])?.remove(0),
            dilate_many(&set, &[epsilon])?.remove(0),
        )
    };
    let pairs = [
        (Inclusion::UpperInEroded, &upper, &inner),
        (Inclusion::ErodedInSet, &inner, &set),
        (Inclusion::SetInDilated, &set, &outer),
        (Inclusion::DilatedInLower, &outer, &lower),
    ];
    let failures = pairs
        .iter()
        .filter_map(|(inc, a, b)| {
            let extra = a.excess_over(b);
            (extra > 0).then_some((*inc, extra))
        })
        .collect();
    Ok(SqueezeReport {
        z,
        epsilon,
        delta: cert.delta,
        c: cert.c,
        failures,
        measures: [upper.measure(), inner.measure(), set.measure(), outer.measure(), lower.measure()],
    })
}

/// Sobolev norm of one function against `√‖h‖₁` and against `‖h‖₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityCertificate {
    pub c: f64,
    pub ell: usize,
    /// `‖h‖_{2,ℓ} / √‖h‖₁`.
    pub measured_ratio_new: f64,
    /// `‖h‖_{2,ℓ} / ‖h‖₁`.
    pub measured_ratio_old: f64,
}

impl RegularityCertificate {
    pub fn valid(&self) -> bool {
        self.measured_ratio_new <= self.c
    }
}

pub fn check_regular(h: &GridFunction, c: f64, ell: usize) -> Result<RegularityCertificate> {
    if h.min() < -CHAIN_TOLERANCE {
        return Err(Error::InvalidParameter("regularity is defined for nonnegative functions".into()));
    }
    let l1 = lp_norm(h, 1.0)?;
    if l1 == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let s = sobolev_norm(h, ell)?;
    Ok(RegularityCertificate {
        c,
        ell,
        measured_ratio_new: s / l1.sqrt(),
        measured_ratio_old: s / l1,
    })
}

/// One line of the sandwich report.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichRow {
    pub z: f64,
    pub phi: f64,
    pub perimeter: f64,
    pub l1_lo: f64,
    pub l1_hi: f64,
    pub sobolev_lo: f64,
    pub sobolev_hi: f64,
    pub ratio_new_lo: Option<f64>,
    pub ratio_old_lo: Option<f64>,
    pub ratio_new_hi: Option<f64>,
    pub c: f64,
    pub chain_violations: usize,
}

impl SandwichRow {
    /// `τ = 4 · perimeter(A(z)) / n`.
    pub fn tau(&self, grid: TorusGrid) -> f64 {
        4.0 * self.perimeter / grid.n() as f64
    }

    pub fn squeeze_holds(&self, dl_c: f64, grid: TorusGrid) -> bool {
        let tau = self.tau(grid);
        dl_c * self.phi - tau <= self.l1_lo && self.l1_lo <= self.l1_hi && self.l1_hi <= self.phi / dl_c + tau
    }

    /// Both `h′` (when nonzero) and `h″` satisfy `‖h‖_{2,ℓ} ≤ C√‖h‖₁` with the row's `C`.
    pub fn regular(&self) -> bool {
        self.ratio_new_lo.is_none_or(|r| r <= self.c) && self.ratio_new_hi.is_none_or(|r| r <= self.c)
    }
}

pub fn evaluate_sandwich(delta: &GridFunction, z: f64, spec: &MollifierSpec, ell: usize, c: f64) -> Result<SandwichRow> {
    let s = build_sandwich(delta, z, spec.epsilon, spec)?;
    let l1_lo = lp_norm(&s.h_lo, 1.0)?;
    let l1_hi = lp_norm(&s.h_hi, 1.0)?;
    let sobolev_lo = sobolev_norm(&s.h_lo, ell)?;
    let sobolev_hi = sobolev_norm(&s.h_hi, ell)?;
    let ratio = |sob: f64, l1: f64, pow: f64| (l1 > 0.0).then(|| sob / l1.powf(pow));
    Ok(SandwichRow {
        z,
        phi: s.mask.measure(),
        perimeter: s.mask.perimeter(),
        l1_lo,
        l1_hi,
        sobolev_lo,
        sobolev_hi,
        ratio_new_lo: ratio(sobolev_lo, l1_lo, 0.5),
        ratio_old_lo: ratio(sobolev_lo, l1_lo, 1.0),
        ratio_new_hi: ratio(sobolev_hi, l1_hi, 0.5),
        c,
        chain_violations: s.chain_violations(),
    })
}

/// [`evaluate_sandwich`] at every level, in parallel, rows in input order.
pub fn sandwich_scan(delta: &GridFunction, levels: &[f64], spec: &MollifierSpec, ell: usize, c: f64) -> Result<Vec<SandwichRow>> {
    levels
        .par_iter()
        .map(|&z| evaluate_sandwich(delta, z, spec, ell, c))
        .collect()
}

pub fn sandwich_csv(rows: &[SandwichRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "z",
        "phi",
        "l1_lo",
        "l1_hi",
        "sobolev_lo",
        "sobolev_hi",
        "ratio_new_lo",
        "ratio_old_lo",
        "C",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.z.to_string(),
            r.phi.to_string(),
            r.l1_lo.to_string(),
            r.l1_hi.to_string(),
            r.sobolev_lo.to_string(),
            r.sobolev_hi.to_string(),
            opt(r.ratio_new_lo),
            opt(r.ratio_old_lo),
            r.c.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

//! Observables given by closed-form Fourier coefficients, and their
//! correlations computed on the frequency lattice.
//!
//! For a toral automorphism `φ ∘ T = Σ φ̂(k) e_{Mᵀk}`, so
//! `⟨φ ∘ T^t, ψ⟩ − φ̂(0)ψ̂(0) = Σ_{a≠0} φ̂(a) ψ̂((Mᵀ)^t a)`. The nonzero lattice
//! splits into `Mᵀ`-orbits; along an orbit `|N^j a|²` is strictly convex in
//! `j`, so its minimum is a canonical representative and every orbit that
//! comes within `R₀` of the origin is enumerated exactly once.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{CorrelationTable, MapKind, MapSystem, Mat};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiIndex, Spectrum, TorusGrid};

/// Orbits are enumerated from representatives with `|b| ≤ R₀`.
const ORBIT_ROOT_RADIUS: i64 = 64;
/// Orbits are followed while `|b| ≤ L`.
const ORBIT_REACH: f64 = 1e12;
/// Frequency box for Sobolev sums and rotation correlations.
const BOX_2D: i64 = 256;
const BOX_1D: i64 = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `amp (1 + |k|²)^{−s/2} (1 + β cos(mθ))` for `k ≠ 0`, with `θ` the
    /// polar angle of `k`; mean zero.
    PowerLaw { amp: f64, s: f64, beta: f64, m: u32 },
    /// `Σ c cos(2π k·x)`.
    Cosines(Vec<([i64; 2], f64)>),
}

/// A real, even function on `T^d` described by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralObservable {
    dim: usize,
    profile: Profile,
}

impl SpectralObservable {
    pub fn power_law(dim: usize, amp: f64, s: f64, beta: f64, m: u32) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim}")));
        }
        if !(amp > 0.0) || !(s >= 2.0) || !(beta.abs() < 1.0) || m % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "power-law profile needs amp > 0, s >= 2, |beta| < 1, even m; got ({amp}, {s}, {beta}, {m})"
            )));
        }
        Ok(Self {
            dim,
            profile: Profile::PowerLaw { amp, s, beta, m },
        })
    }

    pub fn cosines(dim: usize, terms: Vec<([i64; 2], f64)>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim}")));
        }
        if dim == 1 && terms.iter().any(|(k, _)| k[1] != 0) {
            return Err(Error::InvalidParameter("1-d cosine modes must have k[1] = 0".into()));
        }
        Ok(Self {
            dim,
            profile: Profile::Cosines(terms),
        })
    }

    /// Six power-law observables with distinct decay and angular structure.
    pub fn standard_family(dim: usize) -> Vec<Self> {
        [(3.0, 0.0, 0), (3.5, 0.5, 2), (4.0, -0.5, 2), (3.0, 0.7, 4), (3.5, -0.3, 4), (4.5, 0.4, 6)]
            .iter()
            .map(|&(s, beta, m)| Self::power_law(dim, 1.0, s, beta, m).expect("valid profile"))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn scaled(&self, a: f64) -> Self {
        let profile = match &self.profile {
            Profile::PowerLaw { amp, s, beta, m } => Profile::PowerLaw {
                amp: amp * a,
                s: *s,
                beta: *beta,
                m: *m,
            },
            Profile::Cosines(t) => Profile::Cosines(t.iter().map(|&(k, c)| (k, c * a)).collect()),
        };
        Self { dim: self.dim, profile }
    }

    /// Fourier coefficient `φ̂(k)`.
    pub fn coefficient(&self, k: [i64; 2]) -> f64 {
        match &self.profile {
            Profile::PowerLaw { amp, s, beta, m } => {
                if k == [0, 0] {
                    return 0.0;
                }
                let (x, y) = (k[0] as f64, k[1] as f64);
                let angular = if *m == 0 { 1.0 } else { 1.0 + beta * (*m as f64 * y.atan2(x)).cos() };
                amp * (1.0 + x * x + y * y).powf(-s / 2.0) * angular
            }
            Profile::Cosines(terms) => terms
                .iter()
                .map(|&(q, c)| {
                    if q == [0, 0] {
                        if k == [0, 0] {
                            c
                        } else {
                            0.0
                        }
                    } else if k == q || k == [-q[0], -q[1]] {
                        c / 2.0
                    } else {
                        0.0
                    }
                })
                .sum(),
        }
    }

    fn frequency_box(&self) -> Vec<[i64; 2]> {
        match self.dim {
            1 => (-BOX_1D..=BOX_1D).map(|k| [k, 0]).collect(),
            _ => (-BOX_2D..=BOX_2D)
                .flat_map(|a| (-BOX_2D..=BOX_2D).map(move |b| [a, b]))
                .collect(),
        }
    }

    fn modes(&self) -> Vec<[i64; 2]> {
        match &self.profile {
            Profile::PowerLaw { .. } => self.frequency_box(),
            Profile::Cosines(terms) => {
                let mut ks: Vec<[i64; 2]> = terms.iter().flat_map(|&(k, _)| [k, [-k[0], -k[1]]]).collect();
                ks.sort();
                ks.dedup();
                ks
            }
        }
    }

    /// `Σ_{|α| ≤ ℓ} ‖D^α φ‖₂` by Parseval (exact for cosines, box-truncated
    /// otherwise).
    pub fn sobolev_norm(&self, ell: usize) -> f64 {
        let alphas = MultiIndex::up_to(self.dim, ell);
        let mut sums = vec![0.0; alphas.len()];
        for k in self.modes() {
            let c = self.coefficient(k);
            let c2 = c * c;
            if c2 == 0.0 {
                continue;
            }
            for (slot, alpha) in sums.iter_mut().zip(&alphas) {
                let w: f64 = alpha
                    .components()
                    .iter()
                    .zip(&k)
                    .map(|(&a, &km)| (2.0 * PI * km as f64).powi(2 * a as i32))
                    .product();
                *slot += c2 * w;
            }
        }
        sums.iter().map(|s| s.sqrt()).sum()
    }

    /// Grid samples of the band-limited part resolved by `grid`.
    pub fn to_grid(&self, grid: TorusGrid) -> Result<GridFunction> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!("{}-d observable on a {}-d grid", self.dim, grid.dim())));
        }
        Ok(Spectrum::from_coefficients(grid, |k| self.coefficient(k)).to_function())
    }
}

fn norm2(v: [i64; 2]) -> i128 {
    (v[0] as i128).pow(2) + (v[1] as i128).pow(2)
}

fn apply(m: &Mat, v: [i64; 2]) -> [i64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Segments `…, N⁻¹b, b, Nb, …` of every `N`-orbit whose minimum lies
/// within [`ORBIT_ROOT_RADIUS`], truncated to `|·| ≤ ORBIT_REACH`.
fn lattice_orbits(n: &Mat) -> Vec<Vec<[i64; 2]>> {
    let inv: Mat = [[n[1][1], -n[0][1]], [-n[1][0], n[0][0]]];
    let r0 = ORBIT_ROOT_RADIUS;
    let reach2 = (ORBIT_REACH * ORBIT_REACH) as i128;
    let mut orbits = Vec::new();
    for a in -r0..=r0 {
        for b in -r0..=r0 {
            let v = [a, b];
            let q = norm2(v);
            if q == 0 || q > (r0 * r0) as i128 {
                continue;
            }
            if !(q < norm2(apply(n, v)) && q <= norm2(apply(&inv, v))) {
                continue;
            }
            let mut back = Vec::new();
            let mut x = apply(&inv, v);
            while norm2(x) <= reach2 {
                back.push(x);
                x = apply(&inv, x);
            }
            back.reverse();
            let mut x = v;
            while norm2(x) <= reach2 {
                back.push(x);
                x = apply(n, x);
            }
            orbits.push(back);
        }
    }
    orbits
}

fn check_family(system: &MapSystem, family: &[SpectralObservable]) -> Result<()> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty observable family".into()));
    }
    if let Some(f) = family.iter().find(|f| f.dim() != system.dim()) {
        return Err(Error::GridMismatch(format!("{}-d observable for a {}-d map", f.dim(), system.dim())));
    }
    Ok(())
}

/// Centered correlations `⟨φ_p ∘ T^t, φ_q⟩ − ∫φ_p ∫φ_q` for every ordered pair.
pub fn spectral_correlations(
    system: &MapSystem,
    family: &[SpectralObservable],
    ell: usize,
    times: &[u64],
) -> Result<CorrelationTable> {
    check_family(system, family)?;
    let m = family.len();
    let norms: Vec<f64> = family.iter().map(|f| f.sobolev_norm(ell)).collect();
    let corr: Vec<Vec<f64>> = match system.kind() {
        MapKind::Toral(mat) => {
            let det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0];
            if det != 1 {
                return Err(Error::InvalidParameter("lattice correlations need det M = 1".into()));
            }
            let nt: Mat = [[mat[0][0], mat[1][0]], [mat[0][1], mat[1][1]]];
            let orbits = lattice_orbits(&nt);
            let values: Vec<Vec<Vec<f64>>> = family
                .iter()
                .map(|f| orbits.iter().map(|o| o.iter().map(|&k| f.coefficient(k)).collect()).collect())
                .collect();
            times
                .par_iter()
                .map(|&t| {
                    let t = t as usize;
                    let mut row = vec![0.0; m * m];
                    for p in 0..m {
                        for q in 0..m {
                            let mut s = 0.0;
                            for (vp, vq) in values[p].iter().zip(&values[q]) {
                                if vp.len() > t {
                                    s += vp[..vp.len() - t].iter().zip(&vq[t..]).map(|(a, b)| a * b).sum::<f64>();
                                }
                            }
                            row[p * m + q] = s;
                        }
                    }
                    row
                })
                .collect()
        }
        MapKind::Doubling => {
            let ks: Vec<i64> = (-BOX_1D..=BOX_1D).filter(|&k| k != 0).collect();
            times
                .par_iter()
                .map(|&t| {
                    let mut row = vec![0.0; m * m];
                    for &k in &ks {
                        let limit = if t >= 62 { 0 } else { (1i64 << 62) >> t };
                        if k.abs() > limit {
                            continue;
                        }
                        let image = k << t;
                        for p in 0..m {
                            let a = family[p].coefficient([k, 0]);
                            if a == 0.0 {
                                continue;
                            }
                            for q in 0..m {
                                row[p * m + q] += a * family[q].coefficient([image, 0]);
                            }
                        }
                    }
                    row
                })
                .collect()
        }
        MapKind::Rotation(shift) => {
            let modes: Vec<[i64; 2]> = family[0].frequency_box().into_iter().filter(|&k| k != [0, 0]).collect();
            let coeffs: Vec<Vec<f64>> = modes.iter().map(|&k| family.iter().map(|f| f.coefficient(k)).collect()).collect();
            times
                .par_iter()
                .map(|&t| {
                    let mut row = vec![0.0; m * m];
                    for (k, c) in modes.iter().zip(&coeffs) {
                        let phase: f64 = k.iter().zip(shift).map(|(&km, s)| km as f64 * s).sum::<f64>();
                        let w = (2.0 * PI * (phase * t as f64).fract()).cos();
                        for p in 0..m {
                            for q in 0..m {
                                row[p * m + q] += c[p] * c[q] * w;
                            }
                        }
                    }
                    row
                })
                .collect()
        }
    };
    CorrelationTable::new(times.to_vec(), norms, corr, ell)
}

//! Measure-preserving torus maps: hyperbolic toral automorphisms, the
//! doubling map, and rigid rotations as a non-mixing control.

mod mixing;
mod orbit;
mod spectral;

pub use mixing::{ed_sum, ed_sum_limit, fit_mixing, fit_mixing_grid, grid_correlations, CorrelationTable, MixingCertificate};
pub use orbit::{Observable, Orbit, StartPoint, TRIADIC_MODULUS};
pub use spectral::{spectral_correlations, Profile, SpectralObservable};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, IndicatorMask, TorusGrid};

/// Orbit length cap for the doubling map in double precision.
pub const DOUBLING_FLOAT_CAP: u64 = 60;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `x ↦ M x mod 1` with an integer matrix, `|det M| = 1`.
    Toral([[i64; 2]; 2]),
    /// `x ↦ 2x mod 1` on `T¹`.
    Doubling,
    /// `x ↦ x + α mod 1`.
    Rotation(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSystem {
    kind: MapKind,
    norm_rate: f64,
}

pub(crate) type Mat = [[i64; 2]; 2];

pub(crate) fn mat_mul_wrapping(a: &[[u64; 2]; 2], b: &[[u64; 2]; 2]) -> [[u64; 2]; 2] {
    let mut out = [[0u64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0].wrapping_mul(b[0][j]).wrapping_add(a[i][1].wrapping_mul(b[1][j]));
        }
    }
    out
}

/// `M^t mod 2^64`.
pub(crate) fn mat_pow_wrapping(m: &Mat, mut t: u64) -> [[u64; 2]; 2] {
    let mut base = [[m[0][0] as u64, m[0][1] as u64], [m[1][0] as u64, m[1][1] as u64]];
    let mut acc = [[1u64, 0], [0, 1]];
    while t > 0 {
        if t & 1 == 1 {
            acc = mat_mul_wrapping(&acc, &base);
        }
        base = mat_mul_wrapping(&base, &base);
        t >>= 1;
    }
    acc
}

impl MapSystem {
    pub fn toral(matrix: Mat) -> Result<Self> {
        let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
        let tr = (matrix[0][0] + matrix[1][1]) as f64;
        if det.abs() != 1 {
            return Err(Error::InvalidParameter(format!("toral matrix must have |det| = 1, got {det}")));
        }
        let hyperbolic = if det == 1 { tr.abs() > 2.0 } else { tr != 0.0 };
        if !hyperbolic {
            return Err(Error::InvalidParameter(format!("matrix {matrix:?} has an eigenvalue on the unit circle")));
        }
        let rho = (tr.abs() + (tr * tr - 4.0 * det as f64).sqrt()) / 2.0;
        Ok(Self {
            kind: MapKind::Toral(matrix),
            norm_rate: rho,
        })
    }

    /// The cat map `[[2, 1], [1, 1]]`.
    pub fn cat() -> Self {
        Self::toral([[2, 1], [1, 1]]).expect("cat map is hyperbolic")
    }

    pub fn doubling() -> Self {
        Self {
            kind: MapKind::Doubling,
            norm_rate: 2.0,
        }
    }

    pub fn rotation(shift: &[f64], norm_rate: f64) -> Result<Self> {
        if shift.is_empty() || shift.len() > 2 || shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad rotation shift {shift:?}")));
        }
        if !(norm_rate > 1.0) {
            return Err(Error::InvalidParameter(format!("norm rate must exceed 1, got {norm_rate}")));
        }
        Ok(Self {
            kind: MapKind::Rotation(shift.iter().map(|s| s.rem_euclid(1.0)).collect()),
            norm_rate,
        })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MapKind::Toral(_) => 2,
            MapKind::Doubling => 1,
            MapKind::Rotation(s) => s.len(),
        }
    }

    /// `ρ` in `‖f_s f_t⁻¹‖ = |s − t| log ρ`.
    pub fn norm_rate(&self) -> f64 {
        self.norm_rate
    }

    pub fn log_rate(&self) -> f64 {
        self.norm_rate.ln()
    }

    pub fn norm(&self, s: u64, t: u64) -> f64 {
        s.abs_diff(t) as f64 * self.log_rate()
    }

    pub fn is_invertible(&self) -> bool {
        !matches!(self.kind, MapKind::Doubling)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() || x.iter().any(|c| !(0.0..1.0).contains(c)) {
            return Err(Error::InvalidParameter(format!(
                "point {x:?} is not in [0,1)^{}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Index map of `T^t` on grid cells: cell `i` goes to `map[i]`.
    pub fn grid_map(&self, grid: TorusGrid, t: u64) -> Result<Vec<usize>> {
        if grid.dim() != self.dim() {
            return Err(Error::GridMismatch(format!("{}-d map on a {}-d grid", self.dim(), grid.dim())));
        }
        let n = grid.n();
        let mask = n as u64 - 1;
        match &self.kind {
            MapKind::Toral(m) => {
                let p = mat_pow_wrapping(m, t);
                Ok((0..grid.len())
                    .map(|idx| {
                        let [a, b] = grid.unflatten(idx).map(|v| v as u64);
                        let x = p[0][0].wrapping_mul(a).wrapping_add(p[0][1].wrapping_mul(b)) & mask;
                        let y = p[1][0].wrapping_mul(a).wrapping_add(p[1][1].wrapping_mul(b)) & mask;
                        grid.flatten([x as usize, y as usize])
                    })
                    .collect())
            }
            MapKind::Doubling => {
                let factor = if t >= 64 { 0 } else { 1u64 << t };
                Ok((0..n as u64).map(|i| (factor.wrapping_mul(i) & mask) as usize).collect())
            }
            MapKind::Rotation(shift) => {
                let mut steps = [0u64; 2];
                for (k, &s) in shift.iter().enumerate() {
                    let cells = s * n as f64;
                    if (cells - cells.round()).abs() > 1e-9 {
                        return Err(Error::IncompatibleGrid {
                            n,
                            reason: format!("rotation shift {s} is not a multiple of 1/{n}"),
                        });
                    }
                    steps[k] = (cells.round() as u64 % n as u64).wrapping_mul(t) & mask;
                }
                Ok((0..grid.len())
                    .map(|idx| {
                        let [a, b] = grid.unflatten(idx);
                        let a = (a as u64 + steps[0]) & mask;
                        let b = if grid.dim() == 2 { (b as u64 + steps[1]) & mask } else { 0 };
                        grid.flatten([a as usize, b as usize])
                    })
                    .collect())
            }
        }
    }

    /// `f ∘ T^t` on the grid, by exact index arithmetic.
    pub fn pull(&self, f: &GridFunction, t: u64) -> Result<GridFunction> {
        let map = self.grid_map(f.grid(), t)?;
        let v = f.values();
        GridFunction::new(f.grid(), map.iter().map(|&j| v[j]).collect())
    }

    /// `T^{−t} A = {x : T^t x ∈ A}`.
    pub fn preimage(&self, a: &IndicatorMask, t: u64) -> Result<IndicatorMask> {
        let map = self.grid_map(a.grid(), t)?;
        IndicatorMask::new(a.grid(), map.iter().map(|&j| a.bits()[j]).collect())
    }
}

/// `T^t x`. Toral maps run exactly on the nearest multiple of `2⁻⁶⁴`;
/// the doubling map in double precision up to [`DOUBLING_FLOAT_CAP`] steps.
pub fn step(system: &MapSystem, x: &[f64], t: u64) -> Result<Vec<f64>> {
    system.check_point(x)?;
    match system.kind() {
        MapKind::Toral(_) | MapKind::Rotation(_) => {
            let mut orbit = Orbit::new(system, StartPoint::Real([x[0], *x.get(1).unwrap_or(&0.0)]))?;
            orbit.advance_by(t)?;
            Ok(orbit.point()[..system.dim()].to_vec())
        }
        MapKind::Doubling => {
            if t > DOUBLING_FLOAT_CAP {
                return Err(Error::PrecisionCap {
                    requested: t,
                    cap: DOUBLING_FLOAT_CAP,
                });
            }
            let mut y = x[0];
            for _ in 0..t {
                y = (2.0 * y).fract();
            }
            Ok(vec![y])
        }
    }
}

/// `⟨φ ∘ T^t, ψ⟩ − ∫φ ∫ψ` with `φ ∘ T^t` pulled exactly through the grid.
pub fn correlation(system: &MapSystem, phi: &GridFunction, psi: &GridFunction, t: u64) -> Result<f64> {
    let pulled = system.pull(phi, t)?;
    Ok(pulled.inner(psi)? - phi.integral() * psi.integral())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matrix_validation() {
        assert!(MapSystem::toral([[1, 1], [0, 1]]).is_err());
        assert!(MapSystem::toral([[2, 0], [0, 1]]).is_err());
        assert!(MapSystem::toral([[0, 1], [1, 0]]).is_err());
        assert!(MapSystem::toral([[1, 1], [1, 0]]).is_ok());
        let cat = MapSystem::cat();
        assert!((cat.norm_rate() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert_eq!(cat.norm(3, 7), cat.norm(7, 3));
        assert_eq!(cat.norm(5, 5), 0.0);
    }

    #[test]
    fn step_examples() {
        let cat = MapSystem::cat();
        assert_eq!(step(&cat, &[0.0, 0.0], 17).unwrap(), vec![0.0, 0.0]);
        assert_eq!(step(&cat, &[0.3, 0.6], 0).unwrap(), vec![0.3, 0.6]);
        let d = MapSystem::doubling();
        let y = step(&d, &[1.0 / 3.0], 2).unwrap()[0];
        assert!((y - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(step(&d, &[0.1], 61), Err(Error::PrecisionCap { .. })));
        assert!(step(&d, &[1.2], 1).is_err());
    }

    #[test]
    fn toral_step_is_exact_on_dyadics() {
        let cat = MapSystem::cat();
        let y = step(&cat, &[0.5, 0.25], 1).unwrap();
        assert_eq!(y, vec![0.25, 0.75]);
        let y = step(&cat, &[0.125, 0.375], 3).unwrap();
        // M^3 = [[13, 8], [8, 5]].
        let expect = [(13.0 * 0.125 + 8.0 * 0.375f64).fract(), (8.0 * 0.125 + 5.0 * 0.375f64).fract()];
        assert_eq!(y, expect.to_vec());
    }

    #[test]
    fn character_pushforward() {
        let g = TorusGrid::new(2, 64).unwrap();
        let cat = MapSystem::cat();
        let e = |k0: f64, k1: f64| GridFunction::from_fn(g, move |[x, y]| (2.0 * PI * (k0 * x + k1 * y)).cos()).unwrap();
        let pulled = cat.pull(&e(1.0, 0.0), 1).unwrap();
        let target = e(2.0, 1.0);
        for (a, b) in pulled.values().iter().zip(target.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(correlation(&cat, &e(1.0, 0.0), &e(1.0, 0.0), 1).unwrap().abs() < 1e-12);
        assert!((correlation(&cat, &e(1.0, 0.0), &e(2.0, 1.0), 1).unwrap() - 0.5).abs() < 1e-12);
        let c = GridFunction::constant(g, 3.0);
        assert!(correlation(&cat, &c, &e(1.0, 2.0), 4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn doubling_character_decays_exactly() {
        let g = TorusGrid::new(1, 256).unwrap();
        let e1 = GridFunction::from_fn(g, |[x, _]| (2.0 * PI * x).cos()).unwrap();
        let d = MapSystem::doubling();
        for t in 1..6 {
            assert!(correlation(&d, &e1, &e1, t).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn irrational_rotation_is_incompatible() {
        let g = TorusGrid::new(2, 64).unwrap();
        let r = MapSystem::rotation(&[2f64.sqrt() - 1.0, 0.5], std::f64::consts::E).unwrap();
        assert!(matches!(r.grid_map(g, 1), Err(Error::IncompatibleGrid { .. })));
        let r = MapSystem::rotation(&[0.25, 3.0 / 64.0], std::f64::consts::E).unwrap();
        let m = r.grid_map(g, 2).unwrap();
        assert_eq!(m[0], g.flatten([32, 6]));
    }
}

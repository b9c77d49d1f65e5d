use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mat_pow_wrapping, MapKind, MapSystem, DOUBLING_FLOAT_CAP};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, TorusGrid};
use crate::tail::LogDistance;

/// `3^39`, the denominator of exact doubling-map orbits. `2` is a primitive
/// root modulo every power of `3`, so starts coprime to `3` have period
/// `2·3^38`.
pub const TRIADIC_MODULUS: u64 = 4_052_555_153_018_976_267;

const TWO_64: f64 = 18_446_744_073_709_551_616.0;

/// Starting point of an orbit in one of its exact representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartPoint {
    Real([f64; 2]),
    /// Coordinates `p / 2^64`.
    Dyadic([u64; 2]),
    /// `p / 3^39` on `T¹`.
    Triadic(u64),
}

#[derive(Debug, Clone, Copy)]
enum State {
    Real([f64; 2]),
    Dyadic([u64; 2]),
    Triadic(u64),
}

/// A forward orbit `x, Tx, T²x, …`.
#[derive(Debug, Clone)]
pub struct Orbit<'a> {
    system: &'a MapSystem,
    state: State,
    time: u64,
    matrix: [[u64; 2]; 2],
}

fn to_dyadic(x: f64) -> u64 {
    let scaled = (x * TWO_64).round();
    if scaled >= TWO_64 {
        0
    } else {
        scaled as u64
    }
}

impl MapSystem {
    /// Counter-based start point: stream `index` of the generator seeded by
    /// `seed`. Doubling-map starts are triadic rationals coprime to 3, never
    /// dyadic.
    pub fn start_point(&self, seed: u64, index: u64) -> StartPoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        match self.kind() {
            MapKind::Toral(_) => StartPoint::Dyadic([rng.gen(), rng.gen()]),
            MapKind::Doubling => loop {
                let p = rng.gen_range(1..TRIADIC_MODULUS);
                if p % 3 != 0 {
                    break StartPoint::Triadic(p);
                }
            },
            MapKind::Rotation(_) => StartPoint::Real([rng.gen(), if self.dim() == 2 { rng.gen() } else { 0.0 }]),
        }
    }
}

impl<'a> Orbit<'a> {
    pub fn new(system: &'a MapSystem, start: StartPoint) -> Result<Self> {
        let state = match (system.kind(), start) {
            (MapKind::Toral(_), StartPoint::Real(x)) => State::Dyadic([to_dyadic(x[0]), to_dyadic(x[1])]),
            (MapKind::Toral(_), StartPoint::Dyadic(p)) => State::Dyadic(p),
            (MapKind::Doubling, StartPoint::Triadic(p)) if p < TRIADIC_MODULUS => State::Triadic(p),
            (MapKind::Doubling | MapKind::Rotation(_), StartPoint::Real(x)) => State::Real(x),
            (_, s) => {
                return Err(Error::InvalidParameter(format!("start point {s:?} does not fit this map")));
            }
        };
        let matrix = match system.kind() {
            MapKind::Toral(m) => mat_pow_wrapping(m, 1),
            _ => [[1, 0], [0, 1]],
        };
        Ok(Self {
            system,
            state,
            time: 0,
            matrix,
        })
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Current point; the second coordinate is `0` in 1-D.
    pub fn point(&self) -> [f64; 2] {
        match self.state {
            State::Real(x) => x,
            State::Dyadic(p) => [p[0] as f64 / TWO_64, p[1] as f64 / TWO_64],
            State::Triadic(p) => [p as f64 / TRIADIC_MODULUS as f64, 0.0],
        }
    }

    /// Index of the grid cell nearest to the current point.
    pub fn cell(&self, grid: TorusGrid) -> usize {
        let n = grid.n();
        match self.state {
            State::Dyadic(p) => {
                let k = n.trailing_zeros();
                let mask = n as u64 - 1;
                let axis = |v: u64| ((((v >> (63 - k)) + 1) >> 1) & mask) as usize;
                grid.flatten([axis(p[0]), axis(p[1])])
            }
            State::Triadic(p) => {
                let m = TRIADIC_MODULUS as u128;
                ((((p as u128) * (n as u128) * 2 + m) / (2 * m)) % n as u128) as usize
            }
            State::Real(x) => grid.nearest_index(&x[..grid.dim()]),
        }
    }

    pub fn advance(&mut self) -> Result<()> {
        self.state = match self.state {
            State::Dyadic(p) => {
                let m = &self.matrix;
                State::Dyadic([
                    m[0][0].wrapping_mul(p[0]).wrapping_add(m[0][1].wrapping_mul(p[1])),
                    m[1][0].wrapping_mul(p[0]).wrapping_add(m[1][1].wrapping_mul(p[1])),
                ])
            }
            State::Triadic(p) => {
                let q = 2 * p;
                State::Triadic(if q >= TRIADIC_MODULUS { q - TRIADIC_MODULUS } else { q })
            }
            State::Real(x) => match self.system.kind() {
                MapKind::Doubling => {
                    if self.time >= DOUBLING_FLOAT_CAP {
                        return Err(Error::PrecisionCap {
                            requested: self.time + 1,
                            cap: DOUBLING_FLOAT_CAP,
                        });
                    }
                    State::Real([(2.0 * x[0]).fract(), 0.0])
                }
                MapKind::Rotation(shift) => {
                    let mut y = x;
                    for (k, s) in shift.iter().enumerate() {
                        y[k] = (x[k] + s).fract();
                    }
                    State::Real(y)
                }
                MapKind::Toral(_) => unreachable!("toral orbits are dyadic"),
            },
        };
        self.time += 1;
        Ok(())
    }

    /// Jumps `t` steps ahead; toral maps use `M^t` directly.
    pub fn advance_by(&mut self, t: u64) -> Result<()> {
        match (self.system.kind(), self.state) {
            (MapKind::Toral(m), State::Dyadic(p)) => {
                let q = mat_pow_wrapping(m, t);
                self.state = State::Dyadic([
                    q[0][0].wrapping_mul(p[0]).wrapping_add(q[0][1].wrapping_mul(p[1])),
                    q[1][0].wrapping_mul(p[0]).wrapping_add(q[1][1].wrapping_mul(p[1])),
                ]);
                self.time += t;
                Ok(())
            }
            (MapKind::Rotation(shift), State::Real(x)) => {
                let mut y = x;
                for (k, s) in shift.iter().enumerate() {
                    y[k] = (x[k] + (t as f64 * s).fract()).fract();
                }
                self.state = State::Real(y);
                self.time += t;
                Ok(())
            }
            _ => (0..t).try_for_each(|_| self.advance()),
        }
    }
}

/// A function that can be read off along an orbit.
pub trait Observable: Sync {
    fn dim(&self) -> usize;
    fn observe(&self, orbit: &Orbit<'_>) -> f64;
}

impl Observable for GridFunction {
    fn dim(&self) -> usize {
        self.grid().dim()
    }

    /// Nearest-cell lookup.
    fn observe(&self, orbit: &Orbit<'_>) -> f64 {
        self.values()[orbit.cell(self.grid())]
    }
}

impl Observable for LogDistance {
    fn dim(&self) -> usize {
        LogDistance::dim(self)
    }

    fn observe(&self, orbit: &Orbit<'_>) -> f64 {
        self.eval(&orbit.point())
    }
}

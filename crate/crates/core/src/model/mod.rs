//! Model parameters, density layouts, torus geometry and the shared RNG.

mod geometry;
mod layout;
mod rng;

pub use geometry::{boundary_distance, torus_distance, torus_distance_sq, unit_ball_volume, Point};
pub use layout::{diagonal_layout, DensityLayout};
pub use rng::{SpaRng, RNG_NAME};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SpaError};
use crate::scalar::Scalar;

/// Scalars driving the process.
///
/// `a1` is the sphere growth per in-link, `a2` the base sphere volume, `p` the
/// link probability, `m` the dimension and `n` the number of steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub a1: T,
    pub a2: T,
    pub p: T,
    pub m: usize,
    pub n: usize,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(a1: T, a2: T, p: T, m: usize, n: usize) -> Result<Self> {
        let params = Self { a1, a2, p, m, n };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > T::zero() && self.p < T::one()) {
            return invalid(format!("p must lie in (0,1), got {}", self.p));
        }
        if !(self.a1 > T::zero()) {
            return invalid(format!("a1 must be positive, got {}", self.a1));
        }
        if !(self.a2 > T::zero()) {
            return invalid(format!("a2 must be positive, got {}", self.a2));
        }
        if self.m == 0 {
            return invalid("dimension m must be at least 1");
        }
        if self.n == 0 {
            return invalid("n must be at least 1");
        }
        if self.n > u32::MAX as usize {
            return invalid("n exceeds the u32 node id range");
        }
        Ok(())
    }

    /// Joint check against a layout: dimensions agree and `p·a1·max ρ < 1`.
    pub fn validate_with(&self, layout: &DensityLayout<T>) -> Result<()> {
        self.validate()?;
        if layout.m() != self.m {
            return Err(SpaError::Config(format!("layout dimension {} does not match m = {}", layout.m(), self.m)));
        }
        let load = self.p * self.a1 * layout.max_density();
        if !(load < T::one()) {
            return Err(SpaError::Config(format!("p·a1·max ρ = {load} must be < 1 (supercritical density)")));
        }
        Ok(())
    }

    /// `p·ρ·a1`, the exponent governing in-degree growth in a region of
    /// density `rho`.
    #[inline]
    pub fn growth_exponent(&self, rho: T) -> T {
        self.p * rho * self.a1
    }

    /// Unit-ball volume `c_m` for this dimension.
    #[inline]
    pub fn c_m(&self) -> T {
        unit_ball_volume(self.m)
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams { a1: U::of(self.a1.f64()), a2: U::of(self.a2.f64()), p: U::of(self.p.f64()), m: self.m, n: self.n }
    }
}

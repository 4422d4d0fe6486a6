use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Sphere-of-influence arithmetic with the unit-ball constant hoisted.
///
/// Both engines test membership through [`Sphere::covers`], which is what
/// makes their outputs bit-identical.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sphere<T> {
    a1: T,
    a2: T,
    m: usize,
    c_m: T,
    two_over_m: T,
}

impl<T: Scalar> Sphere<T> {
    pub(crate) fn new(params: &ModelParams<T>) -> Self {
        Self {
            a1: params.a1,
            a2: params.a2,
            m: params.m,
            c_m: params.c_m(),
            two_over_m: T::of(2.0) / T::of_usize(params.m),
        }
    }

    /// Uncapped volume `(a1·deg + a2) / t`.
    #[inline]
    pub(crate) fn raw_volume(&self, in_deg: u32, t: T) -> T {
        (self.a1 * T::of_usize(in_deg as usize) + self.a2) / t
    }

    /// Squared radius of a ball with volume `vol < 1`.
    #[inline]
    pub(crate) fn radius_sq(&self, vol: T) -> T {
        let base = vol / self.c_m;
        match self.m {
            1 => base * base,
            2 => base,
            _ => base.powf(self.two_over_m),
        }
    }

    /// Whether a node with in-degree `in_deg` at time `t` covers a point at
    /// squared torus distance `dist_sq`. A capped sphere is the whole torus.
    #[inline]
    pub(crate) fn covers(&self, in_deg: u32, t: T, dist_sq: T) -> bool {
        let vol = self.raw_volume(in_deg, t);
        vol >= T::one() || dist_sq <= self.radius_sq(vol)
    }

    /// `Some(r²)` for an uncapped sphere, `None` when it fills the torus.
    #[inline]
    pub(crate) fn radius_sq_at(&self, in_deg: u32, t: T) -> Option<T> {
        let vol = self.raw_volume(in_deg, t);
        if vol >= T::one() {
            None
        } else {
            Some(self.radius_sq(vol))
        }
    }
}

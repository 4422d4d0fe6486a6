use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::DensityLayout;

/// A position on the unit torus `[0,1)^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T> {
    coords: Vec<T>,
}

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("a point needs at least one coordinate");
        }
        if let Some(bad) = coords.iter().find(|c| !(**c >= T::zero() && **c < T::one())) {
            return invalid(format!("coordinate {bad} outside [0,1)"));
        }
        Ok(Self { coords })
    }

    /// Wraps arbitrary reals onto the torus.
    pub fn wrapped(coords: impl IntoIterator<Item = T>) -> Self {
        let coords = coords
            .into_iter()
            .map(|c| {
                let w = c - c.floor();
                // `c - floor(c)` can round up to exactly 1 for tiny negatives.
                if w >= T::one() {
                    T::zero()
                } else {
                    w
                }
            })
            .collect();
        Self { coords }
    }

    pub(crate) fn from_raw(coords: Vec<T>) -> Self {
        Self { coords }
    }

    #[inline]
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Squared torus distance between coordinate slices of equal length.
#[inline]
pub fn torus_distance_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = (x - y).abs();
        let d = d.min(T::one() - d);
        acc = acc + d * d;
    }
    acc
}

/// Euclidean-derived torus metric: `sqrt(Σ min(|a_i-b_i|, 1-|a_i-b_i|)^2)`.
pub fn torus_distance<T: Scalar>(a: &Point<T>, b: &Point<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return invalid(format!("dimension mismatch: {} vs {}", a.dim(), b.dim()));
    }
    Ok(torus_distance_sq(a.coords(), b.coords()).sqrt())
}

/// Volume `c_m` of the Euclidean unit ball in `m` dimensions.
///
/// Uses the recurrence `c_m = c_{m-2} · 2π / m` with `c_0 = 1`, `c_1 = 2`,
/// which equals `π^{m/2} / Γ(m/2 + 1)`.
pub fn unit_ball_volume<T: Scalar>(m: usize) -> T {
    let two_pi = T::PI() + T::PI();
    let mut c = if m.is_multiple_of(2) { T::one() } else { T::of(2.0) };
    let mut d = if m.is_multiple_of(2) { 2 } else { 3 };
    while d <= m {
        c = c * two_pi / T::of_usize(d);
        d += 2;
    }
    c
}

/// Distance `δ` from a point to the boundary of its grid cell: the minimum
/// over axes of the gap to the nearest multiple of `1/k`.
///
/// For `k = 1` this measures the gap to the (otherwise seamless) torus seam.
pub fn boundary_distance<T: Scalar>(pt: &Point<T>, layout: &DensityLayout<T>) -> T {
    let k = T::of_usize(layout.k());
    let width = T::one() / k;
    pt.coords()
        .iter()
        .map(|&x| {
            let j = layout.axis_cell(x);
            let lo = x - T::of_usize(j) / k;
            let lo = lo.max(T::zero());
            lo.min((width - lo).max(T::zero()))
        })
        .fold(T::infinity(), T::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn pt(c: &[f64]) -> Point<f64> {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn wraparound_distance() {
        let d = torus_distance(&pt(&[0.1, 0.1]), &pt(&[0.9, 0.9])).unwrap();
        assert!(close(d, 0.08f64.sqrt(), 1e-15));
        assert_eq!(torus_distance(&pt(&[0.3, 0.4]), &pt(&[0.3, 0.4])).unwrap(), 0.0);
        let d = torus_distance(&pt(&[0.0, 0.0]), &pt(&[0.5, 0.5])).unwrap();
        assert!(close(d, 0.5f64.sqrt(), 1e-15));
    }

    #[test]
    fn dimension_mismatch_is_invalid() {
        assert!(torus_distance(&pt(&[0.1]), &pt(&[0.1, 0.2])).is_err());
    }

    #[test]
    fn point_rejects_out_of_range() {
        assert!(Point::new(vec![1.0, 0.5]).is_err());
        assert!(Point::new(vec![-0.1]).is_err());
        assert!(Point::<f64>::new(vec![]).is_err());
        let w = Point::wrapped([1.25, -0.25, -1e-20]);
        assert_eq!(w.coords()[0], 0.25);
        assert_eq!(w.coords()[1], 0.75);
        assert!(w.coords()[2] < 1.0);
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume::<f64>(1), 2.0);
        assert!(close(unit_ball_volume::<f64>(2), std::f64::consts::PI, 1e-15));
        assert!(close(unit_ball_volume::<f64>(3), 4.0 * std::f64::consts::PI / 3.0, 1e-14));
        // π^2 / 2
        assert!(close(unit_ball_volume::<f64>(4), std::f64::consts::PI.powi(2) / 2.0, 1e-14));
        assert!(close(unit_ball_volume::<f32>(2) as f64, std::f64::consts::PI, 1e-6));
    }

    #[test]
    fn ball_volume_monte_carlo_m3() {
        // Fraction of the cube [-1,1]^3 inside the unit ball, times 8.
        let mut rng = crate::model::SpaRng::new(11);
        let trials = 400_000;
        let mut inside = 0usize;
        for _ in 0..trials {
            let s: f64 = (0..3).map(|_| (2.0 * rng.uniform() - 1.0).powi(2)).sum();
            if s <= 1.0 {
                inside += 1;
            }
        }
        let estimate = 8.0 * inside as f64 / trials as f64;
        // binomial sd of the estimate is about 0.0064
        assert!(close(estimate, unit_ball_volume::<f64>(3), 0.03), "{estimate}");
        assert!(close(unit_ball_volume::<f64>(3), 4.18879, 1e-5));
    }

    #[test]
    fn boundary_distances() {
        let layout = DensityLayout::uniform(4, 2).unwrap();
        assert!(close(boundary_distance(&pt(&[0.125, 0.375]), &layout), 0.125, 1e-15));
        assert!(close(boundary_distance(&pt(&[0.26, 0.375]), &layout), 0.01, 1e-12));
        assert_eq!(boundary_distance(&pt(&[0.25, 0.4]), &layout), 0.0);
        assert_eq!(boundary_distance(&pt(&[0.0, 0.4]), &layout), 0.0);
    }
}

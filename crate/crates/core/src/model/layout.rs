use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SpaError};
use crate::scalar::Scalar;

use super::Point;

/// Piecewise-constant arrival density over a `k^m` grid of cells.
///
/// Cells are half-open boxes `Π [j_a/k, (j_a+1)/k)` indexed row-major with
/// axis 0 most significant. Densities average to one, so the arrival
/// probability of cell `ℓ` is `q_ℓ = ρ_ℓ / k^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutFile<T>", into = "LayoutFile<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DensityLayout<T> {
    k: usize,
    m: usize,
    densities: Vec<T>,
}

/// On-disk shape: `{"k": int, "m": int, "densities": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutFile<T> {
    pub k: usize,
    pub m: usize,
    pub densities: Vec<T>,
}

impl<T: Scalar> TryFrom<LayoutFile<T>> for DensityLayout<T> {
    type Error = SpaError;
    fn try_from(f: LayoutFile<T>) -> Result<Self> {
        DensityLayout::new(f.k, f.m, f.densities)
    }
}

impl<T: Scalar> From<DensityLayout<T>> for LayoutFile<T> {
    fn from(l: DensityLayout<T>) -> Self {
        LayoutFile { k: l.k, m: l.m, densities: l.densities }
    }
}

impl<T: Scalar> DensityLayout<T> {
    pub fn new(k: usize, m: usize, densities: Vec<T>) -> Result<Self> {
        if k == 0 || m == 0 {
            return invalid("layout needs k >= 1 and m >= 1");
        }
        let cells = k.checked_pow(m as u32).ok_or_else(|| SpaError::InvalidArgument("k^m overflows".into()))?;
        if densities.len() != cells {
            return invalid(format!("expected {cells} densities for k={k}, m={m}, got {}", densities.len()));
        }
        if let Some(bad) = densities.iter().find(|r| !(**r >= T::zero()) || !r.is_finite()) {
            return invalid(format!("density {bad} is not a finite non-negative number"));
        }
        let mean = densities.iter().copied().sum::<T>() / T::of_usize(cells);
        if (mean - T::one()).abs() > T::tolerance(cells) {
            return invalid(format!("densities must average to 1, mean is {mean}"));
        }
        Ok(Self { k, m, densities })
    }

    pub fn uniform(k: usize, m: usize) -> Result<Self> {
        let cells = k.pow(m as u32);
        Self::new(k, m, vec![T::one(); cells])
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.densities.len()
    }

    #[inline]
    pub fn densities(&self) -> &[T] {
        &self.densities
    }

    #[inline]
    pub fn density(&self, cell: usize) -> T {
        self.densities[cell]
    }

    /// Arrival probability `q_ℓ = ρ_ℓ k^{-m}`.
    #[inline]
    pub fn probability(&self, cell: usize) -> T {
        self.densities[cell] / T::of_usize(self.cells())
    }

    pub fn max_density(&self) -> T {
        self.densities.iter().copied().fold(T::zero(), T::max)
    }

    pub fn min_density(&self) -> T {
        self.densities.iter().copied().fold(T::infinity(), T::min)
    }

    /// Cell index along one axis; grid-line coordinates go to the higher cell.
    #[inline]
    pub fn axis_cell(&self, x: T) -> usize {
        let j = (x * T::of_usize(self.k)).floor().to_usize().unwrap_or(0);
        j.min(self.k - 1)
    }

    /// Row-major index of the cell containing `pt`.
    pub fn cell_of(&self, pt: &Point<T>) -> usize {
        self.cell_of_coords(pt.coords())
    }

    #[inline]
    pub fn cell_of_coords(&self, coords: &[T]) -> usize {
        coords.iter().fold(0, |acc, &x| acc * self.k + self.axis_cell(x))
    }

    /// Per-axis cell coordinates of a row-major index.
    pub fn cell_coords(&self, mut cell: usize) -> Vec<usize> {
        let mut out = vec![0; self.m];
        for slot in out.iter_mut().rev() {
            *slot = cell % self.k;
            cell /= self.k;
        }
        out
    }

    /// Cells sharing the largest density.
    pub fn densest_cells(&self) -> Vec<usize> {
        let max = self.max_density();
        (0..self.cells()).filter(|&c| self.densities[c] == max).collect()
    }

    /// Cells sharing the smallest density.
    pub fn sparsest_cells(&self) -> Vec<usize> {
        let min = self.min_density();
        (0..self.cells()).filter(|&c| self.densities[c] == min).collect()
    }

    /// Groups of cells with identical density, densest group first.
    pub fn density_classes(&self) -> Vec<(T, Vec<usize>)> {
        let mut classes: Vec<(T, Vec<usize>)> = Vec::new();
        for (c, &rho) in self.densities.iter().enumerate() {
            match classes.iter_mut().find(|(r, _)| *r == rho) {
                Some((_, cells)) => cells.push(c),
                None => classes.push((rho, vec![c])),
            }
        }
        classes.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite densities"));
        classes
    }

    pub fn cast<U: Scalar>(&self) -> Result<DensityLayout<U>> {
        DensityLayout::new(self.k, self.m, self.densities.iter().map(|r| U::of(r.f64())).collect())
    }
}

/// The `m = 2`, `k = 4` layout whose four diagonal cells carry `rho_d` and
/// whose other twelve cells carry `4/3 - rho_d/3`.
pub fn diagonal_layout<T: Scalar>(rho_d: T) -> Result<DensityLayout<T>> {
    if !(rho_d > T::zero() && rho_d <= T::of(4.0)) {
        return invalid(format!("rho_d must lie in (0, 4], got {rho_d}"));
    }
    let three = T::of(3.0);
    let rho_s = (T::of(4.0) - rho_d) / three;
    let rho_s = rho_s.max(T::zero());
    let densities = (0..16).map(|c| if c / 4 == c % 4 { rho_d } else { rho_s }).collect();
    DensityLayout::new(4, 2, densities)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point<f64> {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn cell_indexing_row_major() {
        let l = DensityLayout::<f64>::uniform(4, 2).unwrap();
        assert_eq!(l.cell_of(&pt(&[0.0, 0.0])), 0);
        assert_eq!(l.cell_of(&pt(&[0.26, 0.9])), 7);
        let just_below = 1.0 - f64::EPSILON / 2.0;
        assert_eq!(l.cell_of(&pt(&[just_below, just_below])), 15);
        assert_eq!(l.cell_of(&pt(&[0.25, 0.5])), 4 + 2);
        assert_eq!(l.cell_coords(7), vec![1, 3]);
    }

    #[test]
    fn diagonal_values() {
        let l = diagonal_layout(1.6f64).unwrap();
        assert!((l.density(1) - 0.8).abs() < 1e-15);
        assert_eq!(l.density(0), 1.6);
        assert_eq!(l.density(5), 1.6);
        assert_eq!(l.densest_cells(), vec![0, 5, 10, 15]);
        let dense_mass: f64 = l.densest_cells().iter().map(|&c| l.probability(c)).sum();
        assert!((dense_mass - 0.4).abs() < 1e-15);

        let u = diagonal_layout(1.0f64).unwrap();
        assert!(u.densities().iter().all(|&r| (r - 1.0).abs() < 1e-15));

        let l = diagonal_layout(1.2f64).unwrap();
        assert!((l.density(1) - 0.933333333333).abs() < 1e-9);

        assert!(diagonal_layout(0.0f64).is_err());
        assert!(diagonal_layout(4.5f64).is_err());
        assert!(diagonal_layout(4.0f64).is_ok());
    }

    #[test]
    fn density_classes_sorted() {
        let l = diagonal_layout(1.6f64).unwrap();
        let classes = l.density_classes();
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].1, vec![0, 5, 10, 15]);
        assert_eq!(classes[1].1.len(), 12);
    }

    #[test]
    fn layout_validation() {
        assert!(DensityLayout::new(2, 1, vec![0.5, 1.5]).is_ok());
        assert!(DensityLayout::new(2, 1, vec![0.5, 1.0]).is_err());
        assert!(DensityLayout::new(2, 1, vec![-0.5, 2.5]).is_err());
        assert!(DensityLayout::new(2, 2, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn json_shape() {
        let l = DensityLayout::new(2, 1, vec![0.5, 1.5]).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(s, r#"{"k":2,"m":1,"densities":[0.5,1.5]}"#);
        let back: DensityLayout<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
        assert!(serde_json::from_str::<DensityLayout<f64>>(r#"{"k":2,"m":1,"densities":[0.5,1.0]}"#).is_err());
    }
}

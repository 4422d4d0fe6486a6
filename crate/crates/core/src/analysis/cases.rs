use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

use super::PairRecord;

/// Finite stand-ins for the asymptotic `ω(n)` and `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig<T> {
    pub omega: T,
    pub eps: T,
}

impl<T: Scalar> CaseConfig<T> {
    pub fn new(omega: T, eps: T) -> Result<Self> {
        if !(omega >= T::one()) {
            return invalid(format!("omega must be >= 1, got {omega}"));
        }
        if !(eps > T::zero() && eps < T::one()) {
            return invalid(format!("eps must lie in (0,1), got {eps}"));
        }
        Ok(Self { omega, eps })
    }
}

impl<T: Scalar> Default for CaseConfig<T> {
    fn default() -> Self {
        Self { omega: T::of(3.0), eps: T::of(0.1) }
    }
}

/// Common-neighbour regime of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Far apart: `O(ω log n)` common neighbours (label `1`).
    Distant,
    /// The smaller sphere sits inside the larger: about `p·j` (label `2`).
    Nested,
    /// Between the two: common neighbours follow a power of the distance
    /// (label `3`).
    Scaling,
    Unclassified,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::Distant => "1",
            Case::Nested => "2",
            Case::Scaling => "3",
            Case::Unclassified => "unclassified",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "1" => Case::Distant,
            "2" => Case::Nested,
            "3" => Case::Scaling,
            "unclassified" => Case::Unclassified,
            _ => return None,
        })
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Derived quantities for a pair with final degrees `k >= j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseThresholds<T> {
    /// `T_v = n (ω ln n / j)^{1/(pρa1)}`: when the lower-degree node reaches
    /// `ω ln n` in-links.
    pub t_v: T,
    /// Pairs no farther than this are nested (`r(u,n) - r(v,n)`).
    pub nested_max: T,
    /// Pairs at least this far apart are distant.
    pub distant_min: T,
    /// Boundary constant `c`: endpoints need `δ^m >= c·deg`.
    pub boundary_c: T,
    /// Minimum degree `ω² ln n`.
    pub min_degree: T,
}

pub fn case_thresholds<T: Scalar>(
    k: u32,
    j: u32,
    params: &ModelParams<T>,
    rho: T,
    cfg: &CaseConfig<T>,
) -> Result<CaseThresholds<T>> {
    let x = params.growth_exponent(rho);
    if !(x < T::one()) || !(x > T::zero()) {
        return invalid(format!("p·ρ·a1 = {x} must lie in (0,1)"));
    }
    if j == 0 || k < j {
        return invalid(format!("need k >= j >= 1, got k={k}, j={j}"));
    }
    let n = T::of_usize(params.n);
    let (kf, jf) = (T::of_usize(k as usize), T::of_usize(j as usize));
    let m = T::of_usize(params.m);
    let c_m = params.c_m();
    let w_log = cfg.omega * n.ln();
    let t_v = n * (w_log / jf).powf(T::one() / x);
    let radius = |deg: T| ((params.a1 * deg + params.a2) / (c_m * n)).powf(T::one() / m);
    let nested_max = radius(kf) - radius(jf);
    let distant_min = cfg.eps * (w_log * (kf / jf) / t_v).powf(T::one() / m);
    let boundary_c = (T::one() + cfg.eps) * params.a1 / (c_m * n.powf(x) * t_v.powf(T::one() - x));
    Ok(CaseThresholds { t_v, nested_max, distant_min, boundary_c, min_degree: cfg.omega * cfg.omega * n.ln() })
}

/// Regime of a pair, or [`Case::Unclassified`] when the pair spans two
/// regions, has too small a degree, or an endpoint is too close to its
/// region boundary.
///
/// The nested test runs first; when the two distance thresholds overlap the
/// pair is therefore nested rather than distant.
pub fn classify_pair<T: Scalar>(
    rec: &PairRecord<T>,
    params: &ModelParams<T>,
    rho: T,
    cfg: &CaseConfig<T>,
) -> Result<Case> {
    let x = params.growth_exponent(rho);
    if !(x < T::one()) {
        return invalid(format!("p·ρ·a1 = {x} >= 1 is supercritical"));
    }
    if rec.cell_u != rec.cell_v || rec.j == 0 || rec.k < rec.j {
        return Ok(Case::Unclassified);
    }
    let th = case_thresholds(rec.k, rec.j, params, rho, cfg)?;
    if T::of_usize(rec.j as usize) < th.min_degree {
        return Ok(Case::Unclassified);
    }
    let m = params.m as i32;
    let (kf, jf) = (T::of_usize(rec.k as usize), T::of_usize(rec.j as usize));
    if rec.delta_v.powi(m) < th.boundary_c * jf || rec.delta_u.powi(m) < th.boundary_c * kf {
        return Ok(Case::Unclassified);
    }
    Ok(if rec.d <= th.nested_max {
        Case::Nested
    } else if rec.d >= th.distant_min {
        Case::Distant
    } else {
        Case::Scaling
    })
}

/// Predicted common neighbours in the scaling regime,
/// `C j n^{-α} k^α d^{-mα}` with `α = pρa1/(1-pρa1)` and `C = p a1^α c_m^{-α}`.
pub fn cn_theory_case3<T: Scalar>(k: u32, j: u32, d: T, params: &ModelParams<T>, rho: T) -> Result<T> {
    let x = params.growth_exponent(rho);
    if !(x < T::one() && x > T::zero()) {
        return invalid(format!("p·ρ·a1 = {x} must lie in (0,1)"));
    }
    if !(d > T::zero()) {
        return invalid("distance must be positive; co-located pairs are nested");
    }
    let alpha = x / (T::one() - x);
    let m = T::of_usize(params.m);
    let n = T::of_usize(params.n);
    let ln_c = params.p.ln() + alpha * (params.a1.ln() - params.c_m().ln());
    let ln = ln_c + T::of_usize(j as usize).ln() + alpha * (T::of_usize(k as usize).ln() - n.ln()) - m * alpha * d.ln();
    Ok(ln.exp())
}

//! Geometry reconstruction from link structure.
//!
//! The distance estimator inverts the scaling-regime common-neighbour law:
//!
//! ```text
//! d̂ = (p^γ a1 j^γ k / (n c_m cn^γ))^{1/m},   γ = (1 - pρa1) / (pρa1)
//! ```
//!
//! and the density estimator inverts the regional mean out-degree
//! `pρa2 / (1 - pρa1)` evaluated on the in-neighbours of a node.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{Adjacency, PairRecord};
use crate::error::{invalid, Result, SpaError};
use crate::generator::EvolvingGraph;
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Why a pair was excluded from distance estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// `cn > p·j/2`: probably nested.
    Case2Suspect,
    /// `cn <= 10`: probably distant.
    Case1Suspect,
    /// Neither endpoint has enough in-neighbours for a density estimate.
    DensityUnavailable,
}

impl RejectReason {
    pub fn label(self) -> &'static str {
        match self {
            RejectReason::Case2Suspect => "case2-suspect",
            RejectReason::Case1Suspect => "case1-suspect",
            RejectReason::DensityUnavailable => "density-unavailable",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [RejectReason::Case2Suspect, RejectReason::Case1Suspect, RejectReason::DensityUnavailable]
            .into_iter()
            .find(|r| r.label() == s)
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Pass,
    Reject(RejectReason),
}

/// Cutoffs of the pair filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterRule {
    /// Reject when `cn > nested_fraction · p · j`.
    pub nested_fraction: f64,
    /// Reject when `cn <= max_sparse_cn`.
    pub max_sparse_cn: u32,
}

impl Default for FilterRule {
    fn default() -> Self {
        Self { nested_fraction: 0.5, max_sparse_cn: 10 }
    }
}

impl FilterRule {
    pub fn apply<T: Scalar>(&self, j: u32, cn: u32, p: T) -> FilterDecision {
        if cn as f64 > self.nested_fraction * p.f64() * j as f64 {
            FilterDecision::Reject(RejectReason::Case2Suspect)
        } else if cn <= self.max_sparse_cn {
            FilterDecision::Reject(RejectReason::Case1Suspect)
        } else {
            FilterDecision::Pass
        }
    }
}

/// Default filter: reject `cn > p·j/2`, then `cn <= 10`.
pub fn filter_pair<T: Scalar>(_k: u32, j: u32, cn: u32, p: T) -> FilterDecision {
    FilterRule::default().apply(j, cn, p)
}

/// Distance implied by `cn` common neighbours between nodes of final
/// in-degrees `k >= j` in a region of density `rho`.
pub fn distance_estimate<T: Scalar>(k: u32, j: u32, cn: u32, params: &ModelParams<T>, rho: T) -> Result<T> {
    if cn == 0 {
        return Err(SpaError::UndefinedEstimate("no common neighbours".into()));
    }
    distance_from_cn(k, j, T::of_usize(cn as usize), params, rho)
}

/// [`distance_estimate`] for a real-valued common-neighbour count, the exact
/// inverse of [`cn_theory_case3`](crate::analysis::cn_theory_case3).
pub fn distance_from_cn<T: Scalar>(k: u32, j: u32, cn: T, params: &ModelParams<T>, rho: T) -> Result<T> {
    if !(cn > T::zero()) {
        return Err(SpaError::UndefinedEstimate(format!("common-neighbour count {cn} is not positive")));
    }
    if j == 0 || k < j {
        return invalid(format!("need k >= j >= 1, got k={k}, j={j}"));
    }
    let x = params.growth_exponent(rho);
    if !(x < T::one() && x > T::zero()) {
        return invalid(format!("p·ρ·a1 = {x} must lie in (0,1)"));
    }
    let gamma = (T::one() - x) / x;
    let n = T::of_usize(params.n);
    let (kf, jf) = (T::of_usize(k as usize), T::of_usize(j as usize));
    let ln = gamma * (params.p.ln() + jf.ln() - cn.ln()) + params.a1.ln() + kf.ln() - n.ln() - params.c_m().ln();
    Ok((ln / T::of_usize(params.m)).exp())
}

/// `ρ̂ = m̄ / (p a2 + p a1 m̄)` for a mean out-degree `m̄`. Approaches
/// `1/(p a1)` as `m̄` grows.
pub fn rho_from_mean_outdeg<T: Scalar>(mean_outdeg: T, params: &ModelParams<T>) -> T {
    mean_outdeg / (params.p * params.a2 + params.p * params.a1 * mean_outdeg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate<T> {
    pub id: u32,
    /// Average out-degree of the in-neighbours.
    pub mean_outdeg: T,
    pub rho_hat: T,
}

/// Density around `v` from the out-degrees of its in-neighbours.
pub fn density_estimate<T: Scalar>(
    graph: &EvolvingGraph<T>,
    adj: &Adjacency,
    v: u32,
    min_in_deg: u32,
) -> Result<DensityEstimate<T>> {
    let node = graph.node(v)?;
    if node.in_deg == 0 {
        return Err(SpaError::UndefinedEstimate(format!("node {v} has no in-neighbours")));
    }
    if node.in_deg < min_in_deg {
        return Err(SpaError::BelowThreshold { id: v, in_deg: node.in_deg, min: min_in_deg });
    }
    let nbrs = adj.in_neighbours(v);
    let total: u64 = nbrs.iter().map(|&w| graph.nodes()[w as usize - 1].out_deg as u64).sum();
    let mean_outdeg = T::of(total as f64 / nbrs.len() as f64);
    Ok(DensityEstimate { id: v, mean_outdeg, rho_hat: rho_from_mean_outdeg(mean_outdeg, graph.params()) })
}

/// Density estimates for every node with at least `min_in_deg` in-links.
pub fn estimate_densities<T: Scalar>(
    graph: &EvolvingGraph<T>,
    adj: &Adjacency,
    min_in_deg: u32,
) -> Vec<DensityEstimate<T>> {
    let ids: Vec<u32> = graph.nodes().iter().filter(|v| v.in_deg >= min_in_deg.max(1)).map(|v| v.id).collect();
    ids.par_iter()
        .map(|&v| density_estimate(graph, adj, v, min_in_deg).expect("filtered to qualifying nodes"))
        .collect()
}

/// Which density the distance formula uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceVariant {
    /// `ρ = 1` everywhere.
    Uniform,
    /// The layout density of the chosen endpoint's cell.
    KnownDensity,
    /// `ρ̂` of the chosen endpoint.
    EstimatedDensity,
}

impl DistanceVariant {
    pub const ALL: [DistanceVariant; 3] =
        [DistanceVariant::Uniform, DistanceVariant::KnownDensity, DistanceVariant::EstimatedDensity];

    pub fn label(self) -> &'static str {
        match self {
            DistanceVariant::Uniform => "uniform",
            DistanceVariant::KnownDensity => "known-density",
            DistanceVariant::EstimatedDensity => "estimated-density",
        }
    }
}

impl fmt::Display for DistanceVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DistanceVariant {
    type Err = SpaError;
    fn from_str(s: &str) -> Result<Self> {
        DistanceVariant::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| SpaError::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// Endpoint whose density enters the formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityEndpoint {
    #[default]
    HigherDegree,
    LowerDegree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOptions {
    pub variant: DistanceVariant,
    pub endpoint: DensityEndpoint,
    /// In-degree needed before a node's density is estimated.
    pub min_in_deg: u32,
    pub filter: FilterRule,
}

impl EstimateOptions {
    pub fn new(variant: DistanceVariant) -> Self {
        Self { variant, endpoint: DensityEndpoint::HigherDegree, min_in_deg: 10, filter: FilterRule::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEstimate<T> {
    pub u: u32,
    pub v: u32,
    /// True distance, carried for evaluation.
    pub d: T,
    /// `None` when undefined (no common neighbours or no density).
    pub d_hat: Option<T>,
    pub variant: DistanceVariant,
    pub rho_used: Option<T>,
    pub reason: Option<RejectReason>,
    /// `d̂` exceeds the torus diameter `sqrt(m)/2`; reported unclamped.
    pub beyond_diameter: bool,
}

impl<T> DistanceEstimate<T> {
    pub fn filtered(&self) -> bool {
        self.reason.is_some()
    }
}

/// Applies the filter and the chosen distance variant to every pair, in
/// input order.
pub fn estimate_all_pairs<T: Scalar>(
    graph: &EvolvingGraph<T>,
    adj: &Adjacency,
    pairs: &[PairRecord<T>],
    opts: &EstimateOptions,
) -> Vec<DistanceEstimate<T>> {
    let params = graph.params();
    let layout = graph.layout();

    let densities: HashMap<u32, T> = if opts.variant == DistanceVariant::EstimatedDensity {
        let mut ids: Vec<u32> = pairs.iter().flat_map(|p| [p.u, p.v]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.par_iter()
            .filter_map(|&id| density_estimate(graph, adj, id, opts.min_in_deg).ok().map(|e| (id, e.rho_hat)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    } else {
        HashMap::new()
    };
    let diameter = T::of_usize(params.m).sqrt() / T::of(2.0);

    pairs
        .par_iter()
        .map(|pair| {
            let (first, second) = match opts.endpoint {
                DensityEndpoint::HigherDegree => ((pair.u, pair.cell_u), (pair.v, pair.cell_v)),
                DensityEndpoint::LowerDegree => ((pair.v, pair.cell_v), (pair.u, pair.cell_u)),
            };
            let rho = match opts.variant {
                DistanceVariant::Uniform => Some(T::one()),
                DistanceVariant::KnownDensity => Some(layout.density(first.1)),
                DistanceVariant::EstimatedDensity => {
                    densities.get(&first.0).or_else(|| densities.get(&second.0)).copied()
                }
            };
            let reason = match opts.filter.apply(pair.j, pair.cn, params.p) {
                FilterDecision::Reject(r) => Some(r),
                FilterDecision::Pass if rho.is_none() => Some(RejectReason::DensityUnavailable),
                FilterDecision::Pass => None,
            };
            let d_hat = rho.and_then(|r| distance_estimate(pair.k, pair.j, pair.cn, params, r).ok());
            DistanceEstimate {
                u: pair.u,
                v: pair.v,
                d: pair.d,
                d_hat,
                variant: opts.variant,
                rho_used: rho,
                reason,
                beyond_diameter: d_hat.is_some_and(|x| x > diameter),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{cn_theory_case3, Case};
    use crate::generator::generate;
    use crate::model::{diagonal_layout, DensityLayout};

    fn params(p: f64, n: usize) -> ModelParams<f64> {
        ModelParams::new(0.7, 2.0, p, 2, n).unwrap()
    }

    #[test]
    fn filter_cutoffs() {
        assert_eq!(filter_pair(100, 100, 40, 0.7), FilterDecision::Reject(RejectReason::Case2Suspect));
        assert_eq!(filter_pair(100, 100, 10, 0.7), FilterDecision::Reject(RejectReason::Case1Suspect));
        assert_eq!(filter_pair(100, 100, 20, 0.7), FilterDecision::Pass);
        assert_eq!(filter_pair(100, 100, 35, 0.7), FilterDecision::Pass);
        // p·j/2 = 7 <= 10: every count is rejected by one rule or the other.
        for cn in 0..=20 {
            assert!(matches!(filter_pair(20, 20, cn, 0.7), FilterDecision::Reject(_)));
        }
    }

    #[test]
    fn round_trip_with_theory() {
        let p = params(0.7, 100_000);
        // Independent evaluation of the closed form for a real-valued cn.
        let cn = cn_theory_case3(1000, 200, 0.01, &p, 1.6).unwrap();
        let x = 0.7 * 1.6 * 0.7;
        let gamma = (1.0 - x) / x;
        let c_m = std::f64::consts::PI;
        let d_hat = (0.7f64.powf(gamma) * 0.7 * 200f64.powf(gamma) * 1000.0 / (1e5 * c_m * cn.powf(gamma))).sqrt();
        assert!((d_hat - 0.01).abs() < 1e-9, "{d_hat}");
        let via_api = distance_from_cn(1000, 200, cn, &p, 1.6).unwrap();
        assert!((via_api - 0.01).abs() < 1e-9, "{via_api}");
    }

    #[test]
    fn exact_power_laws() {
        let p = params(0.7, 100_000);
        let x = 0.7 * 1.6 * 0.7;
        let gamma = (1.0 - x) / x;
        let base = distance_estimate(1000, 200, 20, &p, 1.6).unwrap();
        let more_cn = distance_estimate(1000, 200, 40, &p, 1.6).unwrap();
        assert!((more_cn / base - 2f64.powf(-gamma / 2.0)).abs() < 1e-12);
        let more_k = distance_estimate(2000, 200, 20, &p, 1.6).unwrap();
        assert!((more_k / base - 2f64.sqrt()).abs() < 1e-12);
        let more_j = distance_estimate(1000, 400, 20, &p, 1.6).unwrap();
        assert!((more_j / base - 2f64.powf(gamma / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_estimator_is_rho_one() {
        let p = params(0.7, 100_000);
        let g: f64 = (1.0 - 0.49) / 0.49;
        let direct =
            (0.7f64.powf(g) * 0.7 * 150f64.powf(g) * 900.0 / (1e5 * std::f64::consts::PI * 25f64.powf(g))).sqrt();
        assert!((distance_estimate(900, 150, 25, &p, 1.0).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn estimate_errors() {
        let p = params(0.7, 1000);
        assert!(matches!(distance_estimate(10, 5, 0, &p, 1.0), Err(SpaError::UndefinedEstimate(_))));
        assert!(matches!(distance_estimate(10, 5, 2, &p, 2.5), Err(SpaError::InvalidArgument(_))));
        assert!(distance_estimate(5, 10, 2, &p, 1.0).is_err());
    }

    #[test]
    fn density_inversion_values() {
        let p = params(0.6, 10);
        assert!((rho_from_mean_outdeg(5.85, &p) - 1.5997).abs() < 1e-4);
        assert_eq!(rho_from_mean_outdeg(0.0, &p), 0.0);
        let pole = 1.0 / (0.6 * 0.7);
        let big = rho_from_mean_outdeg(1e12, &p);
        assert!(big < pole && pole - big < 1e-9);
    }

    #[test]
    fn density_estimate_errors() {
        let layout = diagonal_layout(1.6).unwrap();
        let g = generate(&params(0.6, 2000), &layout, 1).unwrap();
        let adj = Adjacency::new(&g);
        let zero = g.nodes().iter().find(|v| v.in_deg == 0).unwrap().id;
        assert!(matches!(density_estimate(&g, &adj, zero, 10), Err(SpaError::UndefinedEstimate(_))));
        let low = g.nodes().iter().find(|v| (1..10).contains(&v.in_deg)).unwrap().id;
        assert!(matches!(density_estimate(&g, &adj, low, 10), Err(SpaError::BelowThreshold { .. })));
        let high = g.nodes().iter().find(|v| v.in_deg >= 10).unwrap();
        let est = density_estimate(&g, &adj, high.id, 10).unwrap();
        let manual: f64 =
            adj.in_neighbours(high.id).iter().map(|&w| g.nodes()[w as usize - 1].out_deg as f64).sum::<f64>()
                / high.in_deg as f64;
        assert!((est.mean_outdeg - manual).abs() < 1e-12);
        assert!(est.rho_hat > 0.0 && est.rho_hat < 1.0 / 0.42);
    }

    fn fake_pair(cn: u32, cell_u: usize, cell_v: usize) -> PairRecord<f64> {
        PairRecord {
            u: 1,
            v: 2,
            k: 100,
            j: 100,
            d: 0.05,
            cn,
            case: Case::Unclassified,
            cell_u,
            cell_v,
            delta_u: 0.1,
            delta_v: 0.1,
        }
    }

    #[test]
    fn batch_filters_and_variants() {
        let layout = DensityLayout::uniform(2, 2).unwrap();
        let g = generate(&params(0.7, 3000), &layout, 4).unwrap();
        let adj = Adjacency::new(&g);
        let pairs = vec![fake_pair(5, 0, 0), fake_pair(10, 1, 1), fake_pair(20, 0, 1)];
        let uni = estimate_all_pairs(&g, &adj, &pairs, &EstimateOptions::new(DistanceVariant::Uniform));
        let known = estimate_all_pairs(&g, &adj, &pairs, &EstimateOptions::new(DistanceVariant::KnownDensity));
        assert_eq!(uni[0].reason, Some(RejectReason::Case1Suspect));
        assert_eq!(uni[1].reason, Some(RejectReason::Case1Suspect));
        assert!(!uni[2].filtered());
        for (a, b) in uni.iter().zip(&known) {
            assert_eq!(a.d_hat, b.d_hat);
            assert_eq!(a.rho_used, Some(1.0));
        }
    }
}

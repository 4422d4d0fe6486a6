//! Read-only statistics over finished graphs.

mod cases;
mod degree;
mod neighbours;
mod pairs;
mod regions;

pub use cases::{case_thresholds, classify_pair, cn_theory_case3, Case, CaseConfig, CaseThresholds};
pub use degree::{
    ccdf_slope_diagnostic, fit_tail, hurwitz_zeta, jf_scale, tail_exponent, DegreeHistogram, FitOptions, RegionFilter,
    TailFit, TailOutcome,
};
pub use neighbours::{common_neighbours, Adjacency};
pub use pairs::{sample_pairs, PairOptions, PairRecord};
pub use regions::{
    density_class_stats, expected_within_edges, mean_outdeg_theory, region_stats, ClassStats, RegionStats,
    RegionSummary,
};

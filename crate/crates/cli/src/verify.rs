//! Statistical checks over a run directory.
//!
//! Each [`Check`] compares a measured quantity against the model's
//! prediction within a tolerance from [`Tolerances`]. A check may emit
//! several outcomes, one per subject (density class, variant, ...).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spa_core::analysis::{
    classify_pair, cn_theory_case3, density_class_stats, expected_within_edges, fit_tail, mean_outdeg_theory,
    region_stats, tail_exponent, Case, CaseConfig, DegreeHistogram, FitOptions, PairRecord, RegionFilter, TailOutcome,
};
use spa_core::estimators::{DistanceEstimate, DistanceVariant};
use spa_core::generator::{check_edge_feasibility, influence_radius, TrajectoryLog};
use spa_core::io::{self, DensityRow, LoadedGraph};
use spa_core::model::boundary_distance;
use spa_core::Graph64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Degree columns of `nodes.tsv` agree with `edges.tsv`.
    DegreeConsistency,
    /// Every edge was geometrically possible when it was created.
    EdgeFeasibility,
    /// Node count per density class against its arrival probability.
    RegionPopulation,
    /// Mean out-degree of residents per density class.
    MeanOutdeg,
    /// Within-region edge count per density class.
    RegionEdges,
    CrossFraction,
    /// Tail exponents of the whole graph and of the extreme density classes.
    TailExponent,
    /// Per-cell exponents agree within each density class.
    TailHomogeneity,
    /// Watched in-degree trajectories follow the power-law growth.
    Trajectories,
    /// Nested pairs share about `p·j` in-neighbours.
    Case2,
    /// Scaling-regime pairs match the common-neighbour formula.
    Case3,
    DistanceEstimator,
    DensityEstimator,
}

impl Check {
    pub const ALL: [Check; 13] = [
        Check::DegreeConsistency,
        Check::EdgeFeasibility,
        Check::RegionPopulation,
        Check::MeanOutdeg,
        Check::RegionEdges,
        Check::CrossFraction,
        Check::TailExponent,
        Check::TailHomogeneity,
        Check::Trajectories,
        Check::Case2,
        Check::Case3,
        Check::DistanceEstimator,
        Check::DensityEstimator,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Check::DegreeConsistency => "degree-consistency",
            Check::EdgeFeasibility => "edge-feasibility",
            Check::RegionPopulation => "region-population",
            Check::MeanOutdeg => "mean-outdeg",
            Check::RegionEdges => "region-edges",
            Check::CrossFraction => "cross-fraction",
            Check::TailExponent => "tail-exponent",
            Check::TailHomogeneity => "tail-homogeneity",
            Check::Trajectories => "trajectories",
            Check::Case2 => "case2",
            Check::Case3 => "case3",
            Check::DistanceEstimator => "distance-estimator",
            Check::DensityEstimator => "density-estimator",
        }
    }

    /// Artifact beyond the graph that the check reads, with the stage that
    /// writes it.
    pub fn requires(self) -> Option<(&'static str, &'static str)> {
        match self {
            Check::Trajectories => Some((io::TRAJECTORIES_FILE, "generate --watch")),
            Check::Case2 | Check::Case3 => Some((io::PAIRS_FILE, "pairs")),
            Check::DistanceEstimator => Some((io::ESTIMATES_FILE, "estimate-distance")),
            Check::DensityEstimator => Some((io::DENSITIES_FILE, "estimate-density")),
            _ => None,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Check {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Check::ALL.into_iter().find(|c| c.label() == s).ok_or_else(|| CliError::Config(format!("unknown check {s:?}")))
    }
}

/// Tolerances for every check. Bands are multiplicative `[lo, hi]` factors
/// on the predicted value unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed deviation of a class population, in binomial standard deviations.
    pub population_sigmas: f64,
    /// Mean out-degree band for the densest class.
    pub outdeg_band_densest: [f64; 2],
    /// Mean out-degree band for every other class; wider above because
    /// border nodes of sparser cells pick up links into denser ones.
    pub outdeg_band_other: [f64; 2],
    pub edge_band: [f64; 2],
    pub max_cross_fraction: f64,
    /// Absolute tolerance on the whole-graph tail exponent.
    pub tail_all: f64,
    /// Absolute tolerance on the densest-class tail exponent.
    pub tail_dense: f64,
    /// Absolute tolerance on the sparsest-class exponent; `None` skips it.
    pub tail_sparse: Option<f64>,
    /// Minimum chi-square p-value for per-cell exponents within a class.
    pub homogeneity_p: f64,
    /// Minimum tail size for a per-cell fit.
    pub homogeneity_min_tail: u64,
    /// `ω` for the degree threshold `T_v` and pair classification.
    pub omega: f64,
    pub trajectory_min_degree: u32,
    pub trajectory_min_nodes: usize,
    /// Nodes need `δ(v) >= trajectory_interior · r(v,n)`.
    pub trajectory_interior: f64,
    pub trajectory_max_median: f64,
    pub case2_band: [f64; 2],
    pub case_min_pairs: usize,
    /// `ε` used to reclassify pairs for the scaling-regime check.
    pub case3_eps: f64,
    /// Only pairs with `k >= case3_ratio · j` enter the scaling check.
    pub case3_ratio: u32,
    pub case3_max_median: f64,
    /// Band for `median(d̂_known / d)` over kept dense pairs.
    pub distance_band: [f64; 2],
    /// `median(d̂_uniform / d)` must exceed the known-density median by this
    /// relative margin.
    pub uniform_excess: f64,
    /// Absolute tolerance of the median `ρ̂` in the densest class.
    pub density_tol: f64,
    /// Allowed location of the `ρ̂` mode over the sparsest class.
    pub sparse_mode_range: Option<[f64; 2]>,
    pub mode_bin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            population_sigmas: 4.5,
            outdeg_band_densest: [0.9, 1.1],
            outdeg_band_other: [0.9, 1.25],
            edge_band: [0.8, 1.25],
            max_cross_fraction: 0.10,
            tail_all: 0.2,
            tail_dense: 0.2,
            tail_sparse: None,
            homogeneity_p: 0.001,
            homogeneity_min_tail: 50,
            omega: 3.0,
            trajectory_min_degree: 100,
            trajectory_min_nodes: 100,
            trajectory_interior: 1.1,
            trajectory_max_median: 0.15,
            case2_band: [0.85, 1.15],
            case_min_pairs: 20,
            case3_eps: 0.9,
            case3_ratio: 5,
            case3_max_median: 0.35,
            distance_band: [0.8, 1.25],
            uniform_excess: 0.2,
            density_tol: 0.15,
            sparse_mode_range: None,
            mode_bin: 0.05,
        }
    }
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { checks: all_checks(), tolerances: Tolerances::default() }
    }
}

impl VerifyOptions {
    pub fn with_checks(checks: Vec<Check>) -> Self {
        Self { checks, tolerances: Tolerances::default() }
    }

    pub fn validate(&self) -> CliResult<()> {
        let t = &self.tolerances;
        CaseConfig::new(t.omega, t.case3_eps)?;
        let bands = [t.outdeg_band_densest, t.outdeg_band_other, t.edge_band, t.case2_band, t.distance_band];
        if bands.iter().any(|b| !(b[0] <= b[1])) {
            return Err(CliError::Config("tolerance band with lo > hi".into()));
        }
        if !(t.mode_bin > 0.0) {
            return Err(CliError::Config("mode_bin must be positive".into()));
        }
        Ok(())
    }
}

/// Result of one check on one subject.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub check: Check,
    pub subject: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub expected: String,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let measured = self.measured.map_or_else(|| "NA".to_string(), |m| format!("{m:.4}"));
        write!(f, "{status} {}[{}]: measured {measured}, expected {}", self.check, self.subject, self.expected)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub outcomes: Vec<Outcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn of(&self, check: Check) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(move |o| o.check == check)
    }
}

/// Median of finite values; `None` when empty.
pub fn median(mut xs: Vec<f64>) -> Option<f64> {
    xs.retain(|x| x.is_finite());
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) })
}

/// Centre of the most populated bin of width `bin` (ties go to the lower bin).
pub fn mode(xs: &[f64], bin: f64) -> Option<f64> {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for x in xs.iter().filter(|x| x.is_finite()) {
        *counts.entry((x / bin).floor() as i64).or_default() += 1;
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(b, _)| (b as f64 + 0.5) * bin)
}

fn in_band(x: f64, band: [f64; 2], scale: f64) -> bool {
    x >= band[0] * scale && x <= band[1] * scale
}

fn band_text(band: [f64; 2], scale: f64) -> String {
    format!("[{:.4}, {:.4}]", band[0] * scale, band[1] * scale)
}

struct Ctx<'a> {
    loaded: &'a LoadedGraph<f64>,
    tol: &'a Tolerances,
    dir: &'a Path,
    out: Vec<Outcome>,
}

impl<'a> Ctx<'a> {
    fn graph(&self) -> &'a Graph64 {
        &self.loaded.graph
    }

    fn push(
        &mut self,
        check: Check,
        subject: impl Into<String>,
        passed: bool,
        measured: Option<f64>,
        expected: String,
        detail: String,
    ) {
        self.out.push(Outcome { check, subject: subject.into(), passed, measured, expected, detail });
    }

    fn subject(rho: f64) -> String {
        let s = format!("{rho:.6}");
        format!("rho={}", s.trim_end_matches('0').trim_end_matches('.'))
    }

    fn degree_consistency(&mut self) {
        let n = self.loaded.mismatches.len();
        let detail =
            self.loaded.mismatches.first().map_or(String::new(), |(id, what)| format!("first: node {id} {what}"));
        self.push(Check::DegreeConsistency, "nodes", n == 0, Some(n as f64), "0 mismatches".into(), detail);
    }

    fn edge_feasibility(&mut self) {
        let res = check_edge_feasibility(self.graph());
        let ok = res.is_ok();
        self.push(
            Check::EdgeFeasibility,
            "edges",
            ok,
            None,
            "every edge inside its sphere".into(),
            res.err().unwrap_or_default(),
        );
    }

    fn region_population(&mut self) {
        let g = self.graph();
        let summary = region_stats(g);
        let n = g.len() as f64;
        let mut rows = Vec::new();
        for class in density_class_stats(g, &summary) {
            let q: f64 = class.cells.iter().map(|&c| g.layout().probability(c)).sum();
            let mean = n * q;
            let sd = (n * q * (1.0 - q)).sqrt();
            let slack = self.tol.population_sigmas * sd;
            let ok = (class.nodes as f64 - mean).abs() <= slack;
            rows.push((Self::subject(class.density), ok, class.nodes as f64, format!("{mean:.1} ± {slack:.1}")));
        }
        for (s, ok, m, e) in rows {
            self.push(Check::RegionPopulation, s, ok, Some(m), e, String::new());
        }
    }

    fn mean_outdeg(&mut self) -> CliResult<()> {
        let g = self.graph();
        let summary = region_stats(g);
        let max = g.layout().max_density();
        let mut rows = Vec::new();
        for class in density_class_stats(g, &summary) {
            let theory = mean_outdeg_theory(class.density, g.params())?;
            let band = if class.density == max { self.tol.outdeg_band_densest } else { self.tol.outdeg_band_other };
            let m = class.mean_outdeg();
            rows.push((
                Self::subject(class.density),
                in_band(m, band, theory),
                m,
                band_text(band, theory),
                format!("theory {theory:.4}"),
            ));
        }
        for (s, ok, m, e, d) in rows {
            self.push(Check::MeanOutdeg, s, ok, Some(m), e, d);
        }
        Ok(())
    }

    fn region_edges(&mut self) -> CliResult<()> {
        let g = self.graph();
        let summary = region_stats(g);
        let mut rows = Vec::new();
        for class in density_class_stats(g, &summary) {
            let q: f64 = class.cells.iter().map(|&c| g.layout().probability(c)).sum();
            let expected = expected_within_edges(class.density, q, g.params())?;
            let m = class.within_edges as f64;
            rows.push((
                Self::subject(class.density),
                in_band(m, self.tol.edge_band, expected),
                m,
                band_text(self.tol.edge_band, expected),
            ));
        }
        for (s, ok, m, e) in rows {
            self.push(Check::RegionEdges, s, ok, Some(m), e, String::new());
        }
        Ok(())
    }

    fn cross_fraction(&mut self) {
        let s = region_stats(self.graph());
        let f = s.cross_fraction();
        let detail = format!("{} of {} edges", s.cross_edges, s.total_edges);
        self.push(
            Check::CrossFraction,
            "all",
            f < self.tol.max_cross_fraction,
            Some(f),
            format!("< {}", self.tol.max_cross_fraction),
            detail,
        );
    }

    fn tail_exponent(&mut self) {
        let g = self.graph();
        let params = *g.params();
        let layout = g.layout().clone();
        let predicted = |rho: f64| 1.0 + 1.0 / params.growth_exponent(rho);
        let mut runs = vec![
            (RegionFilter::All, predicted(layout.max_density()), self.tol.tail_all),
            (RegionFilter::Dense, predicted(layout.max_density()), self.tol.tail_dense),
        ];
        if let Some(tol) = self.tol.tail_sparse {
            if layout.min_density() < layout.max_density() {
                runs.push((RegionFilter::Sparse, predicted(layout.min_density()), tol));
            }
        }
        for (filter, want, tol) in runs {
            let hist = DegreeHistogram::from_graph(g, &filter);
            let expected = format!("{want:.4} ± {tol}");
            match tail_exponent(&hist, &FitOptions::default()) {
                TailOutcome::Fit(fit) => {
                    let detail = format!(
                        "j_min {}, tail {}, se {:.3}, ks {:.4}",
                        fit.j_min, fit.tail_nodes, fit.std_err, fit.ks
                    );
                    let ok = (fit.exponent - want).abs() <= tol;
                    self.push(Check::TailExponent, filter.label(), ok, Some(fit.exponent), expected, detail);
                }
                TailOutcome::NoFit { reason } => {
                    self.push(Check::TailExponent, filter.label(), false, None, expected, reason)
                }
            }
        }
    }

    fn tail_homogeneity(&mut self) {
        let g = self.graph();
        let classes = g.layout().density_classes();
        let mut rows = Vec::new();
        for (rho, cells) in classes.into_iter().filter(|(_, c)| c.len() >= 2) {
            let pooled = DegreeHistogram::from_graph(g, &RegionFilter::Cells(cells.clone()));
            let subject = Self::subject(rho);
            let expected = format!("chi-square p >= {}", self.tol.homogeneity_p);
            let j_min = match tail_exponent(&pooled, &FitOptions::default()) {
                TailOutcome::Fit(f) => f.j_min,
                TailOutcome::NoFit { reason } => {
                    rows.push((subject, false, None, expected, format!("pooled fit failed: {reason}")));
                    continue;
                }
            };
            let fits: Vec<(f64, f64)> = cells
                .iter()
                .map(|&c| DegreeHistogram::from_graph(g, &RegionFilter::Cells(vec![c])))
                .filter(|h| h.tail_count(j_min) >= self.tol.homogeneity_min_tail)
                .filter_map(|h| fit_tail(&h, j_min).fit().map(|f| (f.exponent, f.std_err)))
                .filter(|(_, se)| se.is_finite() && *se > 0.0)
                .collect();
            if fits.len() < 2 {
                rows.push((
                    subject,
                    false,
                    None,
                    expected,
                    format!(
                        "only {} cells have a tail of {} above j_min {j_min}",
                        fits.len(),
                        self.tol.homogeneity_min_tail
                    ),
                ));
                continue;
            }
            let w: Vec<f64> = fits.iter().map(|(_, se)| 1.0 / (se * se)).collect();
            let mean = fits.iter().zip(&w).map(|((a, _), w)| a * w).sum::<f64>() / w.iter().sum::<f64>();
            let q: f64 = fits.iter().zip(&w).map(|((a, _), w)| w * (a - mean).powi(2)).sum();
            let df = (fits.len() - 1) as f64;
            let p = ChiSquared::new(df).map(|d| d.sf(q)).unwrap_or(f64::NAN);
            let spread = fits.iter().map(|f| f.0).fold(f64::NEG_INFINITY, f64::max)
                - fits.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
            let detail = format!(
                "{} cells at j_min {j_min}, pooled exponent {mean:.3}, spread {spread:.3}, Q {q:.2}",
                fits.len()
            );
            rows.push((subject, p >= self.tol.homogeneity_p, Some(p), expected, detail));
        }
        for (s, ok, m, e, d) in rows {
            self.push(Check::TailHomogeneity, s, ok, m, e, d);
        }
    }

    fn trajectories(&mut self, logs: &[TrajectoryLog]) -> CliResult<()> {
        let tol = self.tol.clone();
        let g = self.graph();
        let params = *g.params();
        let layout = g.layout();
        let n = g.len();
        let ln_n = (n as f64).ln();
        let max = layout.max_density();
        let mut devs = Vec::new();
        let mut nodes = 0usize;
        for log in logs {
            let v = g.node(log.id)?;
            let rho = layout.density(v.cell);
            let k = v.in_deg;
            if rho != max || k < tol.trajectory_min_degree {
                continue;
            }
            if boundary_distance(&v.pos, layout) < tol.trajectory_interior * influence_radius(&params, k, n) {
                continue;
            }
            let x = params.growth_exponent(rho);
            let t_v = n as f64 * (tol.omega * ln_n / k as f64).powf(1.0 / x);
            let before = devs.len();
            for &(t, d) in log.checkpoints.iter().filter(|(t, _)| *t < n && *t as f64 >= t_v) {
                devs.push((d as f64 * (n as f64 / t as f64).powf(x) / k as f64 - 1.0).abs());
            }
            if devs.len() > before {
                nodes += 1;
            }
        }
        let points = devs.len();
        let med = median(devs);
        let ok = nodes >= tol.trajectory_min_nodes && med.is_some_and(|m| m <= tol.trajectory_max_median);
        let expected = format!("median <= {} over >= {} nodes", tol.trajectory_max_median, tol.trajectory_min_nodes);
        self.push(
            Check::Trajectories,
            "densest",
            ok,
            med,
            expected,
            format!("{nodes} nodes, {points} checkpoints in T_v <= t < n"),
        );
        Ok(())
    }

    fn case2(&mut self, pairs: &[PairRecord<f64>]) {
        let p = self.graph().params().p;
        let ratios: Vec<f64> =
            pairs.iter().filter(|r| r.case == Case::Nested).map(|r| r.cn as f64 / (p * r.j as f64)).collect();
        let count = ratios.len();
        let med = median(ratios);
        let band = self.tol.case2_band;
        let ok = count >= self.tol.case_min_pairs && med.is_some_and(|m| in_band(m, band, 1.0));
        let expected = format!("median cn/(p j) in {} over >= {} pairs", band_text(band, 1.0), self.tol.case_min_pairs);
        self.push(Check::Case2, "nested", ok, med, expected, format!("{count} pairs"));
    }

    fn case3(&mut self, pairs: &[PairRecord<f64>]) -> CliResult<()> {
        let tol = self.tol.clone();
        let g = self.graph();
        let params = *g.params();
        let cfg = CaseConfig::new(tol.omega, tol.case3_eps)?;
        let mut devs = Vec::new();
        for r in pairs.iter().filter(|r| r.same_region() && r.k >= tol.case3_ratio * r.j) {
            let rho = g.layout().density(r.cell_u);
            if classify_pair(r, &params, rho, &cfg)? == Case::Scaling {
                let th = cn_theory_case3(r.k, r.j, r.d, &params, rho)?;
                devs.push((r.cn as f64 / th - 1.0).abs());
            }
        }
        let count = devs.len();
        let med = median(devs);
        let ok = count >= tol.case_min_pairs && med.is_some_and(|m| m <= tol.case3_max_median);
        let expected =
            format!("median |cn/cn_theory - 1| <= {} over >= {} pairs", tol.case3_max_median, tol.case_min_pairs);
        let detail = format!("{count} scaling pairs with k >= {} j at eps {}", tol.case3_ratio, tol.case3_eps);
        self.push(Check::Case3, "scaling", ok, med, expected, detail);
        Ok(())
    }

    fn distance_estimator(&mut self, estimates: &[DistanceEstimate<f64>]) {
        let g = self.graph();
        let max = g.layout().max_density();
        let dense_pair = |e: &DistanceEstimate<f64>| {
            let (a, b) = (&g.nodes()[e.u as usize - 1], &g.nodes()[e.v as usize - 1]);
            a.cell == b.cell && g.layout().density(a.cell) == max
        };
        let ratios = |variant: DistanceVariant| -> Vec<f64> {
            estimates
                .iter()
                .filter(|e| e.variant == variant && !e.filtered() && dense_pair(e))
                .filter_map(|e| e.d_hat.map(|h| h / e.d))
                .collect()
        };
        let known = ratios(DistanceVariant::KnownDensity);
        let uniform = ratios(DistanceVariant::Uniform);
        let (nk, nu) = (known.len(), uniform.len());
        let (mk, mu) = (median(known), median(uniform));
        let band = self.tol.distance_band;
        self.push(
            Check::DistanceEstimator,
            "known-density",
            mk.is_some_and(|m| in_band(m, band, 1.0)),
            mk,
            format!("median d_hat/d in {}", band_text(band, 1.0)),
            format!("{nk} kept dense pairs"),
        );
        let excess = match (mu, mk) {
            (Some(u), Some(k)) if k > 0.0 => Some(u / k - 1.0),
            _ => None,
        };
        self.push(
            Check::DistanceEstimator,
            "uniform-excess",
            excess.is_some_and(|x| x >= self.tol.uniform_excess),
            excess,
            format!("median(uniform)/median(known) - 1 >= {}", self.tol.uniform_excess),
            format!("{nu} kept dense pairs, uniform median {}", mu.map_or("NA".into(), |m| format!("{m:.4}"))),
        );
    }

    fn density_estimator(&mut self, rows: &[DensityRow<f64>]) {
        let layout = self.graph().layout().clone();
        let (max, min) = (layout.max_density(), layout.min_density());
        let pick = |rho: f64| rows.iter().filter(|r| r.rho_true == rho).map(|r| r.rho_hat).collect::<Vec<_>>();
        let dense = pick(max);
        let nd = dense.len();
        let md = median(dense);
        self.push(
            Check::DensityEstimator,
            Self::subject(max),
            md.is_some_and(|m| (m - max).abs() <= self.tol.density_tol),
            md,
            format!("median rho_hat {max:.4} ± {}", self.tol.density_tol),
            format!("{nd} nodes"),
        );
        if min < max {
            let sparse = pick(min);
            let ns = sparse.len();
            let mo = mode(&sparse, self.tol.mode_bin);
            let ms = median(sparse);
            self.push(
                Check::DensityEstimator,
                Self::subject(min),
                ms.is_some_and(|m| m > min),
                ms,
                format!("median rho_hat > {min:.4}"),
                format!("{ns} nodes"),
            );
            if let Some(range) = self.tol.sparse_mode_range {
                self.push(
                    Check::DensityEstimator,
                    format!("{}:mode", Self::subject(min)),
                    mo.is_some_and(|m| m > range[0] && m < range[1]),
                    mo,
                    format!("mode in ({}, {})", range[0], range[1]),
                    format!("bin width {}", self.tol.mode_bin),
                );
            }
        }
    }
}

fn open_artifact(dir: &Path, file: &str, stage: &str) -> CliResult<std::fs::File> {
    std::fs::File::open(dir.join(file)).map_err(|_| CliError::MissingArtifact {
        file: file.into(),
        stage: stage.into(),
        dir: dir.into(),
    })
}

/// Ensures the graph artifacts exist before loading them.
pub fn require_graph(dir: &Path) -> CliResult<()> {
    for file in [io::META_FILE, io::NODES_FILE, io::EDGES_FILE] {
        if !dir.join(file).is_file() {
            return Err(CliError::MissingArtifact { file: file.into(), stage: "generate".into(), dir: dir.into() });
        }
    }
    Ok(())
}

/// Runs the selected checks against the artifacts in `dir`.
pub fn verify(dir: &Path, loaded: &LoadedGraph<f64>, opts: &VerifyOptions) -> CliResult<VerifyReport> {
    opts.validate()?;
    for check in &opts.checks {
        if let Some((file, stage)) = check.requires() {
            if !dir.join(file).is_file() {
                return Err(CliError::MissingArtifact { file: file.into(), stage: stage.into(), dir: dir.into() });
            }
        }
    }
    let mut ctx = Ctx { loaded, tol: &opts.tolerances, dir, out: Vec::new() };
    let mut pairs: Option<Vec<PairRecord<f64>>> = None;
    for &check in &opts.checks {
        match check {
            Check::DegreeConsistency => ctx.degree_consistency(),
            Check::EdgeFeasibility => ctx.edge_feasibility(),
            Check::RegionPopulation => ctx.region_population(),
            Check::MeanOutdeg => ctx.mean_outdeg()?,
            Check::RegionEdges => ctx.region_edges()?,
            Check::CrossFraction => ctx.cross_fraction(),
            Check::TailExponent => ctx.tail_exponent(),
            Check::TailHomogeneity => ctx.tail_homogeneity(),
            Check::Trajectories => {
                let logs = io::read_trajectories(open_artifact(ctx.dir, io::TRAJECTORIES_FILE, "generate --watch")?)?;
                ctx.trajectories(&logs)?;
            }
            Check::Case2 | Check::Case3 => {
                if pairs.is_none() {
                    pairs = Some(io::read_pairs(open_artifact(ctx.dir, io::PAIRS_FILE, "pairs")?, ctx.graph())?);
                }
                let p = pairs.as_deref().expect("loaded above");
                if check == Check::Case2 {
                    ctx.case2(p);
                } else {
                    ctx.case3(p)?;
                }
            }
            Check::DistanceEstimator => {
                let m = ctx.graph().layout().m();
                let est = io::read_estimates(open_artifact(ctx.dir, io::ESTIMATES_FILE, "estimate-distance")?, m)?;
                ctx.distance_estimator(&est);
            }
            Check::DensityEstimator => {
                let rows = io::read_densities(open_artifact(ctx.dir, io::DENSITIES_FILE, "estimate-density")?)?;
                ctx.density_estimator(&rows);
            }
        }
    }
    Ok(VerifyReport { outcomes: ctx.out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mode() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![f64::NAN]), None);
        assert!((mode(&[1.01, 1.02, 1.03, 2.0], 0.05).unwrap() - 1.025).abs() < 1e-12);
    }

    #[test]
    fn check_labels_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.label().parse::<Check>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.label()));
        }
    }

    #[test]
    fn options_round_trip_with_defaults() {
        let opts: VerifyOptions = serde_json::from_str(r#"{"tolerances":{"case3_eps":0.5}}"#).unwrap();
        assert_eq!(opts.checks, Check::ALL.to_vec());
        assert_eq!(opts.tolerances.case3_eps, 0.5);
        assert_eq!(opts.tolerances.population_sigmas, 4.5);
        assert!(serde_json::from_str::<VerifyOptions>(r#"{"tolerances":{"nope":1}}"#).is_err());
    }
}

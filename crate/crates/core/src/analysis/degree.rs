use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Result, SpaError};
use crate::generator::EvolvingGraph;
use crate::model::{DensityLayout, ModelParams};
use crate::scalar::Scalar;

/// Which nodes enter a histogram, by the cell they live in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionFilter {
    All,
    /// Cells carrying the maximal density.
    Dense,
    /// Cells carrying the minimal density.
    Sparse,
    Cells(Vec<usize>),
}

impl RegionFilter {
    pub fn cells<T: Scalar>(&self, layout: &DensityLayout<T>) -> Vec<usize> {
        match self {
            RegionFilter::All => (0..layout.cells()).collect(),
            RegionFilter::Dense => layout.densest_cells(),
            RegionFilter::Sparse => {
                let sparse = layout.sparsest_cells();
                if layout.min_density() == layout.max_density() {
                    Vec::new()
                } else {
                    sparse
                }
            }
            RegionFilter::Cells(c) => c.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            RegionFilter::All => "all".into(),
            RegionFilter::Dense => "dense".into(),
            RegionFilter::Sparse => "sparse".into(),
            RegionFilter::Cells(c) => {
                format!("cells:{}", c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }
}

impl FromStr for RegionFilter {
    type Err = SpaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(RegionFilter::All),
            "dense" => Ok(RegionFilter::Dense),
            "sparse" => Ok(RegionFilter::Sparse),
            other => {
                let list = other.strip_prefix("cells:").ok_or_else(|| {
                    SpaError::InvalidArgument(format!(
                        "region spec {other:?}: expected all, dense, sparse or cells:i,j"
                    ))
                })?;
                list.split(',')
                    .map(|x| x.trim().parse().map_err(|_| SpaError::InvalidArgument(format!("bad cell index {x:?}"))))
                    .collect::<Result<Vec<_>>>()
                    .map(RegionFilter::Cells)
            }
        }
    }
}

/// In-degree counts `N(j)` over the nodes selected by a filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeHistogram {
    pub filter: RegionFilter,
    pub counts: BTreeMap<u32, u64>,
}

impl DegreeHistogram {
    pub fn from_graph<T: Scalar>(graph: &EvolvingGraph<T>, filter: &RegionFilter) -> Self {
        let mut keep = vec![false; graph.layout().cells()];
        for c in filter.cells(graph.layout()) {
            if let Some(slot) = keep.get_mut(c) {
                *slot = true;
            }
        }
        let mut counts = BTreeMap::new();
        for v in graph.nodes().iter().filter(|v| keep[v.cell]) {
            *counts.entry(v.in_deg).or_insert(0u64) += 1;
        }
        Self { filter: filter.clone(), counts }
    }

    pub fn from_degrees(degrees: impl IntoIterator<Item = u32>) -> Self {
        let mut counts = BTreeMap::new();
        for d in degrees {
            *counts.entry(d).or_insert(0u64) += 1;
        }
        Self { filter: RegionFilter::All, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn tail_count(&self, j_min: u32) -> u64 {
        self.counts.range(j_min..).map(|(_, &c)| c).sum()
    }
}

/// Hurwitz zeta `ζ(s, q) = Σ_{i≥0} (q + i)^{-s}` for `s > 1`, `q > 0`,
/// via Euler–Maclaurin summation after twelve explicit terms.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    const DIRECT: usize = 12;
    // B_{2k} / (2k)! for k = 1..=7
    const COEF: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
    ];
    let mut sum = 0.0;
    for i in 0..DIRECT {
        sum += (q + i as f64).powf(-s);
    }
    let a = q + DIRECT as f64;
    let a_s = a.powf(-s);
    sum += a * a_s / (s - 1.0) + 0.5 * a_s;
    let inv_a2 = 1.0 / (a * a);
    let mut rising = s * a_s / a;
    for (k, c) in COEF.iter().enumerate() {
        sum += c * rising;
        let k = (k + 1) as f64;
        rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k) * inv_a2;
    }
    sum
}

/// A discrete power law `P(X = x) ∝ x^{-exponent}` for `x >= j_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    pub exponent: f64,
    pub std_err: f64,
    pub j_min: u32,
    pub j_max: u32,
    pub tail_nodes: u64,
    /// Kolmogorov–Smirnov distance between the tail and the fitted law.
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TailOutcome {
    Fit(TailFit),
    NoFit { reason: String },
}

impl TailOutcome {
    pub fn fit(&self) -> Option<&TailFit> {
        match self {
            TailOutcome::Fit(f) => Some(f),
            TailOutcome::NoFit { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Minimum number of nodes at or above a candidate cutoff.
    pub min_tail: u64,
    /// Largest cutoff considered; `None` lets the tail-size rule decide.
    pub max_j_min: Option<u32>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { min_tail: 50, max_j_min: None }
    }
}

const ALPHA_LO: f64 = 1.0 + 1e-6;
const ALPHA_HI: f64 = 20.0;

fn neg_log_likelihood(alpha: f64, j_min: u32, n: f64, sum_log: f64) -> f64 {
    alpha * sum_log + n * hurwitz_zeta(alpha, j_min as f64).ln()
}

fn mle(j_min: u32, n: f64, sum_log: f64) -> f64 {
    // Golden-section search; the likelihood is log-concave in alpha.
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (ALPHA_LO, ALPHA_HI);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = neg_log_likelihood(c, j_min, n, sum_log);
    let mut fd = neg_log_likelihood(d, j_min, n, sum_log);
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = neg_log_likelihood(c, j_min, n, sum_log);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = neg_log_likelihood(d, j_min, n, sum_log);
        }
    }
    0.5 * (a + b)
}

/// Fits the tail `j >= j_min` for one fixed cutoff.
pub fn fit_tail(hist: &DegreeHistogram, j_min: u32) -> TailOutcome {
    let j_min = j_min.max(1);
    let tail: Vec<(u32, u64)> = hist.counts.range(j_min..).map(|(&j, &c)| (j, c)).collect();
    let n: u64 = tail.iter().map(|t| t.1).sum();
    if n == 0 {
        return TailOutcome::NoFit { reason: format!("no nodes with degree >= {j_min}") };
    }
    let sum_log: f64 = tail.iter().map(|&(j, c)| c as f64 * (j as f64).ln()).sum();
    let nf = n as f64;
    let alpha = mle(j_min, nf, sum_log);
    if alpha >= ALPHA_HI - 1e-6 {
        return TailOutcome::NoFit { reason: "likelihood maximum at the search boundary".into() };
    }

    let lz = |s: f64| hurwitz_zeta(s, j_min as f64).ln();
    let h = (0.5 * (alpha - 1.0)).min(1e-3);
    let curvature = (lz(alpha + h) - 2.0 * lz(alpha) + lz(alpha - h)) / (h * h);
    let std_err = if curvature > 0.0 { 1.0 / (nf * curvature).sqrt() } else { f64::NAN };

    // KS distance over the integer support, using ζ(α, x+1) = ζ(α, x) - x^{-α}.
    let z0 = hurwitz_zeta(alpha, j_min as f64);
    let j_max = tail.last().expect("non-empty tail").0;
    let mut upper = z0;
    let mut seen = 0u64;
    let mut it = tail.iter().peekable();
    let mut ks: f64 = 0.0;
    for x in j_min..=j_max {
        if let Some(&&(j, c)) = it.peek() {
            if j == x {
                seen += c;
                it.next();
            }
        }
        upper -= (x as f64).powf(-alpha);
        let model = 1.0 - upper / z0;
        let empirical = seen as f64 / nf;
        ks = ks.max((model - empirical).abs());
    }
    TailOutcome::Fit(TailFit { exponent: alpha, std_err, j_min, j_max, tail_nodes: n, ks })
}

/// Discrete power-law MLE with the cutoff that minimises the KS distance
/// among cutoffs leaving at least `min_tail` nodes.
pub fn tail_exponent(hist: &DegreeHistogram, opts: &FitOptions) -> TailOutcome {
    let candidates: Vec<u32> = hist
        .counts
        .keys()
        .copied()
        .filter(|&j| j >= 1)
        .filter(|&j| opts.max_j_min.is_none_or(|cap| j <= cap))
        .filter(|&j| hist.tail_count(j) >= opts.min_tail)
        .collect();
    if candidates.is_empty() {
        return TailOutcome::NoFit {
            reason: format!("fewer than {} nodes in any tail (histogram holds {})", opts.min_tail, hist.total()),
        };
    }
    let mut best: Option<TailFit> = None;
    for j in candidates {
        if let TailOutcome::Fit(fit) = fit_tail(hist, j) {
            if best.as_ref().is_none_or(|b| fit.ks < b.ks) {
                best = Some(fit);
            }
        }
    }
    match best {
        Some(fit) => TailOutcome::Fit(fit),
        None => TailOutcome::NoFit { reason: "no cutoff produced an interior maximum".into() },
    }
}

/// The asymptotic upper end of the power-law range,
/// `(n / ln^8 n)^{pρ_max a1 / (4pρ_max a1 + 2)}`. Reported as a diagnostic:
/// it is below one for every practical `n`.
pub fn jf_scale<T: Scalar>(params: &ModelParams<T>, rho_max: T) -> f64 {
    let n = params.n as f64;
    let x = params.growth_exponent(rho_max).f64();
    (n / n.ln().powi(8)).powf(x / (4.0 * x + 2.0))
}

/// Least-squares slope of `log P(X >= j)` against `log j` on logarithmic
/// steps over `j >= j_min`; `1 - slope` approximates the exponent. Diagnostic
/// only.
pub fn ccdf_slope_diagnostic(hist: &DegreeHistogram, j_min: u32) -> Option<f64> {
    let total = hist.tail_count(j_min.max(1)) as f64;
    if total == 0.0 {
        return None;
    }
    let mut pts = Vec::new();
    let mut j = j_min.max(1) as f64;
    let j_max = *hist.counts.keys().next_back()? as f64;
    while j <= j_max {
        let c = hist.tail_count(j.ceil() as u32) as f64;
        if c >= 5.0 {
            pts.push((j.ln(), (c / total).ln()));
        }
        j *= 1.25;
    }
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(1.0 - sxy / sxx)
}

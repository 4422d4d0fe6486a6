use crate::error::{invalid, Result};
use crate::generator::EvolvingGraph;
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Edge and population counts for one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats<T> {
    pub cell: usize,
    pub density: T,
    pub nodes: u64,
    /// Edges with both endpoints in the cell.
    pub within_edges: u64,
    /// Edges with exactly one endpoint in the cell.
    pub cross_edges: u64,
    /// Sum of residents' out-degrees (within plus outgoing cross edges).
    pub out_edges: u64,
}

impl<T: Scalar> RegionStats<T> {
    /// Mean out-degree of residents; zero for an empty cell.
    pub fn mean_outdeg(&self) -> f64 {
        if self.nodes == 0 {
            0.0
        } else {
            self.out_edges as f64 / self.nodes as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSummary<T> {
    pub regions: Vec<RegionStats<T>>,
    pub total_edges: u64,
    /// Edges whose endpoints lie in different cells, each counted once.
    pub cross_edges: u64,
}

impl<T: Scalar> RegionSummary<T> {
    pub fn cross_fraction(&self) -> f64 {
        if self.total_edges == 0 {
            0.0
        } else {
            self.cross_edges as f64 / self.total_edges as f64
        }
    }
}

pub fn region_stats<T: Scalar>(graph: &EvolvingGraph<T>) -> RegionSummary<T> {
    let layout = graph.layout();
    let mut regions: Vec<RegionStats<T>> = (0..layout.cells())
        .map(|cell| RegionStats {
            cell,
            density: layout.density(cell),
            nodes: 0,
            within_edges: 0,
            cross_edges: 0,
            out_edges: 0,
        })
        .collect();
    for v in graph.nodes() {
        let r = &mut regions[v.cell];
        r.nodes += 1;
        r.out_edges += v.out_deg as u64;
    }
    let mut cross = 0;
    for &(c, p) in graph.edges() {
        let (a, b) = (graph.nodes()[c as usize - 1].cell, graph.nodes()[p as usize - 1].cell);
        if a == b {
            regions[a].within_edges += 1;
        } else {
            regions[a].cross_edges += 1;
            regions[b].cross_edges += 1;
            cross += 1;
        }
    }
    RegionSummary { regions, total_edges: graph.edges().len() as u64, cross_edges: cross }
}

/// Totals over all cells of equal density.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats<T> {
    pub density: T,
    pub cells: Vec<usize>,
    pub nodes: u64,
    pub within_edges: u64,
    pub out_edges: u64,
}

impl<T: Scalar> ClassStats<T> {
    pub fn mean_outdeg(&self) -> f64 {
        if self.nodes == 0 {
            0.0
        } else {
            self.out_edges as f64 / self.nodes as f64
        }
    }
}

/// Aggregates per density class, densest first.
pub fn density_class_stats<T: Scalar>(graph: &EvolvingGraph<T>, summary: &RegionSummary<T>) -> Vec<ClassStats<T>> {
    graph
        .layout()
        .density_classes()
        .into_iter()
        .map(|(density, cells)| {
            let pick = |f: fn(&RegionStats<T>) -> u64| cells.iter().map(|&c| f(&summary.regions[c])).sum();
            ClassStats {
                density,
                nodes: pick(|r| r.nodes),
                within_edges: pick(|r| r.within_edges),
                out_edges: pick(|r| r.out_edges),
                cells,
            }
        })
        .collect()
}

/// Mean out-degree `pρa2 / (1 - pρa1)` of a region with density `rho`.
pub fn mean_outdeg_theory<T: Scalar>(rho: T, params: &ModelParams<T>) -> Result<T> {
    let load = params.growth_exponent(rho);
    if !(load < T::one()) {
        return invalid(format!("p·ρ·a1 = {load} >= 1 is supercritical"));
    }
    Ok(params.p * rho * params.a2 / (T::one() - load))
}

/// Expected number of edges inside a region of density `rho` holding
/// arrival probability `q`: `pρa2 / (1 - pρa1) · q · n`.
pub fn expected_within_edges<T: Scalar>(rho: T, q: T, params: &ModelParams<T>) -> Result<T> {
    Ok(mean_outdeg_theory(rho, params)? * q * T::of_usize(params.n))
}

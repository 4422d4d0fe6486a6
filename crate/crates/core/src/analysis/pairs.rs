use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::Result;
use crate::generator::EvolvingGraph;
use crate::model::{boundary_distance, SpaRng};
use crate::scalar::Scalar;

use super::cases::{classify_pair, Case, CaseConfig};
use super::neighbours::{sorted_intersection, Adjacency};

/// A node pair ordered so that `k = deg⁻(u) >= j = deg⁻(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord<T> {
    pub u: u32,
    pub v: u32,
    pub k: u32,
    pub j: u32,
    /// True torus distance.
    pub d: T,
    pub cn: u32,
    pub case: Case,
    pub cell_u: usize,
    pub cell_v: usize,
    pub delta_u: T,
    pub delta_v: T,
}

impl<T: Scalar> PairRecord<T> {
    /// Builds the record for an unordered pair, orienting it by degree (ties
    /// broken by the smaller id).
    pub fn new(graph: &EvolvingGraph<T>, adj: &Adjacency, a: u32, b: u32) -> Result<Self> {
        let (na, nb) = (graph.node(a)?, graph.node(b)?);
        let (u, v) = if (nb.in_deg, a) > (na.in_deg, b) { (nb, na) } else { (na, nb) };
        let layout = graph.layout();
        Ok(Self {
            u: u.id,
            v: v.id,
            k: u.in_deg,
            j: v.in_deg,
            d: graph.distance(u.id, v.id)?,
            cn: sorted_intersection(adj.in_neighbours(u.id), adj.in_neighbours(v.id)),
            case: Case::Unclassified,
            cell_u: u.cell,
            cell_v: v.cell,
            delta_u: boundary_distance(&u.pos, layout),
            delta_v: boundary_distance(&v.pos, layout),
        })
    }

    pub fn same_region(&self) -> bool {
        self.cell_u == self.cell_v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairOptions<T> {
    /// Both endpoints need at least this in-degree.
    pub min_deg: u32,
    /// Extra uniformly drawn pairs among qualifying nodes.
    pub sample: usize,
    pub seed: u64,
    pub cases: CaseConfig<T>,
}

impl<T: Scalar> Default for PairOptions<T> {
    fn default() -> Self {
        Self { min_deg: 30, sample: 1000, seed: 0, cases: CaseConfig::default() }
    }
}

/// Pairs of nodes with in-degree at least `min_deg` that share an
/// in-neighbour, plus `sample` uniform pairs of such nodes, each classified
/// into its common-neighbour regime. Sorted by `(min id, max id)`.
pub fn sample_pairs<T: Scalar>(
    graph: &EvolvingGraph<T>,
    adj: &Adjacency,
    opts: &PairOptions<T>,
) -> Result<Vec<PairRecord<T>>> {
    let heavy: Vec<u32> = graph.nodes().iter().filter(|v| v.in_deg >= opts.min_deg).map(|v| v.id).collect();
    let qualifies = |id: u32| graph.nodes()[id as usize - 1].in_deg >= opts.min_deg;

    let mut keys: Vec<(u32, u32)> = heavy
        .par_iter()
        .flat_map_iter(|&a| {
            let mut partners: Vec<u32> = adj
                .in_neighbours(a)
                .iter()
                .flat_map(|&w| adj.out_neighbours(w).iter().copied())
                .filter(|&b| b > a && qualifies(b))
                .collect();
            partners.sort_unstable();
            partners.dedup();
            partners.into_iter().map(move |b| (a, b))
        })
        .collect();

    if heavy.len() >= 2 && opts.sample > 0 {
        let mut seen: HashSet<(u32, u32)> = keys.iter().copied().collect();
        let mut rng = SpaRng::new(opts.seed);
        let max_pairs = heavy.len() * (heavy.len() - 1) / 2;
        let mut added = 0;
        let mut attempts = 0;
        while added < opts.sample && seen.len() < max_pairs && attempts < 20 * opts.sample {
            attempts += 1;
            let a = heavy[rng.below(heavy.len())];
            let b = heavy[rng.below(heavy.len())];
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                keys.push(key);
                added += 1;
            }
        }
    }
    keys.sort_unstable();

    let params = graph.params();
    let layout = graph.layout();
    keys.par_iter()
        .map(|&(a, b)| {
            let mut rec = PairRecord::new(graph, adj, a, b)?;
            if rec.same_region() {
                rec.case = classify_pair(&rec, params, layout.density(rec.cell_u), &opts.cases)?;
            }
            Ok(rec)
        })
        .collect()
}

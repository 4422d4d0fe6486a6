//! The SPA process.
//!
//! At step `t` a node `v_t` is placed by the density layout; then, for every
//! earlier node `u` whose sphere `S(u, t-1)` contains `v_t`, the edge
//! `(v_t, u)` is added with probability `p`.
//!
//! Random draws per step, in order: one uniform choosing the cell by a
//! cumulative scan over row-major cell indices; `m` uniforms for the offset
//! inside the cell (axis 0 first); one Bernoulli per covering node in
//! ascending id order. [`generate`] and [`generate_naive`] only differ in
//! how covering nodes are found, so their outputs are bit-identical.

mod index;
mod sphere;
mod trajectory;

pub use trajectory::{checkpoint_times, trajectories_from_edges, TrajectoryLog, Watch};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{torus_distance_sq, DensityLayout, ModelParams, Point, SpaRng};
use crate::scalar::Scalar;

use index::{BucketGrid, CandidateIndex, NaiveScan};
use sphere::Sphere;

/// Sphere volume `min(1, (a1·in_deg + a2) / t)`.
pub fn influence_volume<T: Scalar>(params: &ModelParams<T>, in_deg: u32, t: usize) -> T {
    let raw = Sphere::new(params).raw_volume(in_deg, T::of_usize(t.max(1)));
    raw.min(T::one())
}

/// Sphere radius `(volume / c_m)^{1/m}`.
pub fn influence_radius<T: Scalar>(params: &ModelParams<T>, in_deg: u32, t: usize) -> T {
    let vol = influence_volume(params, in_deg, t);
    (vol / params.c_m()).powf(T::one() / T::of_usize(params.m))
}

/// Which candidate search produced a graph. Both yield identical graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Grid,
    Naive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord<T> {
    /// Birth step, `1..=n`.
    pub id: u32,
    pub pos: Point<T>,
    pub cell: usize,
    pub in_deg: u32,
    pub out_deg: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMeta<T> {
    pub params: ModelParams<T>,
    pub layout: DensityLayout<T>,
    pub seed: u64,
    pub engine: Engine,
}

/// Final state of one run: nodes by id and directed edges `(child, parent)`
/// sorted by child, then parent.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolvingGraph<T> {
    meta: GraphMeta<T>,
    nodes: Vec<NodeRecord<T>>,
    edges: Vec<(u32, u32)>,
}

impl<T: Scalar> EvolvingGraph<T> {
    /// Assembles a graph from stored parts, recomputing degrees from the
    /// edge list. Fails on structural violations (bad ids, unordered or
    /// duplicate edges, links from old to new).
    pub fn from_parts(meta: GraphMeta<T>, positions: Vec<Point<T>>, edges: Vec<(u32, u32)>) -> Result<Self> {
        let n = positions.len();
        let mut in_deg = vec![0u32; n];
        let mut out_deg = vec![0u32; n];
        let mut prev: Option<(u32, u32)> = None;
        for &(c, p) in &edges {
            if p == 0 || c as usize > n || c <= p {
                return invalid(format!("edge ({c},{p}) violates 1 <= parent < child <= n"));
            }
            if prev.is_some_and(|q| q >= (c, p)) {
                return invalid(format!("edges must be sorted and distinct, ({c},{p}) out of order"));
            }
            prev = Some((c, p));
            in_deg[p as usize - 1] += 1;
            out_deg[c as usize - 1] += 1;
        }
        let layout = &meta.layout;
        let nodes = positions
            .into_iter()
            .enumerate()
            .map(|(i, pos)| {
                if pos.dim() != layout.m() {
                    return invalid(format!("node {} has dimension {}", i + 1, pos.dim()));
                }
                Ok(NodeRecord {
                    id: i as u32 + 1,
                    cell: layout.cell_of(&pos),
                    pos,
                    in_deg: in_deg[i],
                    out_deg: out_deg[i],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { meta, nodes, edges })
    }

    #[inline]
    pub fn meta(&self) -> &GraphMeta<T> {
        &self.meta
    }

    #[inline]
    pub fn params(&self) -> &ModelParams<T> {
        &self.meta.params
    }

    #[inline]
    pub fn layout(&self) -> &DensityLayout<T> {
        &self.meta.layout
    }

    #[inline]
    pub fn nodes(&self) -> &[NodeRecord<T>] {
        &self.nodes
    }

    #[inline]
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node by 1-based id.
    pub fn node(&self, id: u32) -> Result<&NodeRecord<T>> {
        if id == 0 || id as usize > self.nodes.len() {
            return invalid(format!("unknown node id {id}"));
        }
        Ok(&self.nodes[id as usize - 1])
    }

    /// Density of the cell holding node `id`.
    pub fn rho_of(&self, id: u32) -> Result<T> {
        Ok(self.layout().density(self.node(id)?.cell))
    }

    pub fn distance(&self, u: u32, v: u32) -> Result<T> {
        let (a, b) = (self.node(u)?, self.node(v)?);
        Ok(torus_distance_sq(a.pos.coords(), b.pos.coords()).sqrt())
    }
}

/// Mutable process state shared with the candidate index.
pub(crate) struct State<T> {
    pub(crate) m: usize,
    pub(crate) sphere: Sphere<T>,
    pub(crate) pos: Vec<T>,
    pub(crate) in_deg: Vec<u32>,
}

/// Region sampler: the cumulative arrival probabilities in row-major order.
struct Placement<'a, T> {
    layout: &'a DensityLayout<T>,
    cumulative: Vec<f64>,
    last_nonzero: usize,
}

impl<'a, T: Scalar> Placement<'a, T> {
    fn new(layout: &'a DensityLayout<T>) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..layout.cells())
            .map(|c| {
                acc += layout.probability(c).f64();
                acc
            })
            .collect();
        let last_nonzero =
            (0..layout.cells()).rev().find(|&c| layout.density(c) > T::zero()).expect("densities average to one");
        Self { layout, cumulative, last_nonzero }
    }

    fn place(&self, rng: &mut SpaRng, out: &mut Vec<T>) -> usize {
        let u = rng.uniform();
        let cell = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.last_nonzero);
        let k = self.layout.k();
        let kt = T::of_usize(k);
        for j in self.layout.cell_coords(cell) {
            let offset = T::of(rng.uniform());
            let mut x = (T::of_usize(j) + offset) / kt;
            if self.layout.axis_cell(x) != j || x >= T::one() {
                // Rounding pushed the coordinate across the cell edge.
                x = (T::of_usize(j) + T::of(0.5)) / kt;
            }
            out.push(x);
        }
        cell
    }
}

/// Per-step hook: `(t, in-degrees after step t, cell of v_t)`.
pub(crate) type StepHook<'h> = dyn FnMut(usize, &[u32], usize) + 'h;

fn run<T: Scalar, I: CandidateIndex<T>>(
    params: &ModelParams<T>,
    layout: &DensityLayout<T>,
    seed: u64,
    engine: Engine,
    mut index: I,
    hook: &mut StepHook<'_>,
) -> Result<EvolvingGraph<T>> {
    params.validate_with(layout)?;
    let (n, m) = (params.n, params.m);
    let p = params.p.f64();
    let placement = Placement::new(layout);
    let mut rng = SpaRng::new(seed);
    let mut state =
        State { m, sphere: Sphere::new(params), pos: Vec::with_capacity(n * m), in_deg: Vec::with_capacity(n) };
    let mut out_deg: Vec<u32> = Vec::with_capacity(n);
    let mut cells: Vec<usize> = Vec::with_capacity(n);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut new_pos: Vec<T> = Vec::with_capacity(m);
    let mut candidates: Vec<u32> = Vec::new();
    let mut gained: Vec<u32> = Vec::new();

    for t in 1..=n {
        new_pos.clear();
        let cell = placement.place(&mut rng, &mut new_pos);

        candidates.clear();
        if t > 1 {
            index.candidates(&state, t, &new_pos, &mut candidates);
            candidates.sort_unstable();
        }
        gained.clear();
        let child = t as u32;
        for &parent in &candidates {
            if rng.bernoulli(p) {
                edges.push((child, parent));
                gained.push(parent);
            }
        }
        for &parent in &gained {
            state.in_deg[parent as usize - 1] += 1;
        }

        state.pos.extend_from_slice(&new_pos);
        state.in_deg.push(0);
        out_deg.push(gained.len() as u32);
        cells.push(cell);
        index.after_step(&state, t, child, &gained);
        hook(t, &state.in_deg, cell);
    }

    let nodes = (0..n)
        .map(|i| NodeRecord {
            id: i as u32 + 1,
            pos: Point::from_raw(state.pos[i * m..(i + 1) * m].to_vec()),
            cell: cells[i],
            in_deg: state.in_deg[i],
            out_deg: out_deg[i],
        })
        .collect();
    let meta = GraphMeta { params: *params, layout: layout.clone(), seed, engine };
    Ok(EvolvingGraph { meta, nodes, edges })
}

pub(crate) fn run_engine<T: Scalar>(
    params: &ModelParams<T>,
    layout: &DensityLayout<T>,
    seed: u64,
    engine: Engine,
    hook: &mut StepHook<'_>,
) -> Result<EvolvingGraph<T>> {
    params.validate_with(layout)?;
    match engine {
        Engine::Grid => run(params, layout, seed, engine, BucketGrid::new(params, layout.k()), hook),
        Engine::Naive => run(params, layout, seed, engine, NaiveScan, hook),
    }
}

/// Runs the process with the bucket-grid index.
pub fn generate<T: Scalar>(params: &ModelParams<T>, layout: &DensityLayout<T>, seed: u64) -> Result<EvolvingGraph<T>> {
    run_engine(params, layout, seed, Engine::Grid, &mut |_, _, _| {})
}

/// O(n²) reference implementation: scans every earlier node at every step.
pub fn generate_naive<T: Scalar>(
    params: &ModelParams<T>,
    layout: &DensityLayout<T>,
    seed: u64,
) -> Result<EvolvingGraph<T>> {
    run_engine(params, layout, seed, Engine::Naive, &mut |_, _, _| {})
}

/// Runs the process and logs in-degrees of watched nodes at the checkpoints
/// from [`checkpoint_times`].
pub fn record_trajectories<T: Scalar>(
    params: &ModelParams<T>,
    layout: &DensityLayout<T>,
    seed: u64,
    engine: Engine,
    watch: &Watch,
) -> Result<(EvolvingGraph<T>, Vec<TrajectoryLog>)> {
    watch.check_ids(params.n)?;
    let checkpoints = checkpoint_times(params.n);
    let mut next_checkpoint = 0;
    let mut watched: Vec<u32> = Vec::new();
    let mut logs: Vec<TrajectoryLog> = Vec::new();
    let graph = run_engine(params, layout, seed, engine, &mut |t, in_deg, cell| {
        if watch.selects(t as u32, cell) {
            watched.push(t as u32);
            logs.push(TrajectoryLog { id: t as u32, checkpoints: Vec::new() });
        }
        if checkpoints.get(next_checkpoint) == Some(&t) {
            next_checkpoint += 1;
            for (log, &id) in logs.iter_mut().zip(&watched) {
                log.checkpoints.push((t, in_deg[id as usize - 1]));
            }
        }
    })?;
    Ok((graph, logs))
}

/// Replays degrees along the edge list and checks that every edge was
/// geometrically allowed when it was created. Returns the first violation.
pub fn check_edge_feasibility<T: Scalar>(graph: &EvolvingGraph<T>) -> std::result::Result<(), String> {
    let params = graph.params();
    let sphere = Sphere::new(params);
    let slack = T::of(1e-12);
    let mut in_deg = vec![0u32; graph.len()];
    for &(c, p) in graph.edges() {
        if c <= p {
            return Err(format!("edge ({c},{p}) points from old to new"));
        }
        let parent = &graph.nodes()[p as usize - 1];
        let child = &graph.nodes()[c as usize - 1];
        let deg = in_deg[p as usize - 1];
        let d = torus_distance_sq(parent.pos.coords(), child.pos.coords()).sqrt();
        let t_prev = c as usize - 1;
        let capped = sphere.radius_sq_at(deg, T::of_usize(t_prev)).is_none();
        let r = influence_radius(params, deg, t_prev);
        if !capped && d > r + slack {
            return Err(format!("edge ({c},{p}): distance {d} exceeds radius {r} at t={t_prev}"));
        }
        in_deg[p as usize - 1] += 1;
    }
    Ok(())
}

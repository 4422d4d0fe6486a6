use crate::error::{invalid, Result};
use crate::generator::EvolvingGraph;
use crate::scalar::Scalar;

/// Compressed in- and out-neighbour lists, each sorted by id.
#[derive(Debug, Clone)]
pub struct Adjacency {
    in_offsets: Vec<usize>,
    in_list: Vec<u32>,
    out_offsets: Vec<usize>,
    out_list: Vec<u32>,
}

impl Adjacency {
    pub fn new<T: Scalar>(graph: &EvolvingGraph<T>) -> Self {
        let n = graph.len();
        let mut in_offsets = vec![0usize; n + 1];
        let mut out_offsets = vec![0usize; n + 1];
        for &(c, p) in graph.edges() {
            in_offsets[p as usize] += 1;
            out_offsets[c as usize] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
            out_offsets[i + 1] += out_offsets[i];
        }
        let mut in_list = vec![0u32; graph.edges().len()];
        let mut out_list = vec![0u32; graph.edges().len()];
        let mut in_fill = in_offsets.clone();
        let mut out_fill = out_offsets.clone();
        // Edges are sorted by (child, parent), so both lists come out sorted.
        for &(c, p) in graph.edges() {
            in_list[in_fill[p as usize - 1]] = c;
            in_fill[p as usize - 1] += 1;
            out_list[out_fill[c as usize - 1]] = p;
            out_fill[c as usize - 1] += 1;
        }
        Self { in_offsets, in_list, out_offsets, out_list }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.in_offsets.len() - 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes linking to `id` (its children).
    #[inline]
    pub fn in_neighbours(&self, id: u32) -> &[u32] {
        let i = id as usize - 1;
        &self.in_list[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    /// Nodes `id` links to (its parents).
    #[inline]
    pub fn out_neighbours(&self, id: u32) -> &[u32] {
        let i = id as usize - 1;
        &self.out_list[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    fn check(&self, id: u32) -> Result<()> {
        if id == 0 || id as usize > self.len() {
            return invalid(format!("unknown node id {id}"));
        }
        Ok(())
    }
}

/// Number of nodes linking to both `u` and `v`.
pub fn common_neighbours(adj: &Adjacency, u: u32, v: u32) -> Result<u32> {
    adj.check(u)?;
    adj.check(v)?;
    if u == v {
        return invalid(format!("common neighbours need two distinct nodes, got {u} twice"));
    }
    Ok(sorted_intersection(adj.in_neighbours(u), adj.in_neighbours(v)))
}

pub(crate) fn sorted_intersection(a: &[u32], b: &[u32]) -> u32 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

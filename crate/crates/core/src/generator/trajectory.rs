use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{invalid, Result, SpaError};
use crate::scalar::Scalar;

use super::EvolvingGraph;

/// In-degree of one node sampled at checkpoint times, ascending in `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryLog {
    pub id: u32,
    /// `(t, deg⁻(v, t))` pairs.
    pub checkpoints: Vec<(usize, u32)>,
}

/// Checkpoints `ceil(n / 2^i)` for `i = 0, 1, ...` while at least 10, closed
/// off with `t = 10`; returned in ascending order.
pub fn checkpoint_times(n: usize) -> Vec<usize> {
    const FLOOR: usize = 10;
    if n <= FLOOR {
        return vec![n];
    }
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let t = n.div_ceil(1usize << i);
        if t < FLOOR {
            break;
        }
        out.push(t);
        i += 1;
    }
    if out.last() != Some(&FLOOR) {
        out.push(FLOOR);
    }
    out.dedup();
    out.reverse();
    out
}

/// Which nodes to log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Watch {
    Ids(Vec<u32>),
    /// Every node whose birth step and cell match the given filters.
    Filter {
        born: Option<RangeInclusive<u32>>,
        cells: Option<Vec<usize>>,
    },
}

impl Watch {
    pub fn all() -> Self {
        Watch::Filter { born: None, cells: None }
    }

    pub fn selects(&self, id: u32, cell: usize) -> bool {
        match self {
            Watch::Ids(ids) => ids.contains(&id),
            Watch::Filter { born, cells } => {
                born.as_ref().is_none_or(|r| r.contains(&id)) && cells.as_ref().is_none_or(|c| c.contains(&cell))
            }
        }
    }

    pub fn check_ids(&self, n: usize) -> Result<()> {
        if let Watch::Ids(ids) = self {
            if let Some(bad) = ids.iter().find(|&&id| id == 0 || id as usize > n) {
                return invalid(format!("watched node {bad} is outside 1..={n}"));
            }
        }
        Ok(())
    }
}

/// `all`, `ids:1,2,3`, `born:LO-HI`, `cells:0,5`, or `born:..;cells:..`.
impl FromStr for Watch {
    type Err = SpaError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| SpaError::InvalidArgument(format!("watch spec {s:?}: {msg}"));
        let s = s.trim();
        if s == "all" {
            return Ok(Watch::all());
        }
        if let Some(list) = s.strip_prefix("ids:") {
            let ids = list
                .split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|_| bad("ids must be integers")))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Watch::Ids(ids));
        }
        let mut born = None;
        let mut cells = None;
        for part in s.split(';') {
            let part = part.trim();
            if let Some(range) = part.strip_prefix("born:") {
                let (lo, hi) = range.split_once('-').ok_or_else(|| bad("born needs LO-HI"))?;
                let lo: u32 = lo.trim().parse().map_err(|_| bad("born bounds must be integers"))?;
                let hi: u32 = hi.trim().parse().map_err(|_| bad("born bounds must be integers"))?;
                born = Some(lo..=hi);
            } else if let Some(list) = part.strip_prefix("cells:") {
                cells = Some(
                    list.split(',')
                        .map(|x| x.trim().parse::<usize>().map_err(|_| bad("cells must be integers")))
                        .collect::<Result<Vec<_>>>()?,
                );
            } else {
                return Err(bad("expected all, ids:, born: or cells:"));
            }
        }
        Ok(Watch::Filter { born, cells })
    }
}

/// Rebuilds trajectories from a finished graph: `deg⁻(v, t)` counts edges
/// into `v` whose child was born at or before `t`.
pub fn trajectories_from_edges<T: Scalar>(graph: &EvolvingGraph<T>, ids: &[u32]) -> Result<Vec<TrajectoryLog>> {
    let n = graph.len();
    Watch::Ids(ids.to_vec()).check_ids(n)?;
    let times = checkpoint_times(n);
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); ids.len()];
    let slot: std::collections::HashMap<u32, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    for &(c, p) in graph.edges() {
        if let Some(&i) = slot.get(&p) {
            children[i].push(c);
        }
    }
    Ok(ids
        .iter()
        .zip(children)
        .map(|(&id, kids)| {
            let checkpoints = times
                .iter()
                .filter(|&&t| t >= id as usize)
                .map(|&t| (t, kids.partition_point(|&c| c as usize <= t) as u32))
                .collect();
            TrajectoryLog { id, checkpoints }
        })
        .collect())
}

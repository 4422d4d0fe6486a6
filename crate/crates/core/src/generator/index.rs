use crate::model::{torus_distance_sq, ModelParams};
use crate::scalar::Scalar;

use super::sphere::Sphere;
use super::State;

/// Source of candidate parents for each arrival.
pub(crate) trait CandidateIndex<T: Scalar> {
    /// Appends every existing node whose sphere at time `t - 1` holds `pos`.
    fn candidates(&mut self, state: &State<T>, t: usize, pos: &[T], out: &mut Vec<u32>);

    /// Called after step `t` with the newborn id and the ids that gained an
    /// in-link during the step.
    fn after_step(&mut self, state: &State<T>, t: usize, newborn: u32, gained: &[u32]);
}

/// Reference scan over every prior node.
pub(crate) struct NaiveScan;

impl<T: Scalar> CandidateIndex<T> for NaiveScan {
    fn candidates(&mut self, state: &State<T>, t: usize, pos: &[T], out: &mut Vec<u32>) {
        let denom = T::of_usize(t - 1);
        let m = state.m;
        for u in 0..t - 1 {
            let dist_sq = torus_distance_sq(&state.pos[u * m..(u + 1) * m], pos);
            if state.sphere.covers(state.in_deg[u], denom, dist_sq) {
                out.push(u as u32 + 1);
            }
        }
    }

    fn after_step(&mut self, _: &State<T>, _: usize, _: u32, _: &[u32]) {}
}

/// Uniform bucket grid for nodes with small spheres plus an explicit list
/// of "wide" nodes whose sphere is capped or larger than one bucket.
///
/// Invariant: a node outside the wide list has radius at most `r0` (just under
/// one bucket side) for as long as its in-degree is unchanged, because spheres
/// only shrink with time. Such a node can only cover points in its own or an
/// adjacent bucket. Every candidate is still distance-tested exactly.
pub(crate) struct BucketGrid<T> {
    side: usize,
    m: usize,
    buckets: Vec<Vec<u32>>,
    wide: Vec<u32>,
    is_wide: Vec<bool>,
    r0_sq: T,
    offsets: Vec<Vec<isize>>,
    scratch: Vec<usize>,
}

impl<T: Scalar> BucketGrid<T> {
    /// `B = max(k, floor((n / (a2 + 64·a1))^{1/m}))` buckets per axis.
    pub(crate) fn new(params: &ModelParams<T>, k: usize) -> Self {
        let m = params.m;
        let per_bucket = params.a2.f64() + 64.0 * params.a1.f64();
        let target = (params.n as f64 / per_bucket).powf(1.0 / m as f64).floor() as usize;
        let mut side = target.max(k).max(1);
        // Keep the bucket table bounded for high dimensions.
        while side > 1 && side.checked_pow(m as u32).is_none_or(|c| c > 4 * params.n.max(1)) {
            side -= 1;
        }
        let cells = side.pow(m as u32);
        let r0 = T::of(0.99) / T::of_usize(side);
        let offsets = if side >= 3 {
            let mut all = vec![Vec::new()];
            for _ in 0..m {
                all = all
                    .into_iter()
                    .flat_map(|o: Vec<isize>| {
                        (-1..=1).map(move |d| {
                            let mut o = o.clone();
                            o.push(d);
                            o
                        })
                    })
                    .collect();
            }
            all
        } else {
            Vec::new()
        };
        Self {
            side,
            m,
            buckets: vec![Vec::new(); cells],
            wide: Vec::new(),
            is_wide: Vec::with_capacity(params.n),
            r0_sq: r0 * r0,
            offsets,
            scratch: Vec::new(),
        }
    }

    #[cfg(test)]
    pub(crate) fn side(&self) -> usize {
        self.side
    }

    fn axis_bucket(&self, x: T) -> usize {
        let b = (x * T::of_usize(self.side)).floor().to_usize().unwrap_or(0);
        b.min(self.side - 1)
    }

    fn bucket_of(&self, pos: &[T]) -> usize {
        pos.iter().fold(0, |acc, &x| acc * self.side + self.axis_bucket(x))
    }

    fn neighbourhood(&mut self, pos: &[T]) {
        self.scratch.clear();
        if self.offsets.is_empty() {
            // Fewer than three buckets per axis: adjacent sets would repeat.
            self.scratch.extend(0..self.buckets.len());
            return;
        }
        let side = self.side as isize;
        let home: Vec<isize> = pos.iter().map(|&x| self.axis_bucket(x) as isize).collect();
        for off in &self.offsets {
            let idx =
                home.iter().zip(off).fold(0usize, |acc, (&h, &d)| acc * self.side + (h + d).rem_euclid(side) as usize);
            self.scratch.push(idx);
        }
    }

    fn maybe_widen(&mut self, sphere: &Sphere<T>, id: u32, in_deg: u32, t: T) {
        let u = id as usize - 1;
        if self.is_wide[u] {
            return;
        }
        let wide = match sphere.radius_sq_at(in_deg, t) {
            None => true,
            Some(r_sq) => r_sq > self.r0_sq,
        };
        if wide {
            self.is_wide[u] = true;
            self.wide.push(id);
        }
    }
}

impl<T: Scalar> CandidateIndex<T> for BucketGrid<T> {
    fn candidates(&mut self, state: &State<T>, t: usize, pos: &[T], out: &mut Vec<u32>) {
        let denom = T::of_usize(t - 1);
        let m = self.m;
        let sphere = &state.sphere;

        let mut keep = 0;
        for i in 0..self.wide.len() {
            let id = self.wide[i];
            let u = id as usize - 1;
            let deg = state.in_deg[u];
            match sphere.radius_sq_at(deg, denom) {
                Some(r_sq) if r_sq <= self.r0_sq => {
                    // Shrunk below one bucket; the grid scan covers it from now on.
                    self.is_wide[u] = false;
                    continue;
                }
                _ => {}
            }
            let dist_sq = torus_distance_sq(&state.pos[u * m..(u + 1) * m], pos);
            if sphere.covers(deg, denom, dist_sq) {
                out.push(id);
            }
            self.wide[keep] = id;
            keep += 1;
        }
        self.wide.truncate(keep);

        self.neighbourhood(pos);
        for &b in &self.scratch {
            for &id in &self.buckets[b] {
                let u = id as usize - 1;
                if self.is_wide[u] {
                    continue;
                }
                let dist_sq = torus_distance_sq(&state.pos[u * m..(u + 1) * m], pos);
                if sphere.covers(state.in_deg[u], denom, dist_sq) {
                    out.push(id);
                }
            }
        }
    }

    fn after_step(&mut self, state: &State<T>, t: usize, newborn: u32, gained: &[u32]) {
        let next = T::of_usize(t);
        let u = newborn as usize - 1;
        let b = self.bucket_of(&state.pos[u * self.m..(u + 1) * self.m]);
        self.buckets[b].push(newborn);
        self.is_wide.push(false);
        let sphere = state.sphere;
        self.maybe_widen(&sphere, newborn, state.in_deg[u], next);
        for &id in gained {
            self.maybe_widen(&sphere, id, state.in_deg[id as usize - 1], next);
        }
    }
}

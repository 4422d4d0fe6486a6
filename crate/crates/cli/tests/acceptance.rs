//! Acceptance criteria for the simulator, one verdict line per criterion.
//!
//! Runs without the libtest harness so the verdicts are always printed:
//! `cargo test --test acceptance` runs everything, and
//! `cargo test --test acceptance -- 3 9` runs only criteria 3 and 9.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use spa_cli::config::{preset, ExperimentConfig, Step};
use spa_cli::pipeline::{run_pipeline, PipelineOutcome};
use spa_cli::verify::{Check, Outcome, Tolerances};
use spa_core::analysis::{cn_theory_case3, density_class_stats, region_stats};
use spa_core::estimators::distance_from_cn;
use spa_core::generator::{generate, generate_naive};
use spa_core::io::{read_graph, LoadedGraph};
use spa_core::model::{diagonal_layout, SpaRng};
use spa_core::ModelParams64;
use tempfile::TempDir;

struct Run {
    _dir: TempDir,
    cfg: ExperimentConfig,
    outcome: PipelineOutcome,
    loaded: LoadedGraph<f64>,
    secs: f64,
}

impl Run {
    fn new(name: &str) -> Result<Self> {
        let cfg = preset(name).with_context(|| format!("preset {name}"))?;
        let dir = tempfile::tempdir()?;
        let start = Instant::now();
        let outcome = run_pipeline(&cfg, Some(dir.path()))?;
        let secs = start.elapsed().as_secs_f64();
        let loaded = read_graph(dir.path())?;
        Ok(Self { _dir: dir, cfg, outcome, loaded, secs })
    }

    fn tolerances(&self) -> Result<&Tolerances> {
        match self.cfg.step(|s| matches!(s, Step::Verify { .. })) {
            Some(Step::Verify { options }) => Ok(&options.tolerances),
            _ => bail!("preset has no verify step"),
        }
    }

    /// Outcomes of one check; every one must pass.
    fn check(&self, check: Check) -> Result<(bool, String)> {
        let report = self.outcome.report.as_ref().context("no verify report")?;
        let found: Vec<&Outcome> = report.of(check).collect();
        ensure!(!found.is_empty(), "check {check} did not run");
        let text = found.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("; ");
        Ok((found.iter().all(|o| o.passed), text))
    }
}

#[derive(Default)]
struct Runs {
    distance: Option<Run>,
    density: Option<Run>,
    degree: Option<Run>,
}

impl Runs {
    fn distance(&mut self) -> Result<&Run> {
        if self.distance.is_none() {
            self.distance = Some(Run::new("paper-diagonal-distance")?);
        }
        Ok(self.distance.as_ref().unwrap())
    }

    fn density(&mut self) -> Result<&Run> {
        if self.density.is_none() {
            self.density = Some(Run::new("paper-density-hist")?);
        }
        Ok(self.density.as_ref().unwrap())
    }

    fn degree(&mut self) -> Result<&Run> {
        if self.degree.is_none() {
            self.degree = Some(Run::new("paper-degree-distribution")?);
        }
        Ok(self.degree.as_ref().unwrap())
    }
}

type Verdict = (bool, String);

fn c1_oracle(_: &mut Runs) -> Result<Verdict> {
    let params = ModelParams64::new(0.7, 2.0, 0.6, 2, 2000)?;
    let layout = diagonal_layout(1.6)?;
    let start = Instant::now();
    let mut same = 0;
    for seed in 1..=5 {
        let fast = generate(&params, &layout, seed)?;
        let slow = generate_naive(&params, &layout, seed)?;
        if fast.nodes() == slow.nodes() && fast.edges() == slow.edges() {
            same += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((same == 5 && secs < 30.0, format!("{same}/5 seeds bit-identical in {secs:.2} s (limit 30 s)")))
}

fn c2_population(runs: &mut Runs) -> Result<Verdict> {
    let run = runs.distance()?;
    let g = &run.loaded.graph;
    let dense = g.layout().densest_cells();
    let count = g.nodes().iter().filter(|v| dense.contains(&v.cell)).count();

    let start = Instant::now();
    generate(g.params(), g.layout(), run.cfg.seed)?;
    let secs = start.elapsed().as_secs_f64();
    let ok = count.abs_diff(40_000) <= 700 && secs <= 60.0;
    Ok((ok, format!("dense cells hold {count} nodes (40000 ± 700), generation {secs:.2} s (limit 60 s)")))
}

fn c3_mean_outdeg(runs: &mut Runs) -> Result<Verdict> {
    let g = &runs.density()?.loaded.graph;
    let summary = region_stats(g);
    let classes = density_class_stats(g, &summary);
    let max = g.layout().max_density();
    let dense = classes.iter().find(|c| c.density == max).context("dense class")?.mean_outdeg();
    let sparse = classes.iter().find(|c| c.density < max).context("sparse class")?.mean_outdeg();
    let (dlo, dhi) = (5.85 * 0.9, 5.85 * 1.1);
    let (slo, shi) = (1.45 * 0.9, 1.45 * 1.25);
    let ok = (dlo..=dhi).contains(&dense) && (slo..=shi).contains(&sparse);
    Ok((ok, format!("dense {dense:.4} in [{dlo:.4}, {dhi:.4}], sparse {sparse:.4} in [{slo:.4}, {shi:.4}]")))
}

fn c4_cross_edges(runs: &mut Runs) -> Result<Verdict> {
    let run = runs.distance()?;
    let base = region_stats(&run.loaded.graph).cross_fraction();
    let params = *run.loaded.graph.params();
    let layout = run.loaded.graph.layout().clone();
    let jobs: Vec<(usize, u64)> = [100_000, 200_000].iter().flat_map(|&n| (1..=3).map(move |s| (n, s))).collect();
    let fractions: Vec<(usize, f64)> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let p = ModelParams64 { n, ..params };
            let g = generate(&p, &layout, seed).expect("generation");
            (n, region_stats(&g).cross_fraction())
        })
        .collect();
    let mean = |n: usize| fractions.iter().filter(|f| f.0 == n).map(|f| f.1).sum::<f64>() / 3.0;
    let (small, large) = (mean(100_000), mean(200_000));
    let ok = base < 0.10 && large < small;
    Ok((ok, format!("fraction {base:.4} at n=1e5 (< 0.10); 3-seed means {small:.4} at 1e5, {large:.4} at 2e5")))
}

fn c5_tail(runs: &mut Runs) -> Result<Verdict> {
    let run = runs.degree()?;
    let tol = run.tolerances()?;
    ensure!(run.cfg.params.n == 1_000_000, "degree preset must use n = 1e6");
    ensure!(tol.tail_all == 0.2 && tol.tail_dense == 0.2 && tol.tail_sparse == Some(0.25), "tail tolerances drifted");
    let (ok, text) = run.check(Check::TailExponent)?;
    let ok = ok && run.secs <= 600.0;
    Ok((ok, format!("{text}; pipeline {:.1} s (limit 600 s)", run.secs)))
}

fn c6_trajectories(runs: &mut Runs) -> Result<Verdict> {
    let run = runs.distance()?;
    let tol = run.tolerances()?;
    ensure!(
        tol.trajectory_min_degree == 100
            && tol.trajectory_min_nodes == 100
            && tol.trajectory_interior == 1.1
            && tol.trajectory_max_median == 0.15
            && tol.omega == 3.0,
        "trajectory tolerances drifted"
    );
    run.check(Check::Trajectories)
}

fn c7_nested(runs: &mut Runs) -> Result<Verdict> {
    let run = runs.distance()?;
    ensure!(run.tolerances()?.case2_band == [0.85, 1.15], "nested band drifted");
    run.check(Check::Case2)
}

fn c8_scaling(runs: &mut Runs) -> Result<Verdict> {
    let params = ModelParams64::new(0.7, 2.0, 0.7, 2, 100_000)?;
    let pole = 1.0 / (params.p * params.a1);
    let mut rng = SpaRng::new(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let j = 1 + rng.below(1000) as u32;
        let k = j + rng.below(10_000) as u32;
        let d = 1e-4 + rng.uniform() * 0.7;
        let rho = pole * (0.01 + 0.98 * rng.uniform());
        let cn = cn_theory_case3(k, j, d, &params, rho)?;
        let back = distance_from_cn(k, j, cn, &params, rho)?;
        worst = worst.max(((back - d) / d).abs());
    }
    let run = runs.distance()?;
    let tol = run.tolerances()?;
    ensure!(tol.case3_ratio == 5 && tol.case3_max_median == 0.35, "scaling tolerances drifted");
    let (ok, text) = run.check(Check::Case3)?;
    Ok((ok && worst <= 1e-9, format!("round trip worst relative error {worst:.2e} (<= 1e-9); {text}")))
}

fn c9_distance(runs: &mut Runs) -> Result<Verdict> {
    let run = runs.distance()?;
    let tol = run.tolerances()?;
    ensure!(tol.distance_band == [0.8, 1.25] && tol.uniform_excess == 0.2, "distance tolerances drifted");
    run.check(Check::DistanceEstimator)
}

fn c10_density(runs: &mut Runs) -> Result<Verdict> {
    let run = runs.density()?;
    let tol = run.tolerances()?;
    ensure!(tol.density_tol == 0.15 && tol.sparse_mode_range == Some([0.9, 1.4]), "density tolerances drifted");
    run.check(Check::DensityEstimator)
}

fn hash_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.insert(name, hex::encode(Sha256::digest(std::fs::read(&path)?)));
    }
    Ok(out)
}

fn c11_threads(_: &mut Runs) -> Result<Verdict> {
    let mut hashes = Vec::new();
    let root = tempfile::tempdir()?;
    for threads in [1, 8] {
        let dir = root.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_spa"))
            .args(["run", "--preset", "paper-diagonal-distance-ci", "--threads", &threads.to_string(), "--out"])
            .arg(&dir)
            .output()?;
        // Exit 1 only reports failed checks; the artifacts are complete.
        ensure!(
            matches!(status.status.code(), Some(0 | 1)),
            "spa run failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        hashes.push(hash_dir(&dir)?);
    }
    let files = hashes[0].len();
    let ok = files > 1 && hashes[0] == hashes[1];
    Ok((ok, format!("{files} artifacts, hashes {} across --threads 1 and 8", if ok { "identical" } else { "differ" })))
}

type Criterion = fn(&mut Runs) -> Result<Verdict>;

const CRITERIA: [(u32, &str, Criterion); 11] = [
    (1, "oracle equivalence", c1_oracle),
    (2, "region populations", c2_population),
    (3, "mean out-degree", c3_mean_outdeg),
    (4, "cross-border edges", c4_cross_edges),
    (5, "tail exponent", c5_tail),
    (6, "degree trajectories", c6_trajectories),
    (7, "nested pairs", c7_nested),
    (8, "scaling pairs", c8_scaling),
    (9, "distance estimator", c9_distance),
    (10, "density estimator", c10_density),
    (11, "thread determinism", c11_threads),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut runs = Runs::default();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, f) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        ran += 1;
        let (ok, text) = f(&mut runs).unwrap_or_else(|e| (false, format!("error: {e:#}")));
        if !ok {
            failed += 1;
        }
        println!("{} criterion {id} ({name}): {text}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {ran} criteria, {failed} failed");
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

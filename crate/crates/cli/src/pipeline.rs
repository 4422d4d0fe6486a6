//! Stage functions over a run directory and the sequential pipeline.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;
use spa_core::analysis::{
    ccdf_slope_diagnostic, jf_scale, region_stats, sample_pairs, tail_exponent, Adjacency, CaseConfig, DegreeHistogram,
    FitOptions, PairOptions, PairRecord, RegionFilter, RegionSummary, TailOutcome,
};
use spa_core::estimators::{
    estimate_all_pairs, estimate_densities, DensityEstimate, DistanceEstimate, EstimateOptions,
};
use spa_core::generator::{generate, generate_naive, record_trajectories, Engine, GraphMeta, Watch};
use spa_core::io::{self, LoadedGraph, RunMeta};

use crate::config::{ExperimentConfig, Step, VariantChoice};
use crate::verify::{self, VerifyOptions, VerifyReport};
use crate::{CliError, CliResult};

/// Written when a stage fails; lists the stages that completed before it.
pub const ERROR_MANIFEST: &str = "error.json";
pub const VERIFY_FILE: &str = "verify.json";
pub const TAILFIT_FILE: &str = "tailfit.json";

/// Everything a later stage reads, removed when the graph is regenerated.
const DOWNSTREAM: [&str; 9] = [
    io::PAIRS_FILE,
    io::ESTIMATES_FILE,
    io::DENSITIES_FILE,
    io::REGIONSTATS_FILE,
    io::HIST_FILE,
    io::TRAJECTORIES_FILE,
    TAILFIT_FILE,
    VERIFY_FILE,
    ERROR_MANIFEST,
];

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn remove_if_present(path: &Path) -> CliResult<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
        _ => Ok(()),
    }
}

/// A run directory with the graph and adjacency cached after first use.
pub struct RunDir {
    dir: PathBuf,
    loaded: Option<LoadedGraph<f64>>,
    adj: Option<Adjacency>,
}

impl RunDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), loaded: None, adj: None }
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Creates the directory and writes `meta.json` for `cfg` without
    /// generating anything.
    pub fn init(&mut self, cfg: &ExperimentConfig) -> CliResult<()> {
        let layout = cfg.validate()?;
        std::fs::create_dir_all(&self.dir)?;
        let engine = match cfg.step(|s| matches!(s, Step::Generate { .. })) {
            Some(Step::Generate { naive: true, .. }) => Engine::Naive,
            _ => Engine::Grid,
        };
        let meta = GraphMeta { params: cfg.params, layout, seed: cfg.seed, engine };
        io::write_meta(&self.file(io::META_FILE), &RunMeta::new(&meta, Some(recorded_config(cfg)?)))?;
        Ok(())
    }

    pub fn generate(&mut self, cfg: &ExperimentConfig, naive: bool, watch: Option<&str>) -> CliResult<()> {
        let layout = cfg.validate()?;
        std::fs::create_dir_all(&self.dir)?;
        for name in DOWNSTREAM {
            remove_if_present(&self.file(name))?;
        }
        let engine = if naive { Engine::Naive } else { Engine::Grid };
        let (graph, logs) = match watch {
            Some(spec) => {
                let watch: Watch = spec.parse()?;
                let (g, logs) = record_trajectories(&cfg.params, &layout, cfg.seed, engine, &watch)?;
                (g, Some(logs))
            }
            None if naive => (generate_naive(&cfg.params, &layout, cfg.seed)?, None),
            None => (generate(&cfg.params, &layout, cfg.seed)?, None),
        };
        log::info!("generated {} nodes, {} edges", graph.len(), graph.edges().len());
        let config = recorded_config(cfg)?;
        io::write_graph(&self.dir, &graph, Some(config.clone()))?;
        if let Some(logs) = logs {
            io::write_trajectories(create(&self.file(io::TRAJECTORIES_FILE))?, &logs)?;
        }
        self.loaded =
            Some(LoadedGraph { meta: RunMeta::new(graph.meta(), Some(config)), graph, mismatches: Vec::new() });
        self.adj = None;
        Ok(())
    }

    pub fn loaded(&mut self) -> CliResult<&LoadedGraph<f64>> {
        if self.loaded.is_none() {
            verify::require_graph(&self.dir)?;
            let loaded = io::read_graph(&self.dir)?;
            if !loaded.mismatches.is_empty() {
                log::warn!("{} stored degree or cell values disagree with edges.tsv", loaded.mismatches.len());
            }
            self.loaded = Some(loaded);
        }
        Ok(self.loaded.as_ref().expect("loaded above"))
    }

    fn graph_and_adj(&mut self) -> CliResult<(&LoadedGraph<f64>, &Adjacency)> {
        self.loaded()?;
        let loaded = self.loaded.as_ref().expect("loaded above");
        let adj = self.adj.get_or_insert_with(|| Adjacency::new(&loaded.graph));
        Ok((loaded, adj))
    }

    pub fn stats(&mut self) -> CliResult<RegionSummary<f64>> {
        let summary = region_stats(&self.loaded()?.graph);
        io::write_region_stats(create(&self.file(io::REGIONSTATS_FILE))?, &summary)?;
        Ok(summary)
    }

    pub fn hist(&mut self, region: &RegionFilter, fit: bool) -> CliResult<(DegreeHistogram, Option<TailOutcome>)> {
        let g = &self.loaded()?.graph;
        let hist = DegreeHistogram::from_graph(g, region);
        let outcome = fit.then(|| tail_exponent(&hist, &FitOptions::default()));
        let jf = jf_scale(g.params(), g.layout().max_density());
        io::write_hist(create(&self.file(io::HIST_FILE))?, &hist)?;
        match &outcome {
            Some(TailOutcome::Fit(f)) => write_json(
                &self.file(TAILFIT_FILE),
                &json!({
                    "region": region.label(),
                    "exponent": f.exponent,
                    "std_err": f.std_err,
                    "j_min": f.j_min,
                    "j_max": f.j_max,
                    "tail_nodes": f.tail_nodes,
                    "ks": f.ks,
                    "ccdf_slope": ccdf_slope_diagnostic(&hist, f.j_min),
                    "jf_scale": jf,
                }),
            )?,
            Some(TailOutcome::NoFit { reason }) => {
                write_json(&self.file(TAILFIT_FILE), &json!({ "region": region.label(), "no_fit": reason }))?
            }
            None => remove_if_present(&self.file(TAILFIT_FILE))?,
        }
        Ok((hist, outcome))
    }

    pub fn pairs(&mut self, min_deg: u32, sample: usize, cases: CaseConfig<f64>) -> CliResult<Vec<PairRecord<f64>>> {
        let path = self.file(io::PAIRS_FILE);
        let (loaded, adj) = self.graph_and_adj()?;
        let opts = PairOptions { min_deg, sample, seed: loaded.meta.seed, cases };
        let pairs = sample_pairs(&loaded.graph, adj, &opts)?;
        io::write_pairs(create(&path)?, &pairs)?;
        Ok(pairs)
    }

    /// Estimates for each requested variant, concatenated in variant order.
    pub fn estimate_distance(&mut self, variant: VariantChoice) -> CliResult<Vec<DistanceEstimate<f64>>> {
        let pairs_path = self.file(io::PAIRS_FILE);
        if !pairs_path.is_file() {
            return Err(CliError::MissingArtifact {
                file: io::PAIRS_FILE.into(),
                stage: "pairs".into(),
                dir: self.dir.clone(),
            });
        }
        let path = self.file(io::ESTIMATES_FILE);
        let (loaded, adj) = self.graph_and_adj()?;
        let pairs = io::read_pairs(File::open(&pairs_path)?, &loaded.graph)?;
        let mut all = Vec::new();
        for v in variant.variants() {
            all.extend(estimate_all_pairs(&loaded.graph, adj, &pairs, &EstimateOptions::new(v)));
        }
        io::write_estimates(create(&path)?, &all)?;
        Ok(all)
    }

    pub fn estimate_density(&mut self, min_deg: u32) -> CliResult<Vec<DensityEstimate<f64>>> {
        let path = self.file(io::DENSITIES_FILE);
        let (loaded, adj) = self.graph_and_adj()?;
        let est = estimate_densities(&loaded.graph, adj, min_deg);
        io::write_densities(create(&path)?, &loaded.graph, &est)?;
        Ok(est)
    }

    /// Runs the checks and writes `verify.json`.
    pub fn verify(&mut self, opts: &VerifyOptions) -> CliResult<VerifyReport> {
        let dir = self.dir.clone();
        let report = verify::verify(&dir, self.loaded()?, opts)?;
        write_json(&self.file(VERIFY_FILE), &report)?;
        Ok(report)
    }

    fn run_step(&mut self, cfg: &ExperimentConfig, step: &Step) -> CliResult<Option<VerifyReport>> {
        match step {
            Step::Generate { naive, watch } => self.generate(cfg, *naive, watch.as_deref())?,
            Step::Stats => {
                self.stats()?;
            }
            Step::Hist { region, fit } => {
                self.hist(&region.parse()?, *fit)?;
            }
            Step::Pairs { min_deg, sample, omega, eps } => {
                self.pairs(*min_deg, *sample, CaseConfig::new(*omega, *eps)?)?;
            }
            Step::EstimateDistance { variant } => {
                self.estimate_distance(*variant)?;
            }
            Step::EstimateDensity { min_deg } => {
                self.estimate_density(*min_deg)?;
            }
            Step::Verify { options } => return Ok(Some(self.verify(options)?)),
        }
        Ok(None)
    }
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub dir: PathBuf,
    pub completed: Vec<String>,
    pub report: Option<VerifyReport>,
}

impl PipelineOutcome {
    /// True unless a verify step ran and reported a failure.
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_none_or(VerifyReport::passed)
    }
}

/// Config as stored in `meta.json`. The output location is dropped so the
/// artifacts do not depend on where they were written.
fn recorded_config(cfg: &ExperimentConfig) -> CliResult<serde_json::Value> {
    Ok(serde_json::to_value(ExperimentConfig { out: None, ..cfg.clone() })?)
}

/// Output directory: explicit argument, then the config's `out`, then
/// `runs/<name>`.
pub fn resolve_out(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.name.as_deref().unwrap_or("experiment")))
}

/// Validates `cfg`, writes `meta.json`, then runs the steps in order. A
/// failing stage leaves earlier outputs in place and writes
/// [`ERROR_MANIFEST`].
pub fn run_pipeline(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<PipelineOutcome> {
    cfg.validate()?;
    let dir = resolve_out(cfg, out);
    let mut run = RunDir::new(&dir);
    run.init(cfg)?;
    remove_if_present(&dir.join(ERROR_MANIFEST))?;

    let mut completed = Vec::new();
    let mut report = None;
    for step in &cfg.steps {
        log::info!("stage {}", step.name());
        match run.run_step(cfg, step) {
            Ok(r) => {
                if r.is_some() {
                    report = r;
                }
                completed.push(step.name().to_string());
            }
            Err(e) => {
                let manifest = json!({ "failed_step": step.name(), "error": e.to_string(), "completed": completed });
                write_json(&dir.join(ERROR_MANIFEST), &manifest)?;
                return Err(CliError::Stage { stage: step.name().into(), source: Box::new(e) });
            }
        }
    }
    Ok(PipelineOutcome { dir, completed, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    fn small() -> ExperimentConfig {
        let mut cfg = preset("paper-diagonal-distance-ci").unwrap();
        cfg.params.n = 3000;
        cfg
    }

    #[test]
    fn empty_pipeline_writes_only_meta() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.steps.clear();
        let out = run_pipeline(&cfg, Some(dir.path())).unwrap();
        assert!(out.passed());
        let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from(io::META_FILE)]);
    }

    #[test]
    fn failed_stage_leaves_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.steps =
            vec![Step::Generate { naive: false, watch: None }, Step::EstimateDistance { variant: VariantChoice::All }];
        let err = run_pipeline(&cfg, Some(dir.path())).unwrap_err();
        assert!(err.to_string().contains("pairs"), "{err}");
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(ERROR_MANIFEST)).unwrap()).unwrap();
        assert_eq!(manifest["failed_step"], "estimate-distance");
        assert_eq!(manifest["completed"], json!(["generate"]));
        assert!(dir.path().join(io::EDGES_FILE).is_file());
    }

    #[test]
    fn invalid_config_fails_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("run");
        let mut cfg = small();
        cfg.params.p = 1.0;
        cfg.params.a1 = 0.9;
        assert!(run_pipeline(&cfg, Some(&target)).is_err());
        assert!(!target.exists());
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let read_all = |d: &Path| {
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(d)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            files
        };
        run_pipeline(&cfg, Some(dir.path())).unwrap();
        let first = read_all(dir.path());
        run_pipeline(&cfg, Some(dir.path())).unwrap();
        assert_eq!(read_all(dir.path()), first);
        assert!(first.iter().any(|(n, _)| n == io::ESTIMATES_FILE));

        let other = tempfile::tempdir().unwrap();
        let moved = ExperimentConfig { out: Some(other.path().to_path_buf()), ..cfg };
        run_pipeline(&moved, None).unwrap();
        assert_eq!(read_all(other.path()), first);
    }
}

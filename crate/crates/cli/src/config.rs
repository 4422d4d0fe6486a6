//! Experiment configuration files and built-in presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spa_core::analysis::{CaseConfig, RegionFilter};
use spa_core::estimators::DistanceVariant;
use spa_core::generator::Watch;
use spa_core::model::diagonal_layout;
use spa_core::{DensityLayout64, ModelParams64};

use crate::verify::VerifyOptions;
use crate::{CliError, CliResult};

/// Where the density layout comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum LayoutSource {
    /// Four dense diagonal cells in a 4×4 grid over the 2-torus.
    Diagonal {
        rho_d: f64,
    },
    Uniform {
        k: usize,
        m: usize,
    },
    /// JSON layout file; relative paths resolve against the config file.
    File {
        path: PathBuf,
    },
    Inline(DensityLayout64),
}

/// Distance variants to run: one, or all three in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantChoice {
    All,
    One(DistanceVariant),
}

impl VariantChoice {
    pub fn variants(self) -> Vec<DistanceVariant> {
        match self {
            VariantChoice::All => DistanceVariant::ALL.to_vec(),
            VariantChoice::One(v) => vec![v],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VariantChoice::All => "all",
            VariantChoice::One(v) => v.label(),
        }
    }
}

impl std::str::FromStr for VariantChoice {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        if s == "all" {
            return Ok(VariantChoice::All);
        }
        Ok(VariantChoice::One(s.parse()?))
    }
}

impl Serialize for VariantChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for VariantChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn default_region() -> String {
    "all".into()
}

fn default_pair_min_deg() -> u32 {
    30
}

fn default_sample() -> usize {
    1000
}

fn default_omega() -> f64 {
    3.0
}

fn default_eps() -> f64 {
    0.1
}

fn default_density_min_deg() -> u32 {
    10
}

fn default_variant() -> VariantChoice {
    VariantChoice::All
}

/// One pipeline stage with its options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Step {
    Generate {
        #[serde(default, skip_serializing_if = "is_false")]
        naive: bool,
        /// Watch spec for degree trajectories (`all`, `ids:..`, `born:..;cells:..`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        watch: Option<String>,
    },
    Stats,
    Hist {
        #[serde(default = "default_region")]
        region: String,
        #[serde(default, skip_serializing_if = "is_false")]
        fit: bool,
    },
    Pairs {
        #[serde(default = "default_pair_min_deg")]
        min_deg: u32,
        #[serde(default = "default_sample")]
        sample: usize,
        #[serde(default = "default_omega")]
        omega: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
    EstimateDistance {
        #[serde(default = "default_variant")]
        variant: VariantChoice,
    },
    EstimateDensity {
        #[serde(default = "default_density_min_deg")]
        min_deg: u32,
    },
    Verify {
        #[serde(default)]
        options: VerifyOptions,
    },
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::Generate { .. } => "generate",
            Step::Stats => "stats",
            Step::Hist { .. } => "hist",
            Step::Pairs { .. } => "pairs",
            Step::EstimateDistance { .. } => "estimate-distance",
            Step::EstimateDensity { .. } => "estimate-density",
            Step::Verify { .. } => "verify",
        }
    }

    pub fn pairs_default() -> Self {
        Step::Pairs {
            min_deg: default_pair_min_deg(),
            sample: default_sample(),
            omega: default_omega(),
            eps: default_eps(),
        }
    }

    fn validate(&self) -> CliResult<()> {
        match self {
            Step::Generate { watch: Some(w), .. } => {
                w.parse::<Watch>()?;
            }
            Step::Hist { region, .. } => {
                region.parse::<RegionFilter>()?;
            }
            Step::Pairs { omega, eps, .. } => {
                CaseConfig::new(*omega, *eps)?;
            }
            Step::Verify { options } => options.validate()?,
            _ => {}
        }
        Ok(())
    }
}

/// A complete experiment: model, layout, seed, output directory and stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub params: ModelParams64,
    pub layout: LayoutSource,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub steps: Vec<Step>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Loads a config file; a `file` layout path is made relative to it.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let LayoutSource::File { path: p } = &mut cfg.layout {
            if p.is_relative() {
                if let Some(base) = path.parent() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Pretty JSON with a trailing newline; parsing it back and
    /// re-serialising yields the same bytes.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }

    pub fn layout(&self) -> CliResult<DensityLayout64> {
        Ok(match &self.layout {
            LayoutSource::Diagonal { rho_d } => diagonal_layout(*rho_d)?,
            LayoutSource::Uniform { k, m } => DensityLayout64::uniform(*k, *m)?,
            LayoutSource::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("layout {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("layout {}: {e}", path.display())))?
            }
            LayoutSource::Inline(l) => l.clone(),
        })
    }

    /// Checks everything that can be checked without generating: the
    /// parameters against the layout (including `p·a1·max ρ < 1`) and the
    /// options of every step.
    pub fn validate(&self) -> CliResult<DensityLayout64> {
        let layout = self.layout()?;
        self.params.validate_with(&layout)?;
        for step in &self.steps {
            step.validate()?;
        }
        Ok(layout)
    }

    pub fn step<F: Fn(&Step) -> bool>(&self, pred: F) -> Option<&Step> {
        self.steps.iter().find(|s| pred(s))
    }
}

pub const PRESET_NAMES: [&str; 7] = [
    "paper-diagonal-layout",
    "paper-degree-distribution",
    "paper-degree-distribution-ci",
    "paper-diagonal-distance",
    "paper-diagonal-distance-ci",
    "paper-density-hist",
    "paper-density-hist-ci",
];

fn params(p: f64, a2: f64, n: usize) -> ModelParams64 {
    ModelParams64 { a1: 0.7, a2, p, m: 2, n }
}

fn verify_step(options: VerifyOptions) -> Step {
    Step::Verify { options }
}

/// Built-in experiments. Names ending in `-ci` reduce `n` and say so.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    use crate::verify::Check::*;
    let dense_watch = "born:1-10000;cells:0,5,10,15".to_string();

    let distance = |n: usize| {
        let mut v = VerifyOptions::with_checks(vec![
            DegreeConsistency,
            EdgeFeasibility,
            RegionPopulation,
            CrossFraction,
            Trajectories,
            Case2,
            Case3,
            DistanceEstimator,
        ]);
        if n < 100_000 {
            v.tolerances.trajectory_min_nodes = 20;
            v.tolerances.case_min_pairs = 5;
        }
        ExperimentConfig {
            name: None,
            params: params(0.7, 2.0, n),
            layout: LayoutSource::Diagonal { rho_d: 1.6 },
            seed: 1,
            out: None,
            steps: vec![
                Step::Generate { naive: false, watch: Some(dense_watch.clone()) },
                Step::Stats,
                Step::Hist { region: "all".into(), fit: true },
                Step::pairs_default(),
                Step::EstimateDistance { variant: VariantChoice::All },
                Step::EstimateDensity { min_deg: 10 },
                verify_step(v),
            ],
        }
    };

    let density = |n: usize| {
        let mut v = VerifyOptions::with_checks(vec![
            DegreeConsistency,
            EdgeFeasibility,
            RegionPopulation,
            MeanOutdeg,
            RegionEdges,
            CrossFraction,
            DensityEstimator,
        ]);
        v.tolerances.sparse_mode_range = Some([0.9, 1.4]);
        ExperimentConfig {
            name: None,
            params: params(0.6, 2.0, n),
            layout: LayoutSource::Diagonal { rho_d: 1.6 },
            seed: 1,
            out: None,
            steps: vec![
                Step::Generate { naive: false, watch: None },
                Step::Stats,
                Step::Hist { region: "all".into(), fit: false },
                Step::EstimateDensity { min_deg: 10 },
                verify_step(v),
            ],
        }
    };

    let degree = |n: usize, tol: f64| {
        let mut v = VerifyOptions::with_checks(vec![
            DegreeConsistency,
            EdgeFeasibility,
            RegionPopulation,
            CrossFraction,
            TailExponent,
            TailHomogeneity,
        ]);
        v.tolerances.tail_all = tol;
        v.tolerances.tail_dense = tol;
        v.tolerances.tail_sparse = Some(if tol > 0.2 { tol } else { 0.25 });
        ExperimentConfig {
            name: None,
            params: params(0.7, 1.0, n),
            layout: LayoutSource::Diagonal { rho_d: 1.2 },
            seed: 1,
            out: None,
            steps: vec![
                Step::Generate { naive: false, watch: None },
                Step::Stats,
                Step::Hist { region: "all".into(), fit: true },
                verify_step(v),
            ],
        }
    };

    let mut cfg = match name {
        "paper-diagonal-layout" => ExperimentConfig {
            name: None,
            params: params(0.6, 2.0, 1000),
            layout: LayoutSource::Diagonal { rho_d: 1.6 },
            seed: 1,
            out: None,
            steps: vec![Step::Generate { naive: false, watch: None }, Step::Stats],
        },
        "paper-degree-distribution" => degree(1_000_000, 0.2),
        "paper-degree-distribution-ci" => degree(100_000, 0.3),
        "paper-diagonal-distance" => distance(100_000),
        "paper-diagonal-distance-ci" => distance(20_000),
        "paper-density-hist" => density(100_000),
        "paper-density-hist-ci" => density(20_000),
        _ => return None,
    };
    cfg.name = Some(name.to_string());
    Some(cfg)
}

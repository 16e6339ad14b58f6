//! TOML experiment recipes. Unknown keys are rejected everywhere.

use std::path::Path;

use serde::Deserialize;

use crate::analysis::{GridSpec, DEFAULT_GAMMA_FACTOR};
use crate::domain::{ExperimentConfig, Mode, PolicyKind, SkillDistribution, TieBreak};
use crate::error::{Error, Result};
use crate::inference::Prior;
use crate::sim::SweepAxis;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Tag copied into every output row.
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub population: PopulationConfig,
    pub experiment: Option<ExperimentSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

fn default_id() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PopulationConfig {
    Beta { alpha: f64, beta: f64 },
    Dirac { p: f64 },
    /// `points = [[skill, mass], ...]`
    Empirical { points: Vec<[f64; 2]> },
}

impl PopulationConfig {
    pub fn to_distribution(&self) -> Result<SkillDistribution> {
        match self {
            PopulationConfig::Beta { alpha, beta } => SkillDistribution::beta(*alpha, *beta),
            PopulationConfig::Dirac { p } => SkillDistribution::dirac(*p),
            PopulationConfig::Empirical { points } => {
                SkillDistribution::empirical(points.iter().map(|[p, m]| (*p, *m)).collect())
            }
        }
        .map_err(|e| Error::Config(format!("population: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Oracle,
    Inference,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub num_tasks: usize,
    pub budget: usize,
    #[serde(default = "one")]
    pub labels_per_worker: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    /// Defaults to the population's Beta parameters.
    pub prior: Option<PriorConfig>,
    /// Policies to compare; defaults to uniform and uncertainty.
    pub policies: Option<Vec<PolicyKind>>,
    #[serde(default)]
    pub tie_break: TieBreak,
}

fn one() -> usize {
    1
}

fn default_replications() -> usize {
    100
}

fn default_mode() -> ModeName {
    ModeName::Oracle
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub points: Vec<f64>,
}

impl SweepSection {
    pub fn axis(&self) -> Result<SweepAxis> {
        SweepAxis::parse(&self.axis).ok_or_else(|| {
            Error::Config(format!(
                "sweep.axis must be one of tasks, budget_ratio, labels_per_worker; got {:?}",
                self.axis
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Uniform budgets `r_u` to analyse or calibrate.
    #[serde(default = "default_r_u")]
    pub r_u: Vec<f64>,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Support bound `gamma` as a multiple of the vote standard deviation.
    #[serde(default = "default_gamma")]
    pub gamma_factor: f64,
    /// Survival mass at which a bounded walk is declared finished.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Votes after which an unfinished bounded walk is a failure.
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Also emit the skill, weight and vote densities.
    #[serde(default)]
    pub densities: bool,
    /// Emit every n-th grid point of each density.
    #[serde(default = "default_stride")]
    pub density_stride: usize,
    /// Skills of homogeneous crowds to compare at the single configured `r_u`.
    #[serde(default)]
    pub homogeneous_skills: Vec<f64>,
}

fn default_r_u() -> Vec<f64> {
    (2..=20).map(f64::from).collect()
}
fn default_half_width() -> f64 {
    GridSpec::default().half_width
}
fn default_step() -> f64 {
    GridSpec::default().step
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA_FACTOR
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_steps() -> usize {
    crate::analysis::WalkOptions::default().max_steps
}
fn default_stride() -> usize {
    20
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            r_u: default_r_u(),
            half_width: default_half_width(),
            step: default_step(),
            gamma_factor: default_gamma(),
            tol: default_tol(),
            max_steps: default_max_steps(),
            densities: false,
            density_stride: default_stride(),
            homogeneous_skills: Vec::new(),
        }
    }
}

impl AnalysisSection {
    pub fn grid(&self) -> Result<GridSpec> {
        let g = GridSpec { half_width: self.half_width, step: self.step };
        g.validate().map_err(|e| Error::Config(format!("analysis grid: {e}")))?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.r_u.is_empty() {
            return Err(Error::Config("analysis.r_u must not be empty".into()));
        }
        if !(self.gamma_factor > 0.0) {
            return Err(Error::Config("analysis.gamma_factor must be positive".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config("analysis.tol must lie in (0, 1)".into()));
        }
        if !self.homogeneous_skills.is_empty() {
            if self.r_u.len() != 1 {
                return Err(Error::Config(
                    "analysis.homogeneous_skills needs exactly one analysis.r_u".into(),
                ));
            }
            if let Some(p) = self.homogeneous_skills.iter().find(|p| !(**p > 0.0 && **p < 1.0 && **p != 0.5)) {
                return Err(Error::Config(format!("homogeneous skill {p} must lie in (0,1) and differ from 0.5")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("analysis.max_steps must be positive".into()));
        }
        if self.density_stride == 0 {
            return Err(Error::Config("analysis.density_stride must be positive".into()));
        }
        Ok(())
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.population.to_distribution()?;
        cfg.analysis.validate()?;
        if let Some(s) = &cfg.sweep {
            s.axis()?;
            if s.points.is_empty() {
                return Err(Error::Config("sweep.points must not be empty".into()));
            }
            if cfg.experiment.is_none() {
                return Err(Error::Config("a sweep needs an [experiment] section".into()));
            }
        }
        if cfg.experiment.is_some() {
            cfg.base_experiment()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn policies(&self) -> Vec<PolicyKind> {
        self.experiment
            .as_ref()
            .and_then(|e| e.policies.clone())
            .unwrap_or_else(|| crate::sim::SWEEP_POLICIES.to_vec())
    }

    /// The `[experiment]` section as a library config, with the first listed
    /// policy filled in.
    pub fn base_experiment(&self) -> Result<ExperimentConfig> {
        let e = self
            .experiment
            .as_ref()
            .ok_or_else(|| Error::Config("missing [experiment] section".into()))?;
        let population = self.population.to_distribution()?;
        let mode = match e.mode {
            ModeName::Oracle => Mode::Oracle,
            ModeName::Inference => {
                let prior = match (e.prior, &population) {
                    (Some(p), _) => Prior::new(p.alpha, p.beta),
                    (None, SkillDistribution::Beta { alpha, beta }) => Prior::new(*alpha, *beta),
                    (None, _) => {
                        return Err(Error::Config(
                            "inference mode needs experiment.prior unless the population is beta".into(),
                        ))
                    }
                }
                .map_err(|e| Error::Config(format!("prior: {e}")))?;
                Mode::Inference(prior)
            }
        };
        let policies = self.policies();
        let policy = *policies
            .first()
            .ok_or_else(|| Error::Config("experiment.policies must not be empty".into()))?;
        let cfg = ExperimentConfig {
            num_tasks: e.num_tasks,
            budget: e.budget,
            labels_per_worker: e.labels_per_worker,
            population,
            policy,
            mode,
            replications: e.replications,
            seed: self.seed,
            tie_break: e.tie_break,
        };
        // a sweep may move the config into validity, so only the fields it
        // cannot touch are checked here
        if self.sweep.is_none() {
            for &p in &policies {
                ExperimentConfig { policy: p, ..cfg.clone() }.validate()?;
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
id = "demo"
seed = 9

[population]
kind = "beta"
alpha = 4
beta = 2

[experiment]
num_tasks = 50
budget = 500
labels_per_worker = 10
replications = 4
mode = "inference"

[sweep]
axis = "budget_ratio"
points = [2, 10]

[analysis]
r_u = [3, 5]
"#;

    #[test]
    fn full_recipe_parses() {
        let c = Config::parse(FULL).unwrap();
        assert_eq!(c.id, "demo");
        let e = c.base_experiment().unwrap();
        assert_eq!(e.seed, 9);
        assert_eq!(e.mode, Mode::Inference(Prior::new(4.0, 2.0).unwrap()));
        assert_eq!(c.sweep.unwrap().axis().unwrap(), SweepAxis::BudgetRatio);
        assert_eq!(c.analysis.step, 0.005);
    }

    #[test]
    fn missing_budget_is_named() {
        let text = FULL.replace("budget = 500\n", "");
        let err = Config::parse(&text).unwrap_err().to_string();
        assert!(err.contains("budget"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse(&FULL.replace("seed = 9", "seed = 9\nsede = 3")).is_err());
        assert!(Config::parse(&FULL.replace("beta = 2", "beta = 2\ngamma = 1")).is_err());
        assert!(Config::parse(&FULL.replace("r_u = [3, 5]", "ru = [3, 5]")).is_err());
    }

    #[test]
    fn analysis_only_recipe() {
        let c = Config::parse("[population]\nkind = \"dirac\"\np = 0.8\n").unwrap();
        assert!(c.experiment.is_none());
        assert_eq!(c.analysis.r_u.len(), 19);
        assert!(Config::parse("[population]\nkind = \"dirac\"\np = 1.5\n").is_err());
    }

    #[test]
    fn empirical_population() {
        let c = Config::parse(
            "[population]\nkind = \"empirical\"\npoints = [[0.6, 0.5], [0.9, 0.5]]\n",
        )
        .unwrap();
        assert_eq!(
            c.population.to_distribution().unwrap(),
            SkillDistribution::Empirical { points: vec![(0.6, 0.5), (0.9, 0.5)] }
        );
    }
}

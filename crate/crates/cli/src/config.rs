//! Run configuration file format and its resolution into core types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use varipade::{
    builtin_case, parse_integrand, parse_structure, Algorithm, BoundaryCondition, FamilySpec, GridSampling, Problem,
    TrainConfig,
};

use crate::CliError;

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "VARIPADE_SEED";

/// Either `{"builtin": name}` or a custom integrand with its boundary data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrand: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_b: Option<f64>,
}

/// Training fields; omitted fields take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam_beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam_beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// `midpoint` or `resample`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_exponents: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<String>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }

    /// Fills every training field, so the result echoes the exact run.
    pub fn resolved(&self) -> Result<ResolvedRun, CliError> {
        let problem = self.problem.resolve()?;
        let text = self
            .structure
            .as_deref()
            .ok_or_else(|| CliError::config("missing structure (e.g. \"Pade-[5/5]\")"))?;
        let spec = parse_structure(text).map_err(CliError::config)?;
        let train = self.train.resolve()?;
        let output_dir = self
            .output_dir
            .clone()
            .ok_or_else(|| CliError::config("missing output directory (--out or output_dir)"))?;
        let echo = RunConfig {
            problem: self.problem.clone(),
            structure: Some(spec.to_string()),
            train: TrainSection::echo(&train),
            output_dir: Some(output_dir.clone()),
        };
        Ok(ResolvedRun {
            problem,
            spec,
            train,
            output_dir,
            echo,
        })
    }
}

pub struct ResolvedRun {
    pub problem: ResolvedProblem,
    pub spec: FamilySpec,
    pub train: TrainConfig,
    pub output_dir: PathBuf,
    pub echo: RunConfig,
}

pub struct ResolvedProblem {
    pub name: String,
    pub problem: Problem<f64>,
    pub j_exact: Option<f64>,
}

impl ProblemSection {
    pub fn resolve(&self) -> Result<ResolvedProblem, CliError> {
        let custom = [
            self.integrand.is_some(),
            self.x_a.is_some(),
            self.x_b.is_some(),
            self.y_a.is_some(),
            self.y_b.is_some(),
        ];
        match (&self.builtin, custom.iter().any(|&c| c)) {
            (Some(_), true) => Err(CliError::config(
                "problem must be either a builtin name or a custom integrand, not both",
            )),
            (Some(name), false) => {
                let case = builtin_case::<f64>(name).map_err(CliError::config)?;
                Ok(ResolvedProblem {
                    name: case.slug.to_string(),
                    j_exact: Some(case.j_exact_analytic),
                    problem: case.problem,
                })
            }
            (None, false) => Err(CliError::config("missing problem (builtin name or custom integrand)")),
            (None, true) => {
                let missing: Vec<&str> = ["integrand", "x_a", "x_b", "y_a", "y_b"]
                    .iter()
                    .zip(custom)
                    .filter(|(_, present)| !present)
                    .map(|(name, _)| *name)
                    .collect();
                if !missing.is_empty() {
                    return Err(CliError::config(format!(
                        "custom problem is missing {}",
                        missing.join(", ")
                    )));
                }
                let integrand =
                    parse_integrand(self.integrand.as_deref().unwrap_or_default()).map_err(CliError::config)?;
                let bc = BoundaryCondition::new(
                    self.x_a.unwrap_or_default(),
                    self.x_b.unwrap_or_default(),
                    self.y_a.unwrap_or_default(),
                    self.y_b.unwrap_or_default(),
                )
                .map_err(CliError::config)?;
                Ok(ResolvedProblem {
                    name: "custom".into(),
                    problem: Problem::new("custom", integrand, bc),
                    j_exact: None,
                })
            }
        }
    }
}

/// Seed used when neither a flag nor the config gives one.
pub fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("{SEED_ENV}={text} is not an unsigned integer"))),
        Err(_) => Ok(TrainConfig::default().seed),
    }
}

fn parse_grid(text: &str) -> Result<GridSampling, CliError> {
    match text {
        "midpoint" => Ok(GridSampling::Midpoint),
        "resample" => Ok(GridSampling::Resample),
        other => Err(CliError::config(format!(
            "unknown grid `{other}` (expected midpoint or resample)"
        ))),
    }
}

fn grid_name(grid: GridSampling) -> &'static str {
    match grid {
        GridSampling::Midpoint => "midpoint",
        GridSampling::Resample => "resample",
    }
}

impl TrainSection {
    pub fn resolve(&self) -> Result<TrainConfig, CliError> {
        let d = TrainConfig::default();
        let algorithm: Algorithm = match &self.algorithm {
            Some(a) => a.parse().map_err(CliError::config)?,
            None => d.algorithm,
        };
        let grid_sampling = match &self.grid {
            Some(g) => parse_grid(g)?,
            None => d.grid_sampling,
        };
        let seed = match self.seed {
            Some(s) => s,
            None => default_seed()?,
        };
        let cfg = TrainConfig {
            algorithm,
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            steps: self.steps.unwrap_or(d.steps),
            adam_beta1: self.adam_beta1.unwrap_or(d.adam_beta1),
            adam_beta2: self.adam_beta2.unwrap_or(d.adam_beta2),
            adam_eps: self.adam_eps.unwrap_or(d.adam_eps),
            grid_n: self.samples.unwrap_or(d.grid_n),
            grid_sampling,
            seed,
            record_every: self.record_every.unwrap_or(d.record_every),
            train_exponents: self.train_exponents.unwrap_or(d.train_exponents),
            min_exponent: self.min_exponent.unwrap_or(d.min_exponent),
            early_stop: self.early_stop.unwrap_or(d.early_stop),
        };
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }

    pub fn echo(cfg: &TrainConfig) -> Self {
        Self {
            algorithm: Some(cfg.algorithm.name().into()),
            learning_rate: Some(cfg.learning_rate),
            steps: Some(cfg.steps),
            adam_beta1: Some(cfg.adam_beta1),
            adam_beta2: Some(cfg.adam_beta2),
            adam_eps: Some(cfg.adam_eps),
            samples: Some(cfg.grid_n),
            grid: Some(grid_name(cfg.grid_sampling).into()),
            seed: Some(cfg.seed),
            record_every: Some(cfg.record_every),
            train_exponents: Some(cfg.train_exponents),
            min_exponent: Some(cfg.min_exponent),
            early_stop: Some(cfg.early_stop),
        }
    }
}

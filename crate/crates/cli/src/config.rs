//! Declarative run configuration: a strict JSON schema with key-path
//! errors, unknown-key rejection, and defaults for the standard
//! response-interval workflow.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use denmatch_core::models::BoxBounds;
use denmatch_core::objective::SurrogateSpec;
use denmatch_core::optimizer::{OptimizerConfig, Stage2Bandwidth};
use denmatch_core::rdo::Nsga2Config;
use denmatch_core::{Distribution, ResponseModel};

use crate::error::AppError;
use crate::surrogate_io;

/// Distribution descriptor as it appears in config files.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform {
        lower: f64,
        upper: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
        lower: f64,
        upper: f64,
    },
    /// Either an inline table or a two-column CSV file of (node, value).
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
    },
}

impl DistributionSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Distribution, AppError> {
        let to_app = |e: denmatch_core::Error| AppError::validation(format!("target: {e}"));
        match self {
            Self::Uniform { lower, upper } => {
                Distribution::uniform(*lower, *upper).map_err(to_app)
            }
            Self::Gaussian { mean, variance } => {
                Distribution::gaussian(*mean, *variance).map_err(to_app)
            }
            Self::Beta {
                alpha,
                beta,
                lower,
                upper,
            } => Distribution::scaled_beta(*alpha, *beta, *lower, *upper).map_err(to_app),
            Self::Tabulated {
                path,
                nodes,
                values,
            } => {
                let (nodes, values) = match (path, nodes, values) {
                    (Some(p), None, None) => {
                        let resolved = base_dir.join(p);
                        read_table(&resolved)?
                    }
                    (None, Some(n), Some(v)) => (n.clone(), v.clone()),
                    _ => {
                        return Err(AppError::validation(
                            "tabulated distribution needs either `path` or both `nodes` and `values`",
                        ))
                    }
                };
                Distribution::tabulated(nodes, values).map_err(to_app)
            }
        }
    }

    /// Descriptor for a distribution built in code (used when persisting
    /// surrogates).
    pub fn describe(d: &Distribution) -> Self {
        use denmatch_core::densities::DistributionParams as P;
        match d.params() {
            P::Uniform { a, b } => Self::Uniform { lower: a, upper: b },
            P::Gaussian { mean, variance } => Self::Gaussian { mean, variance },
            P::ScaledBeta { alpha, beta, a, b } => Self::Beta {
                alpha,
                beta,
                lower: a,
                upper: b,
            },
            P::Tabulated { nodes, values } => Self::Tabulated {
                path: None,
                nodes: Some(nodes.to_vec()),
                values: Some(values.to_vec()),
            },
        }
    }
}

/// Two-column CSV (or whitespace-separated) table of (node, value) rows.
fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        AppError::validation(format!("cannot read table {}: {e}", path.display()))
    })?;
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(|c: char| c == ',' || c.is_whitespace());
        let mut next = |name: &str| -> Result<f64, AppError> {
            parts
                .by_ref()
                .find(|t| !t.is_empty())
                .ok_or_else(|| {
                    AppError::validation(format!(
                        "{}:{}: missing {name}",
                        path.display(),
                        lineno + 1
                    ))
                })?
                .parse::<f64>()
                .map_err(|e| {
                    AppError::validation(format!(
                        "{}:{}: bad {name}: {e}",
                        path.display(),
                        lineno + 1
                    ))
                })
        };
        nodes.push(next("node")?);
        values.push(next("value")?);
    }
    Ok((nodes, values))
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    LinearShift,
    ExampleShift,
    SyntheticAirfoil,
    /// A response surface persisted by `validate` (or any prior fit).
    Surrogate { path: PathBuf },
}

impl ModelSpec {
    pub fn build(&self, base_dir: &Path) -> Result<ResponseModel, AppError> {
        match self {
            Self::LinearShift => Ok(ResponseModel::LinearShift),
            Self::ExampleShift => Ok(ResponseModel::ExampleShift),
            Self::SyntheticAirfoil => Ok(ResponseModel::SyntheticAirfoil),
            Self::Surrogate { path } => surrogate_io::load(&base_dir.join(path)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub f_lower: f64,
    pub f_upper: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            f_lower: -100.0,
            f_upper: 150.0,
            n_points: 2500,
        }
    }
}

/// Stage-2 bandwidth: a number or the string `"scott"`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BandwidthSpec {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdeSpec {
    #[serde(default = "default_m_samples")]
    pub m_samples: usize,
    #[serde(default)]
    pub stage1_bandwidth: Option<f64>,
    #[serde(default = "default_stage1_iterations")]
    pub stage1_iterations: usize,
    #[serde(default)]
    pub stage2_bandwidth: Option<BandwidthSpec>,
}

fn default_m_samples() -> usize {
    100_000
}

fn default_stage1_iterations() -> usize {
    3
}

impl Default for KdeSpec {
    fn default() -> Self {
        Self {
            m_samples: default_m_samples(),
            stage1_bandwidth: None,
            stage1_iterations: default_stage1_iterations(),
            stage2_bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSpec {
    pub max_iterations: Option<usize>,
    pub gradient_tolerance: Option<f64>,
    pub step_tolerance: Option<f64>,
    pub armijo_c: Option<f64>,
    pub backtrack_rho: Option<f64>,
    pub initial_step: Option<f64>,
}

impl OptimizerSpec {
    fn build(&self) -> OptimizerConfig {
        let d = OptimizerConfig::default();
        OptimizerConfig {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            gradient_tolerance: self.gradient_tolerance.unwrap_or(d.gradient_tolerance),
            step_tolerance: self.step_tolerance.unwrap_or(d.step_tolerance),
            armijo_c: self.armijo_c.unwrap_or(d.armijo_c),
            backtrack_rho: self.backtrack_rho.unwrap_or(d.backtrack_rho),
            initial_step: self.initial_step.unwrap_or(d.initial_step),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogatePipelineSpec {
    pub enabled: bool,
    pub points: Option<usize>,
    pub degree: Option<usize>,
    /// `validate` fails when the fit residual exceeds this.
    pub validation_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RdoSpec {
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_probability: Option<f64>,
    pub mutation_probability: Option<f64>,
    pub crossover_index: Option<f64>,
    pub mutation_index: Option<f64>,
    pub penalty: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponsePathKind {
    Kde,
    Analytic,
}

/// Raw config file contents; see `RunConfig` for the validated form.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelSpec,
    #[serde(default)]
    target: Option<DistributionSpec>,
    #[serde(default)]
    uncertainty: Option<DistributionSpec>,
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default)]
    kde: Option<KdeSpec>,
    #[serde(default)]
    response_path: Option<ResponsePathKind>,
    #[serde(default)]
    optimizer: Option<OptimizerSpec>,
    #[serde(default)]
    surrogate: Option<SurrogatePipelineSpec>,
    #[serde(default)]
    rdo: Option<RdoSpec>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    initial_design: Option<Vec<f64>>,
    #[serde(default)]
    design_box: Option<BoxSpec>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

/// A validated run configuration with all defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ResponseModel,
    pub target: Option<Distribution>,
    pub uncertainty: Option<Distribution>,
    pub grid_spec: GridSpec,
    pub m_samples: usize,
    pub stage1_bandwidth: Option<f64>,
    pub stage1_iterations: usize,
    pub stage2_bandwidth: Stage2Bandwidth,
    pub response_path: ResponsePathKind,
    pub optimizer: OptimizerConfig,
    pub surrogate: Option<SurrogateSpec>,
    pub validation_threshold: f64,
    pub nsga: Nsga2Config,
    pub penalty: f64,
    pub seed: u64,
    pub initial_design: Option<Vec<f64>>,
    pub design_box: Option<BoxBounds>,
    pub output_dir: Option<PathBuf>,
    /// Raw bytes of the config file, hashed into the manifest.
    pub raw_bytes: Vec<u8>,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, AppError> {
    let raw_bytes = std::fs::read(path)
        .map_err(|e| AppError::validation(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&raw_bytes)
        .map_err(|e| AppError::validation(format!("{} is not UTF-8: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        AppError::validation(format!(
            "config error at `{}`: {}",
            e.path(),
            e.inner()
        ))
    })?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));

    let grid_spec = raw.grid.unwrap_or_default();
    if grid_spec.n_points < 2 {
        return Err(AppError::validation("grid.n_points must be >= 2"));
    }
    if !(grid_spec.f_lower < grid_spec.f_upper) {
        return Err(AppError::validation(
            "grid.f_lower must be strictly below grid.f_upper",
        ));
    }

    let kde = raw.kde.unwrap_or_default();
    if kde.m_samples < 1 {
        return Err(AppError::validation("kde.m_samples must be >= 1"));
    }
    if let Some(h) = kde.stage1_bandwidth {
        if !(h > 0.0) {
            return Err(AppError::validation("kde.stage1_bandwidth must be > 0"));
        }
    }
    // Table-style default: the canonical response interval pairs with a
    // stage-2 bandwidth of 1; anything else defaults to Scott's rule.
    let stage2_bandwidth = match &kde.stage2_bandwidth {
        Some(BandwidthSpec::Fixed(h)) => {
            if !(*h > 0.0) {
                return Err(AppError::validation("kde.stage2_bandwidth must be > 0"));
            }
            Stage2Bandwidth::Fixed(*h)
        }
        Some(BandwidthSpec::Named(name)) if name == "scott" => Stage2Bandwidth::Scott,
        Some(BandwidthSpec::Named(name)) => {
            return Err(AppError::validation(format!(
                "kde.stage2_bandwidth must be a positive number or \"scott\", got \"{name}\""
            )))
        }
        None => {
            if (grid_spec.f_lower, grid_spec.f_upper) == (-100.0, 150.0) {
                Stage2Bandwidth::Fixed(1.0)
            } else {
                Stage2Bandwidth::Scott
            }
        }
    };

    let model = raw.model.build(base_dir)?;
    let target = raw.target.as_ref().map(|t| t.build(base_dir)).transpose()?;
    let uncertainty = raw
        .uncertainty
        .as_ref()
        .map(|u| u.build(base_dir))
        .transpose()?;

    let response_path = raw.response_path.unwrap_or(ResponsePathKind::Kde);
    if response_path == ResponsePathKind::Analytic {
        if !matches!(model, ResponseModel::LinearShift) {
            return Err(AppError::validation(
                "response_path \"analytic\" needs a model with a differentiable closed-form response density; only linear-shift qualifies",
            ));
        }
        if uncertainty.is_some() {
            return Err(AppError::validation(
                "uncertainty override is incompatible with the analytic response path",
            ));
        }
    }

    let sur_spec = raw.surrogate.unwrap_or_default();
    let points = sur_spec.points.unwrap_or(21);
    let degree = sur_spec.degree.unwrap_or(5);
    if points <= degree {
        return Err(AppError::validation(
            "surrogate.points must exceed surrogate.degree",
        ));
    }
    let surrogate = sur_spec.enabled.then_some(SurrogateSpec { points, degree });

    let rdo = raw.rdo.unwrap_or_default();
    let ndefault = Nsga2Config::default();
    let population = rdo.population.unwrap_or(ndefault.population);
    if population < 4 || population % 2 != 0 {
        return Err(AppError::validation(
            "rdo.population must be even and at least 4",
        ));
    }
    let nsga = Nsga2Config {
        population,
        generations: rdo.generations.unwrap_or(ndefault.generations),
        crossover_probability: rdo
            .crossover_probability
            .unwrap_or(ndefault.crossover_probability),
        mutation_probability: rdo.mutation_probability,
        crossover_index: rdo.crossover_index.unwrap_or(ndefault.crossover_index),
        mutation_index: rdo.mutation_index.unwrap_or(ndefault.mutation_index),
    };

    let design_box = match raw.design_box {
        Some(b) => Some(
            BoxBounds::new(b.lower, b.upper)
                .map_err(|e| AppError::validation(format!("design_box: {e}")))?,
        ),
        None => None,
    };
    if let Some(b) = &design_box {
        if b.dim() != model.design_dim() {
            return Err(AppError::validation(format!(
                "design_box has {} components but the model has {} design variables",
                b.dim(),
                model.design_dim()
            )));
        }
    }
    if let Some(s0) = &raw.initial_design {
        if s0.len() != model.design_dim() {
            return Err(AppError::validation(format!(
                "initial_design has {} components but the model has {} design variables",
                s0.len(),
                model.design_dim()
            )));
        }
    }

    let optimizer = raw.optimizer.unwrap_or_default().build();
    optimizer
        .validate()
        .map_err(|e| AppError::validation(format!("optimizer: {e}")))?;

    Ok(RunConfig {
        model,
        target,
        uncertainty,
        grid_spec,
        m_samples: kde.m_samples,
        stage1_bandwidth: kde.stage1_bandwidth,
        stage1_iterations: kde.stage1_iterations,
        stage2_bandwidth,
        response_path,
        optimizer,
        surrogate,
        validation_threshold: sur_spec.validation_threshold.unwrap_or(1e-6),
        nsga,
        penalty: rdo.penalty.unwrap_or(1e6),
        seed: raw.seed.unwrap_or(0),
        initial_design: raw.initial_design,
        design_box,
        output_dir: raw.output_dir.map(|p| {
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        }),
        raw_bytes,
    })
}

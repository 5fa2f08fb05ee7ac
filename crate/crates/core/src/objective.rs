//! The discretized squared-L2 distance between target and response pdfs
//! and its analytic design gradient.
//!
//! The distance is `sum_i (t_i - q_i)^2 w_i`. Its gradient against the
//! kernel estimate is assembled as `2 (t - K e)^T W K' F'`; the derivative
//! of `K(gamma_i - f_j)` with respect to `f_j` carries a sign opposite to
//! the derivative with respect to the kernel argument, and the assembly
//! here fixes the orientation so finite differences agree.

use alloc::format;
use alloc::vec::Vec;

use crate::densities::{Distribution, SampleSet};
use crate::error::{Error, Result};
use crate::kde::{self, KernelMatrices};
use crate::models::ResponseModel;
use crate::quadrature::QuadratureGrid;

/// One full objective evaluation at a design point.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub target_trace: Vec<f64>,
    pub response_trace: Vec<f64>,
    pub bandwidth: Option<f64>,
}

/// The `M x n` matrix of response partials `df_j / ds_k` at one design.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    values: Vec<f64>,
    m: usize,
    n: usize,
}

impl SensitivityMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }
}

/// Row `j` holds `grad_s f(s, omega_j)`.
pub fn design_sensitivities(
    model: &ResponseModel,
    s: &[f64],
    samples: &SampleSet,
) -> Result<SensitivityMatrix> {
    let n = model.design_dim();
    let m = samples.len();
    let mut values = alloc::vec![0.0; m * n];
    for (j, &omega) in samples.values().iter().enumerate() {
        model
            .grad_into(s, omega, &mut values[j * n..(j + 1) * n])
            .map_err(|e| Error::ModelEval {
                index: j,
                omega,
                reason: format!("{e}"),
            })?;
    }
    Ok(SensitivityMatrix { values, m, n })
}

/// `sum_i (t_i - q_i)^2 w_i`.
pub fn distance_hat(
    target_trace: &[f64],
    response_trace: &[f64],
    grid: &QuadratureGrid,
) -> Result<f64> {
    if target_trace.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: target_trace.len(),
            context: "target trace",
        });
    }
    if response_trace.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: response_trace.len(),
            context: "response trace",
        });
    }
    Ok(target_trace
        .iter()
        .zip(response_trace)
        .zip(grid.weights())
        .map(|((t, q), w)| (t - q) * (t - q) * w)
        .sum())
}

/// `2 (t - K e)^T W K' F'`, oriented so that finite differences of
/// `distance_hat` agree.
pub fn gradient_hat(
    target_trace: &[f64],
    mats: &KernelMatrices,
    grid: &QuadratureGrid,
    sens: &SensitivityMatrix,
) -> Result<Vec<f64>> {
    if target_trace.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: target_trace.len(),
            context: "target trace",
        });
    }
    if sens.m != mats.sample_values().len() {
        return Err(Error::LengthMismatch {
            expected: mats.sample_values().len(),
            actual: sens.m,
            context: "sensitivity rows",
        });
    }
    let qhat = mats.density();
    let u: Vec<f64> = target_trace
        .iter()
        .zip(qhat)
        .zip(grid.weights())
        .map(|((t, q), w)| 2.0 * w * (t - q))
        .collect();
    let v = mats.kprime_transpose_mul(&u)?;
    let mut grad = alloc::vec![0.0; sens.n];
    for (j, vj) in v.iter().enumerate() {
        for (g, fp) in grad.iter_mut().zip(sens.row(j)) {
            *g += vj * fp;
        }
    }
    Ok(grad)
}

/// Surrogate pipeline settings: refit a degree-`degree` response surface
/// from `points` base evaluations at every queried design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurrogateSpec {
    pub points: usize,
    pub degree: usize,
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        Self {
            points: 21,
            degree: 5,
        }
    }
}

enum Path {
    /// Closed-form response pdf and its design gradient.
    Analytic,
    /// Kernel estimate over a frozen omega draw at a fixed bandwidth.
    Kde {
        omegas: SampleSet,
        bandwidth: f64,
        surrogate: Option<SurrogateSpec>,
    },
}

struct Cached {
    s: Vec<f64>,
    value: f64,
    /// Kernel operator at `s` (KDE path only).
    mats: Option<KernelMatrices>,
    /// Model the responses were drawn from (refitted surrogate or base).
    eval_model: ResponseModel,
    response_trace: Vec<f64>,
}

/// Deterministic objective `s -> d_hat(t, q_s)` with common random
/// numbers: the omega draw is frozen at construction, so repeated
/// evaluation at one design is bit-identical.
pub struct DensityObjective {
    model: ResponseModel,
    grid: QuadratureGrid,
    target_trace: Vec<f64>,
    path: Path,
    cache: Option<Cached>,
}

impl DensityObjective {
    /// Objective against the model's closed-form response density.
    pub fn analytic(
        model: ResponseModel,
        target: &Distribution,
        grid: QuadratureGrid,
    ) -> Result<Self> {
        let probe = model.design_box().clamp(&alloc::vec![1.0; model.design_dim()]);
        if model.response_density(&probe).is_none() {
            return Err(Error::Unsupported(format!(
                "model {model:?} has no closed-form response density; use the kernel path"
            )));
        }
        let target_trace = grid.tabulate(|x| target.pdf(x));
        Ok(Self {
            model,
            grid,
            target_trace,
            path: Path::Analytic,
            cache: None,
        })
    }

    /// Objective against the kernel estimate built from `omegas`.
    pub fn kde(
        model: ResponseModel,
        target: &Distribution,
        grid: QuadratureGrid,
        omegas: SampleSet,
        bandwidth: f64,
        surrogate: Option<SurrogateSpec>,
    ) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::NonPositiveBandwidth(bandwidth));
        }
        if omegas.is_empty() {
            return Err(Error::InvalidConfig(alloc::string::String::from(
                "kernel objective needs a nonempty omega draw",
            )));
        }
        let target_trace = grid.tabulate(|x| target.pdf(x));
        Ok(Self {
            model,
            grid,
            target_trace,
            path: Path::Kde {
                omegas,
                bandwidth,
                surrogate,
            },
            cache: None,
        })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn target_trace(&self) -> &[f64] {
        &self.target_trace
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match &self.path {
            Path::Analytic => None,
            Path::Kde { bandwidth, .. } => Some(*bandwidth),
        }
    }

    /// The frozen omega draw (KDE path).
    pub fn omega_samples(&self) -> Option<&SampleSet> {
        match &self.path {
            Path::Analytic => None,
            Path::Kde { omegas, .. } => Some(omegas),
        }
    }

    fn ensure_cache(&mut self, s: &[f64]) -> Result<()> {
        if let Some(c) = &self.cache {
            if c.s == s {
                return Ok(());
            }
        }
        let cached = match &self.path {
            Path::Analytic => {
                let density = self.model.response_density(s).ok_or_else(|| {
                    Error::Unsupported(alloc::string::String::from(
                        "closed-form response density unavailable at this design",
                    ))
                })?;
                let response_trace = self.grid.tabulate(|x| density.pdf(x));
                let value = distance_hat(&self.target_trace, &response_trace, &self.grid)?;
                Cached {
                    s: s.to_vec(),
                    value,
                    mats: None,
                    eval_model: self.model.clone(),
                    response_trace,
                }
            }
            Path::Kde {
                omegas,
                bandwidth,
                surrogate,
            } => {
                let eval_model = match surrogate {
                    Some(spec) => {
                        crate::models::surrogate_model(&self.model, s, spec.points, spec.degree)?
                    }
                    None => self.model.clone(),
                };
                let responses = eval_model.eval_batch(s, omegas.values())?;
                let mats = kde::build_matrices(&responses, *bandwidth, &self.grid)?;
                let value = distance_hat(&self.target_trace, mats.density(), &self.grid)?;
                Cached {
                    s: s.to_vec(),
                    value,
                    response_trace: mats.density().to_vec(),
                    mats: Some(mats),
                    eval_model,
                }
            }
        };
        self.cache = Some(cached);
        Ok(())
    }

    pub fn value(&mut self, s: &[f64]) -> Result<f64> {
        self.ensure_cache(s)?;
        Ok(self.cache.as_ref().unwrap().value)
    }

    pub fn value_and_gradient(&mut self, s: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.ensure_cache(s)?;
        match &self.path {
            Path::Analytic => {
                let cache = self.cache.as_ref().unwrap();
                let mut grad = alloc::vec![0.0; self.model.design_dim()];
                for ((node, w), (t, q)) in self
                    .grid
                    .nodes()
                    .iter()
                    .zip(self.grid.weights())
                    .zip(self.target_trace.iter().zip(&cache.response_trace))
                {
                    let dq = self.model.response_density_design_grad(s, *node).ok_or_else(
                        || {
                            Error::Unsupported(alloc::string::String::from(
                                "response density gradient unavailable; use the kernel path",
                            ))
                        },
                    )?;
                    let coef = -2.0 * w * (t - q);
                    for (g, d) in grad.iter_mut().zip(&dq) {
                        *g += coef * d;
                    }
                }
                Ok((cache.value, grad))
            }
            Path::Kde { omegas, .. } => {
                let cache = self.cache.as_ref().unwrap();
                let mats = cache.mats.as_ref().unwrap();
                let sens = design_sensitivities(&cache.eval_model, s, omegas)?;
                let grad = gradient_hat(&self.target_trace, mats, &self.grid, &sens)?;
                Ok((cache.value, grad))
            }
        }
    }

    /// Full record at `s`, including the pdf traces.
    pub fn evaluate(&mut self, s: &[f64]) -> Result<ObjectiveEvaluation> {
        let (value, gradient) = self.value_and_gradient(s)?;
        let cache = self.cache.as_ref().unwrap();
        Ok(ObjectiveEvaluation {
            value,
            gradient,
            target_trace: self.target_trace.clone(),
            response_trace: cache.response_trace.clone(),
            bandwidth: self.bandwidth(),
        })
    }

    /// Overlap integral `sum_i t_i q_i w_i` at the cached design.
    pub fn overlap(&mut self, s: &[f64]) -> Result<f64> {
        self.ensure_cache(s)?;
        let cache = self.cache.as_ref().unwrap();
        Ok(self
            .target_trace
            .iter()
            .zip(&cache.response_trace)
            .zip(self.grid.weights())
            .map(|((t, q), w)| t * q * w)
            .sum())
    }

    /// Self-energy `sum_i q_i^2 w_i` of the cached response estimate.
    pub fn response_self_energy(&mut self, s: &[f64]) -> Result<f64> {
        self.ensure_cache(s)?;
        let cache = self.cache.as_ref().unwrap();
        Ok(cache
            .response_trace
            .iter()
            .zip(self.grid.weights())
            .map(|(q, w)| q * q * w)
            .sum())
    }

    pub fn response_trace(&mut self, s: &[f64]) -> Result<Vec<f64>> {
        self.ensure_cache(s)?;
        Ok(self.cache.as_ref().unwrap().response_trace.clone())
    }
}

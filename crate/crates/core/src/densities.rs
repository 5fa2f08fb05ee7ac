//! Univariate probability distributions used as target pdfs and as the
//! uncertainty law on the random variable.
//!
//! All kinds support pdf evaluation and seeded sampling; the parametric
//! kinds also expose closed-form moments. Construction validates
//! parameters so evaluation never has to.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Distribution as RandDistribution;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::StreamRng;

/// A validated univariate probability law.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Uniform {
        a: f64,
        b: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// Standard beta(alpha, beta) pushed through the affine map onto [a, b].
    ScaledBeta {
        alpha: f64,
        beta: f64,
        a: f64,
        b: f64,
        ln_beta_fn: f64,
    },
    /// Piecewise-linear pdf through (nodes, values), renormalized at load.
    Tabulated {
        nodes: Vec<f64>,
        values: Vec<f64>,
        cdf: Vec<f64>,
    },
}

impl Distribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidDistribution(format!(
                "uniform requires finite a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(Self {
            kind: Kind::Uniform { a, b },
        })
    }

    /// Gaussian parameterized by mean and *variance*.
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "gaussian requires finite mean and variance > 0, got mean = {mean}, variance = {variance}"
            )));
        }
        Ok(Self {
            kind: Kind::Gaussian { mean, variance },
        })
    }

    pub fn scaled_beta(alpha: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "scaled beta requires alpha > 0 and beta > 0, got alpha = {alpha}, beta = {beta}"
            )));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidDistribution(format!(
                "scaled beta requires finite a < b, got a = {a}, b = {b}"
            )));
        }
        let ln_beta_fn = math::lgamma(alpha) + math::lgamma(beta) - math::lgamma(alpha + beta);
        Ok(Self {
            kind: Kind::ScaledBeta {
                alpha,
                beta,
                a,
                b,
                ln_beta_fn,
            },
        })
    }

    /// Build a tabulated pdf from strictly increasing nodes and nonnegative
    /// values. The table is renormalized so its trapezoid integral is one.
    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidDistribution(String::from(
                "tabulated pdf needs at least 2 nodes",
            )));
        }
        if nodes.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                actual: values.len(),
                context: "tabulated pdf values",
            });
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution(String::from(
                "tabulated nodes must be finite and strictly increasing",
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution(String::from(
                "tabulated values must be finite and nonnegative",
            )));
        }
        let mut mass = 0.0;
        for i in 0..nodes.len() - 1 {
            mass += 0.5 * (values[i] + values[i + 1]) * (nodes[i + 1] - nodes[i]);
        }
        if mass <= 0.0 {
            return Err(Error::InvalidDistribution(String::from(
                "tabulated pdf has zero mass",
            )));
        }
        let values: Vec<f64> = values.iter().map(|v| v / mass).collect();
        // Cumulative trapezoid integral at each node, ending at exactly 1.
        let mut cdf = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 0..nodes.len() - 1 {
            acc += 0.5 * (values[i] + values[i + 1]) * (nodes[i + 1] - nodes[i]);
            cdf.push(acc);
        }
        let last = *cdf.last().unwrap();
        for c in cdf.iter_mut() {
            *c /= last;
        }
        Ok(Self {
            kind: Kind::Tabulated { nodes, values, cdf },
        })
    }

    /// Evaluate the density at `x`. Exactly zero outside bounded supports.
    pub fn pdf(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Uniform { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Kind::Gaussian { mean, variance } => {
                let sigma = math::sqrt(*variance);
                let z = (x - mean) / sigma;
                math::exp(-0.5 * z * z) / (sigma * math::SQRT_2PI)
            }
            Kind::ScaledBeta {
                alpha,
                beta,
                a,
                b,
                ln_beta_fn,
            } => {
                if x < *a || x > *b {
                    return 0.0;
                }
                let u = (x - a) / (b - a);
                let ln_pdf = (alpha - 1.0) * math::ln(u) + (beta - 1.0) * math::ln(1.0 - u)
                    - ln_beta_fn
                    - math::ln(b - a);
                math::exp(ln_pdf)
            }
            Kind::Tabulated { nodes, values, .. } => {
                let n = nodes.len();
                if x < nodes[0] || x > nodes[n - 1] {
                    return 0.0;
                }
                let idx = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                    Ok(i) => return values[i],
                    Err(i) => i,
                };
                let (x0, x1) = (nodes[idx - 1], nodes[idx]);
                let frac = (x - x0) / (x1 - x0);
                values[idx - 1] + frac * (values[idx] - values[idx - 1])
            }
        }
    }

    /// The kind and parameters this law was built from.
    pub fn params(&self) -> DistributionParams<'_> {
        match &self.kind {
            Kind::Uniform { a, b } => DistributionParams::Uniform { a: *a, b: *b },
            Kind::Gaussian { mean, variance } => DistributionParams::Gaussian {
                mean: *mean,
                variance: *variance,
            },
            Kind::ScaledBeta {
                alpha, beta, a, b, ..
            } => DistributionParams::ScaledBeta {
                alpha: *alpha,
                beta: *beta,
                a: *a,
                b: *b,
            },
            Kind::Tabulated { nodes, values, .. } => DistributionParams::Tabulated {
                nodes,
                values,
            },
        }
    }

    /// Support of the density: `None` bound means unbounded on that side.
    pub fn support(&self) -> (Option<f64>, Option<f64>) {
        match &self.kind {
            Kind::Uniform { a, b } => (Some(*a), Some(*b)),
            Kind::Gaussian { .. } => (None, None),
            Kind::ScaledBeta { a, b, .. } => (Some(*a), Some(*b)),
            Kind::Tabulated { nodes, .. } => (Some(nodes[0]), Some(*nodes.last().unwrap())),
        }
    }

    /// Closed-form mean and variance. Tabulated tables have no closed form;
    /// callers fall back to sample moments.
    pub fn analytic_moments(&self) -> Result<(f64, f64)> {
        match &self.kind {
            Kind::Uniform { a, b } => Ok((0.5 * (a + b), (b - a) * (b - a) / 12.0)),
            Kind::Gaussian { mean, variance } => Ok((*mean, *variance)),
            Kind::ScaledBeta {
                alpha, beta, a, b, ..
            } => {
                let s = alpha + beta;
                let mean = a + (b - a) * alpha / s;
                let var = (b - a) * (b - a) * alpha * beta / (s * s * (s + 1.0));
                Ok((mean, var))
            }
            Kind::Tabulated { .. } => Err(Error::Unsupported(String::from(
                "analytic moments of a tabulated pdf; use sample moments",
            ))),
        }
    }

    /// Draw `m` i.i.d. values. Deterministic for a fixed (seed, self, m).
    pub fn sample(&self, seed: u64, m: usize) -> Result<SampleSet> {
        if m < 1 {
            return Err(Error::InvalidConfig(String::from("sample count must be >= 1")));
        }
        let mut rng = crate::rng::stream(seed, 0x5a4d);
        let values = self.sample_with(&mut rng, m);
        Ok(SampleSet {
            values,
            seed,
            source: self.clone(),
        })
    }

    /// Draw into an existing stream; used by drivers that manage stages.
    pub fn sample_with(&self, rng: &mut StreamRng, m: usize) -> Vec<f64> {
        let mut values = Vec::with_capacity(m);
        match &self.kind {
            Kind::Uniform { a, b } => {
                for _ in 0..m {
                    values.push(rng.gen_range(*a..*b));
                }
            }
            Kind::Gaussian { mean, variance } => {
                let normal = rand_distr::Normal::new(*mean, math::sqrt(*variance)).unwrap();
                for _ in 0..m {
                    values.push(normal.sample(rng));
                }
            }
            Kind::ScaledBeta {
                alpha, beta, a, b, ..
            } => {
                let base = rand_distr::Beta::new(*alpha, *beta).unwrap();
                for _ in 0..m {
                    values.push(a + (b - a) * base.sample(rng));
                }
            }
            Kind::Tabulated { nodes, values: v, cdf } => {
                for _ in 0..m {
                    let u: f64 = rng.gen_range(0.0..1.0);
                    values.push(invert_tabulated_cdf(nodes, v, cdf, u));
                }
            }
        }
        values
    }
}

/// Parameter view of a [`Distribution`]; tabulated values are the
/// renormalized table.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionParams<'a> {
    Uniform { a: f64, b: f64 },
    Gaussian { mean: f64, variance: f64 },
    ScaledBeta { alpha: f64, beta: f64, a: f64, b: f64 },
    Tabulated { nodes: &'a [f64], values: &'a [f64] },
}

/// Invert the piecewise-quadratic cdf of a piecewise-linear pdf.
fn invert_tabulated_cdf(nodes: &[f64], values: &[f64], cdf: &[f64], u: f64) -> f64 {
    let idx = cdf.partition_point(|c| *c < u).max(1).min(nodes.len() - 1);
    let (x0, x1) = (nodes[idx - 1], nodes[idx]);
    let (p0, p1) = (values[idx - 1], values[idx]);
    let du = u - cdf[idx - 1];
    let w = x1 - x0;
    let slope = (p1 - p0) / w;
    if math::abs(slope) < 1e-300 {
        if p0 <= 0.0 {
            return x0;
        }
        return x0 + du / p0;
    }
    // Solve p0*t + slope*t^2/2 = du for t in [0, w].
    let disc = p0 * p0 + 2.0 * slope * du;
    let t = (math::sqrt(disc.max(0.0)) - p0) / slope;
    x0 + t.clamp(0.0, w)
}

/// A frozen Monte Carlo draw together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    seed: u64,
    source: Distribution,
}

impl SampleSet {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &Distribution {
        &self.source
    }

    /// Assemble from parts; used by drivers drawing through their own stream.
    pub fn from_parts(values: Vec<f64>, seed: u64, source: Distribution) -> Self {
        Self {
            values,
            seed,
            source,
        }
    }
}

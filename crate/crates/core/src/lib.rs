//! Density-matching toolkit for optimization under uncertainty.
//!
//! Given a designer-specified target pdf for a scalar system response and
//! a model `f(s, omega)` with design variables `s` and a random input
//! `omega`, the toolkit finds designs minimizing the squared-L2 distance
//! between the target and the design-dependent response pdf. The response
//! pdf is either known in closed form or estimated by Gaussian kernel
//! density estimation over a frozen Monte Carlo draw, and the distance is
//! discretized by a trapezoid rule on a bounded response interval. A
//! mean-variance NSGA-II baseline produces a Pareto archive for
//! comparison.
//!
//! Module map:
//! * [`densities`] — target pdfs and uncertainty laws, with seeded sampling
//! * [`quadrature`] — the trapezoid grid and weight matrix
//! * [`kde`] — kernel estimate, kernel-derivative products, Scott's rule
//! * [`models`] — response models and polynomial response surfaces
//! * [`objective`] — the discretized distance and its analytic gradient
//! * [`optimizer`] — projected gradient descent and the two-stage driver
//! * [`rdo`] — Monte Carlo moments and the NSGA-II baseline
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std`
//! feature adds wall-clock timing and, with `parallel`, multi-threaded
//! kernel passes. Results are bit-identical across these configurations.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod chunks;
mod math;

pub mod densities;
pub mod error;
pub mod kde;
pub mod models;
pub mod objective;
pub mod optimizer;
pub mod quadrature;
pub mod rdo;
pub mod rng;

pub use densities::{Distribution, SampleSet};
pub use error::{Error, Result};
pub use models::{BoxBounds, ResponseModel};
pub use objective::{DensityObjective, ObjectiveEvaluation, SurrogateSpec};
pub use optimizer::{
    run_density_match, DensityMatchProblem, MatchPath, OptimizerConfig, RunReport,
    Stage2Bandwidth,
};
pub use quadrature::QuadratureGrid;
pub use rdo::{Nsga2Config, ParetoArchive, RdoRunConfig};

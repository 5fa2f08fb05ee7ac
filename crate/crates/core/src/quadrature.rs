//! Trapezoid quadrature on the bounded response interval.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Nodes and weights of a uniform trapezoid rule on `[f_lower, f_upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    f_lower: f64,
    f_upper: f64,
    spacing: f64,
}

impl QuadratureGrid {
    /// Uniform trapezoid rule: end weights `dx/2`, interior weights `dx`.
    pub fn trapezoid(f_lower: f64, f_upper: f64, n: usize) -> Result<Self> {
        if !(f_lower.is_finite() && f_upper.is_finite() && f_lower < f_upper) {
            return Err(Error::InvalidGrid(format!(
                "bounds must satisfy f_lower < f_upper, got [{f_lower}, {f_upper}]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {n}")));
        }
        let dx = (f_upper - f_lower) / (n - 1) as f64;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n - 1 {
            nodes.push(f_lower + i as f64 * dx);
        }
        nodes.push(f_upper);
        let mut weights = alloc::vec![dx; n];
        weights[0] = 0.5 * dx;
        weights[n - 1] = 0.5 * dx;
        Ok(Self {
            nodes,
            weights,
            f_lower,
            f_upper,
            spacing: dx,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.f_lower, self.f_upper)
    }

    pub fn range(&self) -> f64 {
        self.f_upper - self.f_lower
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `sum_i values_i * w_i`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                actual: values.len(),
                context: "integrand values on grid",
            });
        }
        Ok(values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum())
    }

    /// Tabulate a function on the nodes.
    pub fn tabulate(&self, mut f: impl FnMut(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

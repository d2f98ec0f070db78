//! Diagonal-covariance Gaussian mixture densities.

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Mixture of diagonal Gaussians over a fixed-dimension feature space.
///
/// Fields are private so the per-component normalization constants stay in
/// step with the parameters; training rebuilds the mixture after each
/// re-estimation instead of mutating in place.
#[derive(Debug, Clone, PartialEq)]
pub struct Gmm {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
    /// Per component: log weight minus half the log determinant terms.
    log_const: Vec<f64>,
}

impl Gmm {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, vars: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpec("mixture needs a component".into()));
        }
        if weights.len() != means.len() || weights.len() != vars.len() {
            return Err(Error::InvalidSpec(format!(
                "mixture sizes disagree: {} weights, {} means, {} variances",
                weights.len(),
                means.len(),
                vars.len()
            )));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidSpec("mixture dimension is zero".into()));
        }
        for (mean, var) in means.iter().zip(&vars) {
            if mean.len() != dim {
                return Err(Error::DimMismatch {
                    got: mean.len(),
                    expected: dim,
                });
            }
            if var.len() != dim {
                return Err(Error::DimMismatch {
                    got: var.len(),
                    expected: dim,
                });
            }
            if var.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidSpec(
                    "variances must be positive and finite".into(),
                ));
            }
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidSpec(format!(
                "mixture weights must be non-negative and sum to 1, got sum {total}"
            )));
        }
        let log_const = weights
            .iter()
            .zip(&vars)
            .map(|(&w, var)| {
                let log_det: f64 = var.iter().map(|&v| v.ln()).sum();
                if w == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    w.ln() - 0.5 * (dim as f64 * LN_2PI + log_det)
                }
            })
            .collect();
        Ok(Gmm {
            weights,
            means,
            vars,
            log_const,
        })
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn vars(&self) -> &[Vec<f64>] {
        &self.vars
    }

    /// Log weighted density of one component, without the weight of the
    /// other components.
    pub fn component_log_pdf(&self, m: usize, x: &[f64]) -> f64 {
        let mut quad = 0.0;
        for ((&xi, &mu), &v) in x.iter().zip(&self.means[m]).zip(&self.vars[m]) {
            let d = xi - mu;
            quad += d * d / v;
        }
        self.log_const[m] - 0.5 * quad
    }

    /// Log mixture density at `x`.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimMismatch {
                got: x.len(),
                expected: self.dim(),
            });
        }
        let terms: Vec<f64> = (0..self.num_components())
            .map(|m| self.component_log_pdf(m, x))
            .collect();
        Ok(logsumexp(&terms))
    }
}

/// `log(sum(exp(x)))` with the usual max shift; empty or all-`-inf` input
/// gives `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

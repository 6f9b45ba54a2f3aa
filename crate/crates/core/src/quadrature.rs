//! Gauss–Hermite rules for expectations over standard normal variables.

use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;

use crate::error::{Error, Result};

/// Nodes and weights with `E[f(X)] ≈ Σ wᵢ f(xᵢ)` for `X ~ N(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalRule {
    pub fn new(order: usize) -> Result<Self> {
        let deg = NonZeroUsize::new(order).ok_or_else(|| Error::invalid("quad_order", "must be >= 1"))?;
        // physicists' rule for e^{−x²}; rescale to the unit normal
        let rule = GaussHermite::new(deg);
        let sqrt2 = std::f64::consts::SQRT_2;
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        let (nodes, weights) =
            rule.iter().map(|(x, w)| (x * sqrt2, w * inv_sqrt_pi)).unzip();
        Ok(NormalRule { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

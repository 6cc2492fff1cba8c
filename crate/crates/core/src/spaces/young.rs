use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A Young function `Ψ` (convex, increasing, `Ψ(0) = 0`), used for
/// Luxemburg norms and their fundamental functions `1/Ψ^{-1}(1/t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NFunction {
    /// `Ψ(x) = x^r`, `r ≥ 1`.
    Power { exponent: f64 },
    /// Piecewise linear through `(0,0)` and the given nodes; the last slope
    /// is extended beyond the final node.
    Sampled { x: Vec<f64>, y: Vec<f64> },
}

impl NFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            NFunction::Power { exponent } => {
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(Error::unsupported(format!("Young power exponent {exponent} must be >= 1")));
                }
            }
            NFunction::Sampled { x, y } => {
                if x.is_empty() || x.len() != y.len() {
                    return Err(Error::invalid("Young function needs equally many x and y nodes"));
                }
                let (xs, ys) = self.nodes();
                if xs.windows(2).any(|w| w[1] <= w[0]) || xs[0] != 0.0 || ys[0] != 0.0 {
                    return Err(Error::invalid("Young nodes must start at (0,0) and increase in x"));
                }
                let slopes: Vec<f64> = (1..xs.len()).map(|i| (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])).collect();
                if slopes.iter().any(|s| !(*s >= 0.0)) || slopes.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-12)) {
                    return Err(Error::unsupported("Young function must be convex and increasing"));
                }
                if !(slopes.last().copied().unwrap_or(0.0) > 0.0) || ys[1..].iter().any(|v| *v <= 0.0) {
                    return Err(Error::unsupported("Young function must be positive away from 0"));
                }
            }
        }
        Ok(())
    }

    fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            NFunction::Sampled { x, y } => {
                let mut xs = x.clone();
                let mut ys = y.clone();
                if xs.first() != Some(&0.0) {
                    xs.insert(0, 0.0);
                    ys.insert(0, 0.0);
                }
                (xs, ys)
            }
            NFunction::Power { .. } => (vec![0.0], vec![0.0]),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            NFunction::Power { exponent } => x.powf(*exponent),
            NFunction::Sampled { .. } => {
                if x.is_infinite() {
                    return f64::INFINITY;
                }
                let (xs, ys) = self.nodes();
                let n = xs.len();
                let i = xs.iter().rposition(|&a| a <= x).unwrap_or(0).min(n - 2);
                let s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
                ys[i] + s * (x - xs[i])
            }
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            NFunction::Power { exponent } => y.powf(1.0 / exponent),
            NFunction::Sampled { .. } => {
                if y.is_infinite() {
                    return f64::INFINITY;
                }
                let (xs, ys) = self.nodes();
                let n = xs.len();
                let i = ys.iter().rposition(|&b| b <= y).unwrap_or(0).min(n - 2);
                let s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
                if s == 0.0 {
                    return xs[i + 1];
                }
                xs[i] + (y - ys[i]) / s
            }
        }
    }

    /// Kinks of `1/Ψ^{-1}(1/t)` in `t`.
    pub(crate) fn phi_kinks(&self) -> Vec<f64> {
        match self {
            NFunction::Power { .. } => Vec::new(),
            NFunction::Sampled { .. } => {
                let (_, ys) = self.nodes();
                ys.iter().filter(|&&v| v > 0.0).map(|v| 1.0 / v).collect()
            }
        }
    }

    pub(crate) fn is_power(&self) -> Option<f64> {
        match self {
            NFunction::Power { exponent } => Some(*exponent),
            NFunction::Sampled { .. } => None,
        }
    }
}

//! Small tracking problem for quick end-to-end checks.
//!
//! `f_t(x) = ||x - a_t||²` on the box `[lower, upper]^d`, with targets
//! `a_t^i = mid + amplitude * sin(2π (t / period + i / d) + φ)` and one
//! budget constraint `g_t(x) = Σ_i x_i - budget_t`,
//! `budget_t = budget * (1 + 0.5 sin(2π t / period + φ))`. The phase `φ` is
//! drawn per seed.

use std::f64::consts::TAU;

use bansap::estimators::{LossBounds, LossOracle};
use bansap::geometry::stream_rng;
use bansap::metrics::ExactLoss;
use bansap::{BoxSet, ConstraintOracle, GradientOracle, Matrix, Vector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub period: f64,
    pub amplitude: f64,
    pub budget: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dim: 5,
            lower: 0.0,
            upper: 1.0,
            period: 50.0,
            amplitude: 0.3,
            budget: 2.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(HarnessError::config("synthetic dim must be >= 1"));
        }
        if self.period.is_nan() || self.period <= 0.0 {
            return Err(HarnessError::config("synthetic period must be positive"));
        }
        self.feasible_set().map(|_| ())
    }

    pub fn feasible_set(&self) -> Result<BoxSet> {
        Ok(BoxSet::cube(self.dim, self.lower, self.upper)?)
    }

    pub fn instance(&self, seed: u64) -> Result<SyntheticInstance> {
        self.validate()?;
        let mut rng = stream_rng(seed, bansap::fog::INSTANCE_STREAM);
        Ok(SyntheticInstance {
            config: self.clone(),
            phase: rng.random_range(0.0..TAU),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    config: SyntheticConfig,
    phase: f64,
}

impl SyntheticInstance {
    fn target(&self, t: usize) -> Vector {
        let c = &self.config;
        let mid = 0.5 * (c.lower + c.upper);
        let d = c.dim as f64;
        Vector::from_iterator(
            c.dim,
            (0..c.dim).map(|i| {
                mid + c.amplitude * (TAU * (t as f64 / c.period + i as f64 / d) + self.phase).sin()
            }),
        )
    }

    fn budget(&self, t: usize) -> f64 {
        let c = &self.config;
        c.budget * (1.0 + 0.5 * (TAU * t as f64 / c.period + self.phase).sin())
    }
}

impl LossOracle for SyntheticInstance {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn query(&self, t: usize, x: &Vector) -> bansap::Result<f64> {
        Ok((x - self.target(t)).norm_squared())
    }

    fn bounds(&self) -> LossBounds {
        let c = &self.config;
        let reach = (c.upper - c.lower) + c.amplitude + 0.5 * (c.upper - c.lower).abs();
        let d = c.dim as f64;
        LossBounds {
            value: Some(d * reach * reach),
            lipschitz: Some((2.0 * reach * d.sqrt()).max(d.sqrt())),
        }
    }
}

impl ExactLoss for SyntheticInstance {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn value(&self, t: usize, x: &Vector) -> bansap::Result<f64> {
        self.query(t, x)
    }

    fn gradient(&self, t: usize, x: &Vector) -> bansap::Result<Vector> {
        Ok((x - self.target(t)) * 2.0)
    }
}

impl GradientOracle for SyntheticInstance {
    fn gradient(&self, t: usize, x: &Vector) -> bansap::Result<Vector> {
        ExactLoss::gradient(self, t, x)
    }
}

impl ConstraintOracle for SyntheticInstance {
    fn count(&self) -> usize {
        1
    }

    fn value(&self, t: usize, x: &Vector) -> bansap::Result<Vector> {
        Ok(Vector::from_element(1, x.sum() - self.budget(t)))
    }

    fn jacobian(&self, _t: usize, x: &Vector) -> bansap::Result<Matrix> {
        Ok(Matrix::from_element(1, x.len(), 1.0))
    }
}

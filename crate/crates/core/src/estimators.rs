//! Zeroth-order gradient estimators.
//!
//! All estimators use the `d/δ` scaling of the sphere-smoothing identity:
//!
//! ```text
//! one-point   g = (d/δ) f(x + δu) u
//! two-point   g = (d/2δ) (f(x + δu) - f(x - δu)) u
//! M-point     g = d/(δ(M-1)) Σ_{m<M} (f(x + δu_m) - f(x)) u_m
//! ```
//!
//! For `u` uniform on the sphere the one-point estimate is unbiased for the
//! gradient of the ball-smoothed loss `E_v[f(x + δv)]`. Coordinate sampling
//! keeps the same scaling and is treated as an empirical variant only.
//!
//! Each estimate carries the points it queried and the observed losses, so
//! the solver and the metrics never re-derive played actions.

use std::cell::Cell;

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{sample_ball, sample_direction, BoxSet, Direction, SamplingScheme};
use crate::Vector;

/// Declared bounds of a loss over the feasible set: `|f| <= F` and
/// `||∇f|| <= G`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBounds {
    pub value: Option<f64>,
    pub lipschitz: Option<f64>,
}

/// Bandit access to a time-varying loss: values at queried points only.
pub trait LossOracle {
    fn dim(&self) -> usize;

    fn query(&self, t: usize, x: &Vector) -> Result<f64>;

    fn bounds(&self) -> LossBounds {
        LossBounds::default()
    }
}

impl<T: LossOracle + ?Sized> LossOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn query(&self, t: usize, x: &Vector) -> Result<f64> {
        (**self).query(t, x)
    }

    fn bounds(&self) -> LossBounds {
        (**self).bounds()
    }
}

/// Wraps an oracle and refuses more than `budget` queries in any slot.
pub struct BudgetedOracle<'a> {
    inner: &'a dyn LossOracle,
    budget: usize,
    slot: Cell<Option<usize>>,
    used: Cell<usize>,
    total: Cell<usize>,
}

impl<'a> BudgetedOracle<'a> {
    pub fn new(inner: &'a dyn LossOracle, budget: usize) -> Self {
        Self {
            inner,
            budget,
            slot: Cell::new(None),
            used: Cell::new(0),
            total: Cell::new(0),
        }
    }

    /// Queries issued in slot `t` so far.
    pub fn queries_in_slot(&self, t: usize) -> usize {
        if self.slot.get() == Some(t) {
            self.used.get()
        } else {
            0
        }
    }

    pub fn total_queries(&self) -> usize {
        self.total.get()
    }
}

impl LossOracle for BudgetedOracle<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn query(&self, t: usize, x: &Vector) -> Result<f64> {
        if self.slot.get() != Some(t) {
            self.slot.set(Some(t));
            self.used.set(0);
        }
        if self.used.get() >= self.budget {
            return Err(Error::ContractViolation(format!(
                "slot {t}: query budget of {} exhausted",
                self.budget
            )));
        }
        self.used.set(self.used.get() + 1);
        self.total.set(self.total.get() + 1);
        self.inner.query(t, x)
    }

    fn bounds(&self) -> LossBounds {
        self.inner.bounds()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    OnePoint,
    TwoPoint,
    MultiPoint(usize),
    /// True gradient at the learning iterate (full information).
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub g: Vector,
    /// Played actions, in query order.
    pub points: Vec<Vector>,
    /// Observed losses, aligned with `points`.
    pub losses: Vec<f64>,
    pub kind: EstimatorKind,
}

impl GradientEstimate {
    /// Checks the norm bounds `||g|| <= dF/δ` (one-point) and `||g|| <= dG`
    /// (two- and M-point) when the corresponding constants are declared.
    pub fn check_bounds(&self, bounds: LossBounds, delta: f64) -> Result<()> {
        let d = self.g.len() as f64;
        let limit = match self.kind {
            EstimatorKind::OnePoint => bounds.value.map(|f| d * f / delta),
            EstimatorKind::TwoPoint | EstimatorKind::MultiPoint(_) => {
                bounds.lipschitz.map(|g| d * g)
            }
            EstimatorKind::Exact => bounds.lipschitz,
        };
        match limit {
            Some(limit) if self.g.norm() > limit + 1e-9 * limit.max(1.0) => {
                Err(Error::ContractViolation(format!(
                    "{:?} estimate norm {} exceeds bound {limit}",
                    self.kind,
                    self.g.norm()
                )))
            }
            _ => Ok(()),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "exploration radius delta={delta} must be positive"
        )))
    }
}

fn observe(
    oracle: &dyn LossOracle,
    set: &BoxSet,
    t: usize,
    point: Vector,
) -> Result<(Vector, f64)> {
    let point = set.snap_inside(point)?;
    let value = oracle.query(t, &point)?;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            slot: t,
            what: "loss value",
        });
    }
    Ok((point, value))
}

/// `(d/δ) f_t(x̂ + δu) u`, playing the single action `x̂ + δu`.
pub fn one_point_grad(
    oracle: &dyn LossOracle,
    set: &BoxSet,
    t: usize,
    x_hat: &Vector,
    delta: f64,
    u: &Direction,
) -> Result<GradientEstimate> {
    check_delta(delta)?;
    check_dim(set.dim(), x_hat.len())?;
    check_dim(x_hat.len(), u.dim())?;
    let d = x_hat.len() as f64;
    let (point, value) = observe(oracle, set, t, x_hat + u.as_vector() * delta)?;
    Ok(GradientEstimate {
        g: u.as_vector() * (d / delta * value),
        points: vec![point],
        losses: vec![value],
        kind: EstimatorKind::OnePoint,
    })
}

/// `(d/2δ) (f_t(x̂ + δu) - f_t(x̂ - δu)) u`, playing `x̂ ± δu`.
pub fn two_point_grad(
    oracle: &dyn LossOracle,
    set: &BoxSet,
    t: usize,
    x_hat: &Vector,
    delta: f64,
    u: &Direction,
) -> Result<GradientEstimate> {
    check_delta(delta)?;
    check_dim(set.dim(), x_hat.len())?;
    check_dim(x_hat.len(), u.dim())?;
    let d = x_hat.len() as f64;
    let step = u.as_vector() * delta;
    let (plus, f_plus) = observe(oracle, set, t, x_hat + &step)?;
    let (minus, f_minus) = observe(oracle, set, t, x_hat - &step)?;
    Ok(GradientEstimate {
        g: u.as_vector() * (d / (2.0 * delta) * (f_plus - f_minus)),
        points: vec![plus, minus],
        losses: vec![f_plus, f_minus],
        kind: EstimatorKind::TwoPoint,
    })
}

/// M-point estimate (`M >= 3`): queries `x̂` itself and `M - 1` perturbations
/// along independent directions drawn from `scheme`.
#[allow(clippy::too_many_arguments)]
pub fn m_point_grad<R: Rng + ?Sized>(
    oracle: &dyn LossOracle,
    set: &BoxSet,
    t: usize,
    x_hat: &Vector,
    delta: f64,
    m: usize,
    scheme: SamplingScheme,
    rng: &mut R,
) -> Result<GradientEstimate> {
    if m < 3 {
        return Err(Error::invalid(format!(
            "M-point estimator needs M >= 3 (got {m}); use the one- or two-point estimator"
        )));
    }
    check_delta(delta)?;
    check_dim(set.dim(), x_hat.len())?;
    let d = x_hat.len();
    let (center, f_center) = observe(oracle, set, t, x_hat.clone())?;
    let mut g = Vector::zeros(d);
    let mut points = Vec::with_capacity(m);
    let mut losses = Vec::with_capacity(m);
    points.push(center);
    losses.push(f_center);
    for _ in 1..m {
        let u = sample_direction(scheme, d, rng)?;
        let (p, v) = observe(oracle, set, t, x_hat + u.as_vector() * delta)?;
        g.axpy(v - f_center, u.as_vector(), 1.0);
        points.push(p);
        losses.push(v);
    }
    g *= d as f64 / (delta * (m - 1) as f64);
    Ok(GradientEstimate {
        g,
        points,
        losses,
        kind: EstimatorKind::MultiPoint(m),
    })
}

/// Monte-Carlo estimate of the ball-smoothed loss `E_v[f_t(x + δv)]`.
///
/// Test oracle only; it bypasses any query budget.
pub fn smoothed_value<R: Rng + ?Sized>(
    oracle: &dyn LossOracle,
    t: usize,
    x: &Vector,
    delta: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    check_delta(delta)?;
    if n_samples == 0 {
        return Err(Error::invalid("smoothed_value needs at least one sample"));
    }
    let d = x.len();
    let mut sum = 0.0;
    for _ in 0..n_samples {
        let v = sample_ball(d, rng)?;
        sum += oracle.query(t, &(x + v * delta))?;
    }
    Ok(sum / n_samples as f64)
}

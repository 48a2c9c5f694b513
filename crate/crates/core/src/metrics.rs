//! Clairvoyant benchmarks and performance measures.
//!
//! Everything here has access to the exact loss through [`ExactLoss`]; the
//! online algorithms never do.

use crate::error::{check_dim, Error, Result};
use crate::geometry::BoxSet;
use crate::solver::{ConstraintOracle, SlotRecord};
use crate::{Matrix, Vector};

/// Exact access to `f_t`, reserved for offline benchmark computation.
pub trait ExactLoss {
    fn dim(&self) -> usize;

    fn value(&self, t: usize, x: &Vector) -> Result<f64>;

    fn gradient(&self, t: usize, x: &Vector) -> Result<Vector>;
}

impl<T: ExactLoss + ?Sized> ExactLoss for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, t: usize, x: &Vector) -> Result<f64> {
        (**self).value(t, x)
    }

    fn gradient(&self, t: usize, x: &Vector) -> Result<Vector> {
        (**self).gradient(t, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumConfig {
    /// KKT tolerance.
    pub tol: f64,
    /// Cap on inner projected-gradient iterations, summed over outer rounds.
    pub max_iter: usize,
}

impl Default for OptimumConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 100_000,
        }
    }
}

/// KKT residuals of a returned point.
///
/// Stationarity is the projected-gradient residual of the Lagrangian scaled
/// by `max(1, ||∇f||_inf)`; feasibility is `max_j g_j^+`; complementarity is
/// `max_j |min(λ_j, -g_j)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktCertificate {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    pub iterations: usize,
}

impl KktCertificate {
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.feasibility)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedOptimum {
    pub x: Vector,
    pub value: f64,
    pub multipliers: Vector,
    pub certificate: KktCertificate,
}

/// Smooth objective over a box, as seen by the inner solver.
trait Objective {
    fn eval(&mut self, x: &Vector) -> Result<(f64, Vector)>;
}

impl<F: FnMut(&Vector) -> Result<(f64, Vector)>> Objective for F {
    fn eval(&mut self, x: &Vector) -> Result<(f64, Vector)> {
        self(x)
    }
}

struct SpgOutcome {
    x: Vector,
    iterations: usize,
}

fn pg_residual(set: &BoxSet, x: &Vector, g: &Vector) -> f64 {
    let step = x - g;
    set.clamp(&step).zip_map(x, |p, xi| (p - xi).abs()).amax()
}

/// Spectral projected gradient with a nonmonotone Armijo search.
fn spg(
    obj: &mut dyn Objective,
    set: &BoxSet,
    x0: Vector,
    tol: impl Fn(&Vector) -> f64,
    max_iter: usize,
) -> Result<SpgOutcome> {
    const MEMORY: usize = 10;
    const ARMIJO: f64 = 1e-4;
    const STEP_MIN: f64 = 1e-12;
    const STEP_MAX: f64 = 1e12;

    let mut x = set.clamp(&x0);
    let (mut f, mut g) = obj.eval(&x)?;
    let mut history = [f; MEMORY];
    let mut step = 1.0 / g.amax().max(1.0);
    let mut iterations = 0;
    loop {
        let residual = pg_residual(set, &x, &g);
        if residual <= tol(&g) || iterations >= max_iter {
            return Ok(SpgOutcome { x, iterations });
        }
        iterations += 1;
        let direction = set.clamp(&(&x - &g * step)) - &x;
        let slope = g.dot(&direction);
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let (x_new, f_new, g_new) = loop {
            let trial = &x + &direction * lambda;
            let (ft, gt) = obj.eval(&trial)?;
            if ft.is_finite() && ft <= reference + ARMIJO * lambda * slope {
                break (trial, ft, gt);
            }
            if lambda < 1e-20 {
                // No decrease possible at working precision.
                return Ok(SpgOutcome { x, iterations });
            }
            lambda *= 0.5;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        step = if sy > 0.0 {
            (s.dot(&s) / sy).clamp(STEP_MIN, STEP_MAX)
        } else {
            STEP_MAX
        };
        x = x_new;
        f = f_new;
        g = g_new;
        history[iterations % MEMORY] = f;
    }
}

fn positive_part(v: &Vector) -> Vector {
    v.map(|x| x.max(0.0))
}

/// Decides whether `{x in set : g(x) <= 0}` is empty by minimizing
/// `½||g(x)^+||²` over the box.
fn feasible_point(
    cons: &dyn ConstraintOracle,
    set: &BoxSet,
    t: usize,
    x0: &Vector,
    cfg: &OptimumConfig,
) -> Result<Vector> {
    let mut phase_one = |x: &Vector| -> Result<(f64, Vector)> {
        let viol = positive_part(&cons.value(t, x)?);
        let jac = cons.jacobian(t, x)?;
        Ok((0.5 * viol.norm_squared(), jac.tr_mul(&viol)))
    };
    let out = spg(&mut phase_one, set, x0.clone(), |_| 1e-14, cfg.max_iter)?;
    let worst = positive_part(&cons.value(t, &out.x)?).amax();
    if worst > cfg.tol {
        return Err(Error::Infeasible(format!(
            "slot {t}: constraint violation cannot go below {worst:.3e} inside the box"
        )));
    }
    Ok(out.x)
}

/// Solves `min f_t(x) s.t. g_t(x) <= 0, x in set` by the method of multipliers
/// with projected-gradient inner solves.
///
/// `warm` seeds the primal point; the dual starts at zero.
pub fn per_slot_optimum(
    loss: &dyn ExactLoss,
    cons: &dyn ConstraintOracle,
    set: &BoxSet,
    t: usize,
    cfg: &OptimumConfig,
    warm: Option<&Vector>,
) -> Result<ConstrainedOptimum> {
    check_dim(set.dim(), loss.dim())?;
    let start = match warm {
        Some(w) => {
            check_dim(set.dim(), w.len())?;
            set.clamp(w)
        }
        None => set.center(),
    };
    let x0 = feasible_point(cons, set, t, &start, cfg)?;
    augmented_lagrangian(loss, cons, set, t, cfg, x0)
}

fn augmented_lagrangian(
    loss: &dyn ExactLoss,
    cons: &dyn ConstraintOracle,
    set: &BoxSet,
    t: usize,
    cfg: &OptimumConfig,
    mut x: Vector,
) -> Result<ConstrainedOptimum> {
    let n = cons.count();
    let mut lambda = Vector::zeros(n);
    let mut rho = 1.0;
    let mut inner_tol = 1e-2_f64.max(cfg.tol);
    let mut used = 0;
    let mut last_violation = f64::INFINITY;
    let mut best_residual = f64::INFINITY;

    while used < cfg.max_iter {
        let mut lagrangian = |y: &Vector| -> Result<(f64, Vector)> {
            let f = loss.value(t, y)?;
            let gf = loss.gradient(t, y)?;
            let shifted = positive_part(&(&lambda + cons.value(t, y)? * rho));
            let jac = cons.jacobian(t, y)?;
            let penalty = (shifted.norm_squared() - lambda.norm_squared()) / (2.0 * rho);
            Ok((f + penalty, gf + jac.tr_mul(&shifted)))
        };
        let scaled = |g: &Vector| inner_tol * g.amax().max(1.0);
        let out = spg(&mut lagrangian, set, x, scaled, cfg.max_iter - used)?;
        used += out.iterations;
        x = out.x;

        let g = cons.value(t, &x)?;
        lambda = positive_part(&(&lambda + &g * rho));
        let cert = certificate(loss, cons, set, t, &x, &lambda, used)?;
        best_residual = best_residual.min(cert.max_residual());
        if cert.max_residual() <= cfg.tol {
            return Ok(ConstrainedOptimum {
                value: loss.value(t, &x)?,
                x,
                multipliers: lambda,
                certificate: cert,
            });
        }
        if cert.feasibility.max(cert.complementarity) > 0.25 * last_violation {
            rho = (rho * 10.0).min(1e8);
        }
        last_violation = cert.feasibility.max(cert.complementarity);
        inner_tol = (inner_tol * 0.1).max(0.1 * cfg.tol);
    }
    Err(Error::NotConverged {
        iterations: used,
        residual: best_residual,
    })
}

fn certificate(
    loss: &dyn ExactLoss,
    cons: &dyn ConstraintOracle,
    set: &BoxSet,
    t: usize,
    x: &Vector,
    lambda: &Vector,
    iterations: usize,
) -> Result<KktCertificate> {
    let gf = loss.gradient(t, x)?;
    let g = cons.value(t, x)?;
    let jac: Matrix = cons.jacobian(t, x)?;
    let grad_l = &gf + jac.tr_mul(lambda);
    Ok(KktCertificate {
        stationarity: pg_residual(set, x, &grad_l) / gf.amax().max(1.0),
        feasibility: positive_part(&g).amax(),
        complementarity: lambda.zip_map(&g, |l, gj| l.min(-gj).abs()).amax(),
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimaSeries {
    pub x_star: Vec<Vector>,
    pub f_star: Vec<f64>,
    pub solver_tolerance: f64,
}

impl OptimaSeries {
    pub fn len(&self) -> usize {
        self.x_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_star.is_empty()
    }
}

/// Per-slot optima for `t = 1..=horizon`, each warm-started at the previous
/// minimizer.
pub fn optima_series(
    loss: &dyn ExactLoss,
    cons: &dyn ConstraintOracle,
    set: &BoxSet,
    horizon: usize,
    cfg: &OptimumConfig,
) -> Result<OptimaSeries> {
    let mut x_star = Vec::with_capacity(horizon);
    let mut f_star = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let opt =
            per_slot_optimum(loss, cons, set, t, cfg, x_star.last()).map_err(|e| e.at_slot(t))?;
        x_star.push(opt.x);
        f_star.push(opt.value);
    }
    Ok(OptimaSeries {
        x_star,
        f_star,
        solver_tolerance: cfg.tol,
    })
}

fn average_loss(loss: &dyn ExactLoss, rec: &SlotRecord) -> Result<f64> {
    let mut acc = 0.0;
    for a in &rec.actions {
        acc += loss.value(rec.slot, a)?;
    }
    Ok(acc / rec.actions.len() as f64)
}

/// Cumulative dynamic regret `Σ_{s<=t} [(1/M) Σ_m f_s(x_{m,s}) - f_s(x*_s)]`.
pub fn dynamic_regret(
    records: &[SlotRecord],
    optima: &OptimaSeries,
    loss: &dyn ExactLoss,
) -> Result<Vec<f64>> {
    check_dim(records.len(), optima.len())?;
    let mut total = 0.0;
    records
        .iter()
        .zip(&optima.f_star)
        .map(|(rec, f_star)| {
            total += average_loss(loss, rec)? - f_star;
            Ok(total)
        })
        .collect()
}

/// Running `Σ_t (1/M) Σ_m g_t(x_{m,t})` and its fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitAccumulator {
    sum: Vector,
}

impl FitAccumulator {
    pub fn new(n_constraints: usize) -> Self {
        Self {
            sum: Vector::zeros(n_constraints),
        }
    }

    pub fn push(&mut self, record: &SlotRecord) -> f64 {
        self.sum += record.average_constraint();
        self.fit()
    }

    pub fn cumulative(&self) -> &Vector {
        &self.sum
    }

    pub fn fit(&self) -> f64 {
        positive_part(&self.sum).norm()
    }
}

/// `||[Σ_t (1/M) Σ_m g_t(x_{m,t})]^+||`.
pub fn dynamic_fit(records: &[SlotRecord]) -> f64 {
    fit_series(records).last().copied().unwrap_or(0.0)
}

/// Fit after each slot.
pub fn fit_series(records: &[SlotRecord]) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let mut acc = FitAccumulator::new(first.g_at_xhat.len());
    records.iter().map(|r| acc.push(r)).collect()
}

/// `Σ_t ||x*_t - x*_{t-1}||` with `x*_0 = x*_1`.
pub fn variation(optima: &OptimaSeries) -> f64 {
    optima
        .x_star
        .windows(2)
        .map(|w| (&w[1] - &w[0]).norm())
        .sum()
}

/// `Σ_t f_t` and all `g_t` stacked into one program.
struct Stacked<'a> {
    loss: &'a dyn ExactLoss,
    cons: &'a dyn ConstraintOracle,
    horizon: usize,
}

impl ExactLoss for Stacked<'_> {
    fn dim(&self) -> usize {
        self.loss.dim()
    }

    fn value(&self, _t: usize, x: &Vector) -> Result<f64> {
        (1..=self.horizon).map(|s| self.loss.value(s, x)).sum()
    }

    fn gradient(&self, _t: usize, x: &Vector) -> Result<Vector> {
        let mut acc = Vector::zeros(x.len());
        for s in 1..=self.horizon {
            acc += self.loss.gradient(s, x)?;
        }
        Ok(acc)
    }
}

impl ConstraintOracle for Stacked<'_> {
    fn count(&self) -> usize {
        self.cons.count() * self.horizon
    }

    fn value(&self, _t: usize, x: &Vector) -> Result<Vector> {
        let n = self.cons.count();
        let mut out = Vector::zeros(n * self.horizon);
        for s in 1..=self.horizon {
            out.rows_mut((s - 1) * n, n)
                .copy_from(&self.cons.value(s, x)?);
        }
        Ok(out)
    }

    fn jacobian(&self, _t: usize, x: &Vector) -> Result<Matrix> {
        let n = self.cons.count();
        let mut out = Matrix::zeros(n * self.horizon, x.len());
        for s in 1..=self.horizon {
            out.rows_mut((s - 1) * n, n)
                .copy_from(&self.cons.jacobian(s, x)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticBenchmark {
    pub x_star: Vector,
    pub total_loss: f64,
    pub regret: f64,
}

/// Best fixed action in hindsight subject to every `g_t(x) <= 0`, and the
/// trajectory's regret against it.
pub fn static_optimum_and_regret(
    records: &[SlotRecord],
    loss: &dyn ExactLoss,
    cons: &dyn ConstraintOracle,
    set: &BoxSet,
    cfg: &OptimumConfig,
) -> Result<StaticBenchmark> {
    let horizon = records.len();
    if horizon == 0 {
        return Err(Error::invalid("static benchmark needs at least one slot"));
    }
    let stacked = Stacked {
        loss,
        cons,
        horizon,
    };
    let opt = per_slot_optimum(&stacked, &stacked, set, 1, cfg, None)?;
    let mut played = 0.0;
    for rec in records {
        played += average_loss(loss, rec)?;
    }
    Ok(StaticBenchmark {
        regret: played - opt.value,
        total_loss: opt.value,
        x_star: opt.x,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub cum_regret: Vec<f64>,
    pub cum_fit_vector: Vector,
    pub fit: f64,
    pub variation: f64,
    pub static_regret: Option<f64>,
}

impl MetricsSeries {
    pub fn compute(
        records: &[SlotRecord],
        optima: &OptimaSeries,
        loss: &dyn ExactLoss,
    ) -> Result<Self> {
        let cum_regret = dynamic_regret(records, optima, loss)?;
        let n = records.first().map_or(0, |r| r.g_at_xhat.len());
        let mut acc = FitAccumulator::new(n);
        for r in records {
            acc.push(r);
        }
        Ok(Self {
            cum_regret,
            fit: acc.fit(),
            cum_fit_vector: acc.sum,
            variation: variation(optima),
            static_regret: None,
        })
    }
}

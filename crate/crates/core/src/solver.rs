//! Online primal-dual steppers.
//!
//! One BanSaP slot, given the learning iterate `x̂_t` and multipliers `λ_t`:
//!
//! 1. play perturbed actions around `x̂_t` and build a gradient estimate `ĝ`;
//! 2. primal: `x̂_{t+1} = P_{(1-γ)X}(x̂_t - α (ĝ + ∇g_t(x̂_t)ᵀ λ_t))`;
//! 3. dual: `λ_{t+1} = [λ_t + μ (g_t(x̂_t) + ∇g_t(x̂_t)(x̂_{t+1} - x̂_t))]⁺`.
//!
//! The dual step linearizes the constraint at the old iterate and moves along
//! the new primal difference, so the primal update must come first. MOSP is
//! the same recursion fed with the true gradient and playing `x_t` itself.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimators::{
    self, BudgetedOracle, EstimatorKind, GradientEstimate, LossBounds, LossOracle,
};
use crate::geometry::{sample_direction, stream_rng, BoxSet, SamplingScheme};
use crate::{Matrix, Vector};

/// Stream index of the exploration randomness inside a run.
pub const EXPLORATION_STREAM: u64 = 1;

/// Time-varying constraint `g_t : R^d -> R^N`, revealed after each slot.
pub trait ConstraintOracle {
    fn count(&self) -> usize;

    fn value(&self, t: usize, x: &Vector) -> Result<Vector>;

    /// `N x d` Jacobian of `g_t` at `x`.
    fn jacobian(&self, t: usize, x: &Vector) -> Result<Matrix>;
}

/// Full-information access to `∇f_t`, used by MOSP only.
pub trait GradientOracle {
    fn gradient(&self, t: usize, x: &Vector) -> Result<Vector>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    CloudOnly,
    FogOnly,
}

/// Non-learning policies that decide from the current backlog alone.
///
/// `backlog` is the running sum of `g_t` at past actions; policies that never
/// over-serve keep it nonnegative.
pub trait HeuristicPolicy {
    fn action(&self, kind: Heuristic, t: usize, backlog: &Vector) -> Result<Vector>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(rename = "bansap")]
    BanSaP {
        m: usize,
        scheme: SamplingScheme,
    },
    Mosp,
    CloudOnly,
    FogOnly,
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::BanSaP { m, scheme } => format!("bansap_m{m}_{}", scheme.name()),
            Algorithm::Mosp => "mosp".into(),
            Algorithm::CloudOnly => "cloud_only".into(),
            Algorithm::FogOnly => "fog_only".into(),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Primal stepsize.
    pub alpha: f64,
    /// Dual stepsize.
    pub mu: f64,
    /// Exploration radius.
    pub delta: f64,
    /// Shrinkage of the feasible box toward its center.
    pub gamma: f64,
    /// Loss queries per slot.
    pub m: usize,
    pub scheme: SamplingScheme,
    pub horizon: usize,
    /// Variation exponent used by the schedule, when known.
    pub rho: Option<f64>,
    #[serde(default)]
    pub start: StartPoint,
}

/// Where the learning iterate starts inside the shrunken box.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPoint {
    #[default]
    Center,
    /// Componentwise smallest point, i.e. as little of every resource as
    /// the shrunken box allows.
    LowerCorner,
}

impl HyperParams {
    /// Hyperparameters specialized to `algo`: BanSaP takes its `M` and scheme,
    /// MOSP and the heuristics play one unperturbed action with no shrinkage.
    pub fn for_algorithm(mut self, algo: Algorithm) -> Self {
        match algo {
            Algorithm::BanSaP { m, scheme } => {
                self.m = m;
                self.scheme = scheme;
            }
            Algorithm::Mosp | Algorithm::CloudOnly | Algorithm::FogOnly => {
                self.m = 1;
                self.gamma = 0.0;
            }
        }
        self
    }

    /// Checks the parameter ranges and, for bandit feedback, that
    /// `γ r >= δ` so perturbed actions stay in `set`.
    pub fn validate(&self, set: &BoxSet, bandit: bool) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name}={v} must be positive and finite"
                )))
            }
        };
        positive("alpha", self.alpha)?;
        positive("mu", self.mu)?;
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!(
                "gamma={} outside [0, 1)",
                self.gamma
            )));
        }
        if self.m == 0 {
            return Err(Error::invalid("M must be >= 1"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon T must be >= 1"));
        }
        if let Some(rho) = self.rho {
            check_rho(rho)?;
        }
        if bandit {
            positive("delta", self.delta)?;
            let reach = self.gamma * set.inner_radius();
            if reach < self.delta * (1.0 - 1e-12) {
                return Err(Error::invalid(format!(
                    "gamma * r = {reach} is smaller than delta = {}; perturbed actions could leave the set",
                    self.delta
                )));
            }
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "variation exponent rho={rho} outside [0, 1)"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    OnePoint,
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConstants {
    pub c_alpha: f64,
    /// Separate dual constant; `None` keeps `μ = α`.
    #[serde(default)]
    pub c_mu: Option<f64>,
    pub c_delta: f64,
}

impl Default for ScheduleConstants {
    fn default() -> Self {
        Self {
            c_alpha: 1.0,
            c_mu: None,
            c_delta: 1.0,
        }
    }
}

/// Horizon-dependent stepsizes.
///
/// | mode | `α = μ` | `δ` |
/// |------|---------|-----|
/// | one-point | `c_α T^{-3/4}` | `c_δ T^{-1/4}` |
/// | two-point | `c_α T^{-1/2}` | `c_δ T^{-1}` |
/// | one-point, `ρ` | `c_α T^{3(ρ-1)/4}` | `c_δ T^{(ρ-1)/4}` |
/// | two-point, `ρ` | `c_α T^{(ρ-1)/2}` | `c_δ T^{(ρ-1)/2}` |
///
/// `γ = δ / r` with `r` the inner radius of `set`. Setting `c_mu` scales
/// `μ` by its own constant with the same exponent as `α`.
pub fn schedule(
    horizon: usize,
    mode: FeedbackMode,
    rho: Option<f64>,
    set: &BoxSet,
    constants: ScheduleConstants,
) -> Result<HyperParams> {
    if horizon == 0 {
        return Err(Error::invalid("horizon T must be >= 1"));
    }
    if let Some(rho) = rho {
        check_rho(rho)?;
    }
    let (step_exp, delta_exp) = match (mode, rho) {
        (FeedbackMode::OnePoint, None) => (-0.75, -0.25),
        (FeedbackMode::TwoPoint, None) => (-0.5, -1.0),
        (FeedbackMode::OnePoint, Some(rho)) => (0.75 * (rho - 1.0), 0.25 * (rho - 1.0)),
        (FeedbackMode::TwoPoint, Some(rho)) => (0.5 * (rho - 1.0), 0.5 * (rho - 1.0)),
    };
    let t = horizon as f64;
    let step = constants.c_alpha * t.powf(step_exp);
    let delta = constants.c_delta * t.powf(delta_exp);
    let gamma = delta / set.inner_radius();
    if gamma >= 1.0 {
        return Err(Error::invalid(format!(
            "delta={delta} needs gamma={gamma} >= 1 for a set with inner radius {}",
            set.inner_radius()
        )));
    }
    Ok(HyperParams {
        alpha: step,
        mu: constants.c_mu.map_or(step, |c| c * t.powf(step_exp)),
        delta,
        gamma,
        m: match mode {
            FeedbackMode::OnePoint => 1,
            FeedbackMode::TwoPoint => 2,
        },
        scheme: SamplingScheme::UniformSphere,
        horizon,
        rho,
        start: StartPoint::Center,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualState {
    pub x_hat: Vector,
    pub lambda: Vector,
    /// Slot the state is about to play (1-based).
    pub slot: usize,
}

impl PrimalDualState {
    /// `x̂_1` at the center of the (shrunken) box and `λ_1 = 0`.
    pub fn initial(set: &BoxSet, n_constraints: usize) -> Self {
        Self {
            x_hat: set.center(),
            lambda: Vector::zeros(n_constraints),
            slot: 1,
        }
    }

    /// `x̂_1` at `start` within `set` shrunk by `gamma`, and `λ_1 = 0`.
    pub fn starting_at(
        start: StartPoint,
        set: &BoxSet,
        gamma: f64,
        n_constraints: usize,
    ) -> Result<Self> {
        let x_hat = match start {
            StartPoint::Center => set.center(),
            StartPoint::LowerCorner => set.shrink(gamma)?.lower().clone(),
        };
        Ok(Self {
            x_hat,
            lambda: Vector::zeros(n_constraints),
            slot: 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    /// Played actions `x_{m,t}`.
    pub actions: Vec<Vector>,
    /// `f_t` at each played action.
    pub losses: Vec<f64>,
    /// `g_t` at each played action.
    pub g_at_actions: Vec<Vector>,
    /// `g_t(x̂_t)`.
    pub g_at_xhat: Vector,
    /// `λ_t` in force during the slot.
    pub lambda: Vector,
    pub lambda_norm: f64,
    pub x_hat: Vector,
}

impl SlotRecord {
    pub fn average_loss(&self) -> f64 {
        self.losses.iter().sum::<f64>() / self.losses.len() as f64
    }

    /// `(1/M) Σ_m g_t(x_{m,t})`.
    pub fn average_constraint(&self) -> Vector {
        let mut acc = Vector::zeros(self.g_at_xhat.len());
        for g in &self.g_at_actions {
            acc += g;
        }
        acc / self.g_at_actions.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algorithm: Algorithm,
    pub records: Vec<SlotRecord>,
    pub hyper: HyperParams,
    pub seed: u64,
}

/// Produces the loss-gradient estimate of one slot.
pub trait GradientSource {
    fn estimate(
        &mut self,
        t: usize,
        x_hat: &Vector,
        delta: f64,
        rng: &mut dyn RngCore,
    ) -> Result<GradientEstimate>;

    fn bounds(&self) -> LossBounds {
        LossBounds::default()
    }
}

/// Bandit feedback: `m` loss queries per slot through a budgeted oracle.
pub struct BanditGradient<'a> {
    oracle: BudgetedOracle<'a>,
    set: &'a BoxSet,
    m: usize,
    scheme: SamplingScheme,
}

impl<'a> BanditGradient<'a> {
    pub fn new(
        oracle: &'a dyn LossOracle,
        set: &'a BoxSet,
        m: usize,
        scheme: SamplingScheme,
    ) -> Self {
        Self {
            oracle: BudgetedOracle::new(oracle, m),
            set,
            m,
            scheme,
        }
    }

    pub fn total_queries(&self) -> usize {
        self.oracle.total_queries()
    }
}

impl GradientSource for BanditGradient<'_> {
    fn estimate(
        &mut self,
        t: usize,
        x_hat: &Vector,
        delta: f64,
        rng: &mut dyn RngCore,
    ) -> Result<GradientEstimate> {
        let d = x_hat.len();
        match self.m {
            0 => Err(Error::invalid("M must be >= 1")),
            1 => {
                let u = sample_direction(self.scheme, d, rng)?;
                estimators::one_point_grad(&self.oracle, self.set, t, x_hat, delta, &u)
            }
            2 => {
                let u = sample_direction(self.scheme, d, rng)?;
                estimators::two_point_grad(&self.oracle, self.set, t, x_hat, delta, &u)
            }
            m => estimators::m_point_grad(
                &self.oracle,
                self.set,
                t,
                x_hat,
                delta,
                m,
                self.scheme,
                rng,
            ),
        }
    }

    fn bounds(&self) -> LossBounds {
        self.oracle.bounds()
    }
}

/// Zero-variance source: the true gradient at `x̂_t`, playing `x̂_t` itself.
pub struct ExactGradient<'a> {
    pub gradient: &'a dyn GradientOracle,
    pub loss: &'a dyn LossOracle,
}

impl GradientSource for ExactGradient<'_> {
    fn estimate(
        &mut self,
        t: usize,
        x_hat: &Vector,
        _delta: f64,
        _rng: &mut dyn RngCore,
    ) -> Result<GradientEstimate> {
        let value = self.loss.query(t, x_hat)?;
        Ok(GradientEstimate {
            g: self.gradient.gradient(t, x_hat)?,
            points: vec![x_hat.clone()],
            losses: vec![value],
            kind: EstimatorKind::Exact,
        })
    }
}

fn ensure_finite(v: &Vector, slot: usize, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { slot, what })
    }
}

fn constraint_at(cons: &dyn ConstraintOracle, t: usize, x: &Vector) -> Result<Vector> {
    let g = cons.value(t, x)?;
    check_dim(cons.count(), g.len())?;
    ensure_finite(&g, t, "constraint value")?;
    Ok(g)
}

fn jacobian_at(cons: &dyn ConstraintOracle, t: usize, x: &Vector) -> Result<Matrix> {
    let jac = cons.jacobian(t, x)?;
    if jac.nrows() != cons.count() || jac.ncols() != x.len() {
        return Err(Error::ContractViolation(format!(
            "jacobian is {}x{}, expected {}x{}",
            jac.nrows(),
            jac.ncols(),
            cons.count(),
            x.len()
        )));
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            slot: t,
            what: "constraint jacobian",
        });
    }
    Ok(jac)
}

/// One BanSaP slot. `set` is the full feasible box `X`; the primal iterate is
/// projected onto its `γ`-shrunken version.
pub fn bansap_step<R: Rng + ?Sized>(
    state: &PrimalDualState,
    source: &mut dyn GradientSource,
    cons: &dyn ConstraintOracle,
    set: &BoxSet,
    hp: &HyperParams,
    rng: &mut R,
) -> Result<(PrimalDualState, SlotRecord)> {
    let t = state.slot;
    check_dim(set.dim(), state.x_hat.len())?;
    check_dim(cons.count(), state.lambda.len())?;
    let shrunk = set.shrink(hp.gamma)?;

    let mut dyn_rng = RngAdapter(rng);
    let est = source.estimate(t, &state.x_hat, hp.delta, &mut dyn_rng)?;
    ensure_finite(&est.g, t, "gradient estimate")?;
    if cfg!(debug_assertions) {
        est.check_bounds(source.bounds(), hp.delta)?;
    }

    let g_hat = constraint_at(cons, t, &state.x_hat)?;
    let jac = jacobian_at(cons, t, &state.x_hat)?;

    let lagrangian_grad = &est.g + jac.tr_mul(&state.lambda);
    let x_next = shrunk.project(&(&state.x_hat - lagrangian_grad * hp.alpha))?;
    let residual = &g_hat + &jac * (&x_next - &state.x_hat);
    let lambda_next = (&state.lambda + residual * hp.mu).map(|v| v.max(0.0));

    let g_at_actions = est
        .points
        .iter()
        .map(|a| constraint_at(cons, t, a))
        .collect::<Result<Vec<_>>>()?;

    let record = SlotRecord {
        slot: t,
        actions: est.points,
        losses: est.losses,
        g_at_actions,
        g_at_xhat: g_hat,
        lambda_norm: state.lambda.norm(),
        lambda: state.lambda.clone(),
        x_hat: state.x_hat.clone(),
    };
    let next = PrimalDualState {
        x_hat: x_next,
        lambda: lambda_next,
        slot: t + 1,
    };
    Ok((next, record))
}

/// One full-information saddle-point slot, written out coordinate by
/// coordinate: `x_{t+1} = P(x_t - α(∇f_t + ∇g_tᵀλ_t))`, then the linearized
/// dual step. Plays `x_t` itself.
pub fn mosp_step(
    state: &PrimalDualState,
    gradient: &dyn GradientOracle,
    loss: &dyn LossOracle,
    cons: &dyn ConstraintOracle,
    set: &BoxSet,
    hp: &HyperParams,
) -> Result<(PrimalDualState, SlotRecord)> {
    let t = state.slot;
    let d = set.dim();
    let n = cons.count();
    check_dim(d, state.x_hat.len())?;
    check_dim(n, state.lambda.len())?;
    let shrunk = set.shrink(hp.gamma)?;
    let x = &state.x_hat;

    let value = loss.query(t, x)?;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            slot: t,
            what: "loss value",
        });
    }
    let grad = gradient.gradient(t, x)?;
    check_dim(d, grad.len())?;
    ensure_finite(&grad, t, "loss gradient")?;
    let g = constraint_at(cons, t, x)?;
    let jac = jacobian_at(cons, t, x)?;

    let mut x_next = Vector::zeros(d);
    for i in 0..d {
        let mut dl = grad[i];
        for j in 0..n {
            dl += jac[(j, i)] * state.lambda[j];
        }
        let lo = shrunk.lower()[i];
        let hi = shrunk.upper()[i];
        x_next[i] = (x[i] - hp.alpha * dl).max(lo).min(hi);
    }
    let mut lambda_next = Vector::zeros(n);
    for j in 0..n {
        let mut lin = 0.0;
        for i in 0..d {
            lin += jac[(j, i)] * (x_next[i] - x[i]);
        }
        lambda_next[j] = (state.lambda[j] + hp.mu * (g[j] + lin)).max(0.0);
    }

    let record = SlotRecord {
        slot: t,
        actions: vec![x.clone()],
        losses: vec![value],
        g_at_actions: vec![g.clone()],
        g_at_xhat: g,
        lambda_norm: state.lambda.norm(),
        lambda: state.lambda.clone(),
        x_hat: x.clone(),
    };
    Ok((
        PrimalDualState {
            x_hat: x_next,
            lambda: lambda_next,
            slot: t + 1,
        },
        record,
    ))
}

/// Bridges a generic `Rng` into the object-safe `RngCore` the sources take.
struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Everything a run needs from the environment.
///
/// `gradient` is consulted by MOSP only and `heuristics` by the cloud-only and
/// fog-only baselines; BanSaP sees the loss through `loss` alone.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub set: &'a BoxSet,
    pub loss: &'a dyn LossOracle,
    pub constraints: &'a dyn ConstraintOracle,
    pub gradient: Option<&'a dyn GradientOracle>,
    pub heuristics: Option<&'a dyn HeuristicPolicy>,
}

impl<'a> Problem<'a> {
    pub fn new(
        set: &'a BoxSet,
        loss: &'a dyn LossOracle,
        constraints: &'a dyn ConstraintOracle,
    ) -> Self {
        Self {
            set,
            loss,
            constraints,
            gradient: None,
            heuristics: None,
        }
    }

    pub fn with_gradient(mut self, gradient: &'a dyn GradientOracle) -> Self {
        self.gradient = Some(gradient);
        self
    }

    pub fn with_heuristics(mut self, heuristics: &'a dyn HeuristicPolicy) -> Self {
        self.heuristics = Some(heuristics);
        self
    }
}

/// Runs `hp.horizon` slots of `algo` and collects every slot record.
pub fn run(
    problem: &Problem<'_>,
    algo: Algorithm,
    hp: &HyperParams,
    seed: u64,
) -> Result<Trajectory> {
    let mut records = Vec::with_capacity(hp.horizon);
    let hyper = run_with(problem, algo, hp, seed, |rec| {
        records.push(rec.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        algorithm: algo,
        records,
        hyper,
        seed,
    })
}

/// Streaming variant of [`run`]: hands each slot record to `observe` instead
/// of storing it. Returns the effective hyperparameters.
pub fn run_with<F>(
    problem: &Problem<'_>,
    algo: Algorithm,
    hp: &HyperParams,
    seed: u64,
    mut observe: F,
) -> Result<HyperParams>
where
    F: FnMut(&SlotRecord) -> Result<()>,
{
    let hp = hp.for_algorithm(algo);
    if hp.horizon == 0 {
        return Ok(hp);
    }
    let set = problem.set;
    let cons = problem.constraints;
    check_dim(set.dim(), problem.loss.dim())?;
    hp.validate(set, matches!(algo, Algorithm::BanSaP { .. }))?;

    let mut state = PrimalDualState::starting_at(hp.start, set, hp.gamma, cons.count())?;
    match algo {
        Algorithm::BanSaP { m, scheme } => {
            let mut rng = stream_rng(seed, EXPLORATION_STREAM);
            let mut source = BanditGradient::new(problem.loss, set, m, scheme);
            for t in 1..=hp.horizon {
                let (next, rec) = bansap_step(&state, &mut source, cons, set, &hp, &mut rng)
                    .map_err(|e| e.at_slot(t))?;
                observe(&rec)?;
                state = next;
            }
        }
        Algorithm::Mosp => {
            let gradient = problem
                .gradient
                .ok_or_else(|| Error::invalid("MOSP needs a gradient oracle"))?;
            for t in 1..=hp.horizon {
                let (next, rec) = mosp_step(&state, gradient, problem.loss, cons, set, &hp)
                    .map_err(|e| e.at_slot(t))?;
                observe(&rec)?;
                state = next;
            }
        }
        Algorithm::CloudOnly | Algorithm::FogOnly => {
            let policy = problem
                .heuristics
                .ok_or_else(|| Error::invalid(format!("{algo} needs a heuristic policy")))?;
            let kind = if algo == Algorithm::CloudOnly {
                Heuristic::CloudOnly
            } else {
                Heuristic::FogOnly
            };
            let mut backlog = Vector::zeros(cons.count());
            for t in 1..=hp.horizon {
                let rec =
                    heuristic_slot(problem, policy, kind, t, &backlog).map_err(|e| e.at_slot(t))?;
                backlog += &rec.g_at_xhat;
                observe(&rec)?;
            }
        }
    }
    Ok(hp)
}

fn heuristic_slot(
    problem: &Problem<'_>,
    policy: &dyn HeuristicPolicy,
    kind: Heuristic,
    t: usize,
    backlog: &Vector,
) -> Result<SlotRecord> {
    let x = problem.set.snap_inside(policy.action(kind, t, backlog)?)?;
    let value = problem.loss.query(t, &x)?;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            slot: t,
            what: "loss value",
        });
    }
    let g = constraint_at(problem.constraints, t, &x)?;
    let n = g.len();
    Ok(SlotRecord {
        slot: t,
        actions: vec![x.clone()],
        losses: vec![value],
        g_at_actions: vec![g.clone()],
        g_at_xhat: g,
        lambda: Vector::zeros(n),
        lambda_norm: 0.0,
        x_hat: x,
    })
}

/// Constants entering the uniform dual bound `C` of the one-point recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBoundConstants {
    /// Loss value bound `F`.
    pub value_bound: f64,
    /// Gradient bound `G` (loss and constraint rows).
    pub lipschitz: f64,
    /// Outer radius `R` of the feasible set.
    pub outer_radius: f64,
    /// Slater slack `η`: some interior point has `g_t <= -η` for all `t`.
    pub slater_slack: f64,
    pub dim: usize,
}

/// `C = max{2GR, (1/η + 1)GR + 2G²R²μ/η + d²F²α/(ηδ²) + μR²/(2αη)}`.
pub fn dual_bound_constant(c: &DualBoundConstants, hp: &HyperParams) -> f64 {
    let (g, r, eta) = (c.lipschitz, c.outer_radius, c.slater_slack);
    let d = c.dim as f64;
    let f = c.value_bound;
    let second = (1.0 / eta + 1.0) * g * r
        + 2.0 * g * g * r * r * hp.mu / eta
        + d * d * f * f * hp.alpha / (eta * hp.delta * hp.delta)
        + hp.mu * r * r / (2.0 * hp.alpha * eta);
    (2.0 * g * r).max(second)
}

/// Tracks `||λ_t||` over a run to check that the multipliers stay bounded.
#[derive(Debug, Clone, Default)]
pub struct DualMonitor {
    norms: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualReport {
    pub max_norm: f64,
    pub first_half_max: f64,
    pub second_half_max: f64,
    /// `second_half_max / first_half_max`; a plateau keeps this near or below 1.
    pub plateau_ratio: f64,
}

impl DualMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, record: &SlotRecord) {
        self.norms.push(record.lambda_norm);
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn report(&self) -> DualReport {
        let half = self.norms.len() / 2;
        let max = |s: &[f64]| s.iter().copied().fold(0.0, f64::max);
        let first = max(&self.norms[..half]);
        let second = max(&self.norms[half..]);
        DualReport {
            max_norm: first.max(second),
            first_half_max: first,
            second_half_max: second,
            plateau_ratio: if first > 0.0 {
                second / first
            } else {
                f64::INFINITY
            },
        }
    }

    /// Whether every observed norm respects the analytic bound `C`.
    pub fn within(&self, bound: f64) -> bool {
        self.norms.iter().all(|n| *n <= bound)
    }
}

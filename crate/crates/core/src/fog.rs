//! Fog computation offloading.
//!
//! `N` fog nodes receive workload `b_t^n` each slot. Node `n` can push
//! `z^n` to the cloud, forward `y^{nk}` to each out-neighbor `k`, and process
//! `y^{nn}` itself. The decision vector is laid out as
//! `[z^1..z^N | y^{nk} per link in link order | y^{11}..y^{NN}]`.
//!
//! Per-slot cost:
//! `f_t(x) = Σ_n (exp(p_t^n z^n) + Σ_k l^{nk} y^{nk} + l^{nn} (y^{nn})²)`.
//!
//! Workload conservation, required on average over time:
//! `g^n_t(x) = b_t^n + Σ_{k->n} y^{kn} - Σ_{n->k} y^{nk} - z^n - y^{nn} <= 0`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimators::{LossBounds, LossOracle};
use crate::geometry::{stream_rng, BoxSet};
use crate::metrics::ExactLoss;
use crate::solver::{
    ConstraintOracle, GradientOracle, Heuristic, HeuristicPolicy, HyperParams, PrimalDualState,
};
use crate::{Matrix, Vector};

/// Stream index of instance randomness (amplitudes and arrival noise).
pub const INSTANCE_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    Cloud(usize),
    /// Index into [`FogNetwork::links`].
    Link(usize),
    Local(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct FogNetwork {
    out_links: Vec<Vec<usize>>,
    cloud_capacity: Vec<f64>,
    link_capacity: Vec<f64>,
    local_capacity: Vec<f64>,
    links: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    out_links: Vec<Vec<usize>>,
    cloud_capacity: Vec<f64>,
    /// One entry per directed link, in the order of `out_links` flattened.
    link_capacity: Vec<f64>,
    local_capacity: Vec<f64>,
}

impl TryFrom<RawNetwork> for FogNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        FogNetwork::new(
            raw.out_links,
            raw.cloud_capacity,
            raw.link_capacity,
            raw.local_capacity,
        )
    }
}

impl From<FogNetwork> for RawNetwork {
    fn from(net: FogNetwork) -> Self {
        RawNetwork {
            out_links: net.out_links,
            cloud_capacity: net.cloud_capacity,
            link_capacity: net.link_capacity,
            local_capacity: net.local_capacity,
        }
    }
}

impl FogNetwork {
    pub fn new(
        out_links: Vec<Vec<usize>>,
        cloud_capacity: Vec<f64>,
        link_capacity: Vec<f64>,
        local_capacity: Vec<f64>,
    ) -> Result<Self> {
        let n = out_links.len();
        if n == 0 {
            return Err(Error::invalid("fog network needs at least one node"));
        }
        check_dim(n, cloud_capacity.len())?;
        check_dim(n, local_capacity.len())?;
        let mut links = Vec::new();
        for (from, outs) in out_links.iter().enumerate() {
            for (i, &to) in outs.iter().enumerate() {
                if to >= n {
                    return Err(Error::invalid(format!(
                        "link {from}->{to} points outside the network"
                    )));
                }
                if to == from {
                    return Err(Error::invalid(format!("self-loop at node {from}")));
                }
                if outs[..i].contains(&to) {
                    return Err(Error::invalid(format!("duplicate link {from}->{to}")));
                }
                links.push((from, to));
            }
        }
        check_dim(links.len(), link_capacity.len())?;
        let all_positive = cloud_capacity
            .iter()
            .chain(&link_capacity)
            .chain(&local_capacity)
            .all(|c| *c > 0.0 && c.is_finite());
        if !all_positive {
            return Err(Error::invalid("capacities must be positive and finite"));
        }
        Ok(Self {
            out_links,
            cloud_capacity,
            link_capacity,
            local_capacity,
            links,
        })
    }

    /// Node `n` forwards to `n+1` and `n+2` (mod `N`), skipping self-loops
    /// and duplicates on tiny rings.
    pub fn ring_chord(n: usize, cloud: f64, link: f64, local: f64) -> Result<Self> {
        let out_links: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut outs = Vec::new();
                for hop in [1, 2] {
                    let k = (i + hop) % n;
                    if k != i && !outs.contains(&k) {
                        outs.push(k);
                    }
                }
                outs
            })
            .collect();
        let n_links = out_links.iter().map(Vec::len).sum();
        Self::new(
            out_links,
            vec![cloud; n],
            vec![link; n_links],
            vec![local; n],
        )
    }

    pub fn nodes(&self) -> usize {
        self.out_links.len()
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn out_links(&self, node: usize) -> &[usize] {
        &self.out_links[node]
    }

    pub fn dim(&self) -> usize {
        2 * self.nodes() + self.links.len()
    }

    pub fn index(&self, var: Variable) -> usize {
        let n = self.nodes();
        match var {
            Variable::Cloud(i) => i,
            Variable::Link(l) => n + l,
            Variable::Local(i) => n + self.links.len() + i,
        }
    }

    pub fn variable(&self, index: usize) -> Option<Variable> {
        let n = self.nodes();
        let l = self.links.len();
        match index {
            i if i < n => Some(Variable::Cloud(i)),
            i if i < n + l => Some(Variable::Link(i - n)),
            i if i < 2 * n + l => Some(Variable::Local(i - n - l)),
            _ => None,
        }
    }

    pub fn link_index(&self, from: usize, to: usize) -> Option<usize> {
        self.links.iter().position(|&l| l == (from, to))
    }

    pub fn cloud_capacity(&self) -> &[f64] {
        &self.cloud_capacity
    }

    pub fn link_capacity(&self) -> &[f64] {
        &self.link_capacity
    }

    pub fn local_capacity(&self) -> &[f64] {
        &self.local_capacity
    }

    /// `X = {0 <= x <= capacities}`.
    pub fn feasible_set(&self) -> BoxSet {
        let upper: Vec<f64> = self
            .cloud_capacity
            .iter()
            .chain(&self.link_capacity)
            .chain(&self.local_capacity)
            .copied()
            .collect();
        BoxSet::new(Vector::zeros(upper.len()), Vector::from_vec(upper))
            .expect("capacities are validated")
    }

    /// Constant `N x d` Jacobian of the conservation constraints.
    pub fn constraint_jacobian(&self) -> Matrix {
        let n = self.nodes();
        let mut jac = Matrix::zeros(n, self.dim());
        for i in 0..n {
            jac[(i, self.index(Variable::Cloud(i)))] = -1.0;
            jac[(i, self.index(Variable::Local(i)))] = -1.0;
        }
        for (l, &(from, to)) in self.links.iter().enumerate() {
            let col = self.index(Variable::Link(l));
            jac[(from, col)] = -1.0;
            jac[(to, col)] = 1.0;
        }
        jac
    }

    /// `Σ_{k->n} y^{kn} - Σ_{n->k} y^{nk} - z^n - y^{nn}` for every node.
    pub fn net_inflow(&self, x: &Vector) -> Vector {
        let n = self.nodes();
        let mut out = Vector::zeros(n);
        for i in 0..n {
            out[i] -= x[self.index(Variable::Cloud(i))] + x[self.index(Variable::Local(i))];
        }
        for (l, &(from, to)) in self.links.iter().enumerate() {
            let y = x[self.index(Variable::Link(l))];
            out[from] -= y;
            out[to] += y;
        }
        out
    }
}

fn default_low_price() -> PriceParams {
    PriceParams {
        amplitude: 0.015,
        offset: 0.05,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceParams {
    pub amplitude: f64,
    pub offset: f64,
}

/// Per-node-class draw ranges; every range is `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub price: PriceParams,
    pub amplitude_range: [f64; 2],
    pub noise_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeClass {
    /// 1-based node ids; ids beyond the network size are ignored.
    pub nodes: Vec<usize>,
    #[serde(flatten)]
    pub params: ClassParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    RingChord,
    /// 0-based out-neighbor lists.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FogConfig {
    pub nodes: usize,
    pub topology: Topology,
    pub cloud_capacity: f64,
    pub link_capacity: f64,
    pub local_capacity: f64,
    /// `l^{nk} = link_cost_scale / ȳ^{nk}`.
    pub link_cost_scale: f64,
    /// `l^{nn} = local_cost_scale / ȳ^{nn}`.
    pub local_cost_scale: f64,
    /// Half-period of the daily sinusoid, in slots.
    pub half_period: f64,
    pub default_class: ClassParams,
    /// Earlier classes win when a node is listed twice.
    pub classes: Vec<NodeClass>,
    /// Floor arrivals at zero.
    pub clamp_arrivals: bool,
}

impl Default for FogConfig {
    fn default() -> Self {
        Self {
            nodes: 10,
            topology: Topology::RingChord,
            cloud_capacity: 100.0,
            link_capacity: 10.0,
            local_capacity: 50.0,
            link_cost_scale: 8.0,
            local_cost_scale: 8.0,
            half_period: 96.0,
            default_class: ClassParams {
                price: default_low_price(),
                amplitude_range: [40.0, 50.0],
                noise_range: [45.0, 55.0],
            },
            classes: vec![
                NodeClass {
                    nodes: vec![4, 5],
                    params: ClassParams {
                        price: PriceParams {
                            amplitude: 0.045,
                            offset: 0.15,
                        },
                        amplitude_range: [20.0, 25.0],
                        noise_range: [22.5, 27.5],
                    },
                },
                NodeClass {
                    nodes: vec![1, 2, 3],
                    params: ClassParams {
                        price: default_low_price(),
                        amplitude_range: [32.0, 40.0],
                        noise_range: [36.0, 44.0],
                    },
                },
            ],
            clamp_arrivals: true,
        }
    }
}

impl FogConfig {
    pub fn network(&self) -> Result<FogNetwork> {
        match &self.topology {
            Topology::RingChord => FogNetwork::ring_chord(
                self.nodes,
                self.cloud_capacity,
                self.link_capacity,
                self.local_capacity,
            ),
            Topology::Explicit(adj) => {
                if adj.len() != self.nodes {
                    return Err(Error::invalid(format!(
                        "adjacency lists {} nodes, config says {}",
                        adj.len(),
                        self.nodes
                    )));
                }
                let n_links = adj.iter().map(Vec::len).sum();
                FogNetwork::new(
                    adj.clone(),
                    vec![self.cloud_capacity; self.nodes],
                    vec![self.link_capacity; n_links],
                    vec![self.local_capacity; self.nodes],
                )
            }
        }
    }

    /// Class of 0-based node `i`.
    pub fn class_of(&self, i: usize) -> &ClassParams {
        self.classes
            .iter()
            .find(|c| c.nodes.contains(&(i + 1)))
            .map_or(&self.default_class, |c| &c.params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::invalid("fog config needs nodes >= 1"));
        }
        if self.half_period.is_nan() || self.half_period <= 0.0 {
            return Err(Error::invalid("half_period must be positive"));
        }
        if !(self.link_cost_scale >= 0.0 && self.local_cost_scale >= 0.0) {
            return Err(Error::invalid("cost scales must be nonnegative"));
        }
        for class in
            std::iter::once(&self.default_class).chain(self.classes.iter().map(|c| &c.params))
        {
            for [lo, hi] in [class.amplitude_range, class.noise_range] {
                if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                    return Err(Error::invalid(format!("bad range [{lo}, {hi}]")));
                }
            }
            if class.price.offset - class.price.amplitude.abs() <= 0.0 {
                return Err(Error::invalid(
                    "cloud price must stay positive over the period",
                ));
            }
        }
        if self
            .classes
            .iter()
            .flat_map(|c| &c.nodes)
            .any(|&id| id == 0)
        {
            return Err(Error::invalid("class node ids are 1-based"));
        }
        self.network().map(|_| ())
    }
}

/// A fully materialized instance: network, cost coefficients and the arrival
/// path for `t = 1..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogInstance {
    pub network: FogNetwork,
    pub half_period: f64,
    pub prices: Vec<PriceParams>,
    pub link_cost: Vec<f64>,
    pub local_cost: Vec<f64>,
    /// `q^n`.
    pub amplitudes: Vec<f64>,
    /// `arrivals[t-1][n] = b_t^n`.
    pub arrivals: Vec<Vec<f64>>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Builds the instance for one Monte-Carlo seed: `q^n` drawn once per node,
/// then `ν_t^n` per slot, all from the instance stream of `seed`.
pub fn generate_instance(config: &FogConfig, horizon: usize, seed: u64) -> Result<FogInstance> {
    config.validate()?;
    let network = config.network()?;
    let n = network.nodes();
    let mut rng = stream_rng(seed, INSTANCE_STREAM);
    let amplitudes: Vec<f64> = (0..n)
        .map(|i| uniform(&mut rng, config.class_of(i).amplitude_range))
        .collect();
    let arrivals = (1..=horizon)
        .map(|t| {
            let phase = (PI * t as f64 / config.half_period).sin();
            (0..n)
                .map(|i| {
                    let b =
                        amplitudes[i] * phase + uniform(&mut rng, config.class_of(i).noise_range);
                    if config.clamp_arrivals {
                        b.max(0.0)
                    } else {
                        b
                    }
                })
                .collect()
        })
        .collect();
    Ok(FogInstance {
        prices: (0..n).map(|i| config.class_of(i).price).collect(),
        link_cost: network
            .link_capacity()
            .iter()
            .map(|c| config.link_cost_scale / c)
            .collect(),
        local_cost: network
            .local_capacity()
            .iter()
            .map(|c| config.local_cost_scale / c)
            .collect(),
        half_period: config.half_period,
        amplitudes,
        arrivals,
        network,
    })
}

impl FogInstance {
    pub fn horizon(&self) -> usize {
        self.arrivals.len()
    }

    pub fn dim(&self) -> usize {
        self.network.dim()
    }

    pub fn feasible_set(&self) -> BoxSet {
        self.network.feasible_set()
    }

    /// `p_t^n`.
    pub fn price(&self, t: usize, node: usize) -> f64 {
        let p = self.prices[node];
        p.amplitude * (PI * t as f64 / self.half_period).sin() + p.offset
    }

    /// `b_t` as a vector.
    pub fn arrivals_at(&self, t: usize) -> Result<Vector> {
        if t == 0 || t > self.horizon() {
            return Err(Error::invalid(format!(
                "slot {t} outside 1..={}",
                self.horizon()
            )));
        }
        Ok(Vector::from_column_slice(&self.arrivals[t - 1]))
    }

    /// Checks the instance after deserialization.
    pub fn validate(&self) -> Result<()> {
        let n = self.network.nodes();
        check_dim(n, self.prices.len())?;
        check_dim(n, self.local_cost.len())?;
        check_dim(n, self.amplitudes.len())?;
        check_dim(self.network.links().len(), self.link_cost.len())?;
        for row in &self.arrivals {
            check_dim(n, row.len())?;
        }
        Ok(())
    }

    fn check_point(&self, x: &Vector) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        if cfg!(debug_assertions) {
            self.feasible_set().snap_inside(x.clone())?;
        }
        Ok(())
    }

    pub fn loss(&self, t: usize, x: &Vector) -> Result<f64> {
        self.check_point(x)?;
        let net = &self.network;
        let mut total = 0.0;
        for i in 0..net.nodes() {
            let z = x[net.index(Variable::Cloud(i))];
            let y = x[net.index(Variable::Local(i))];
            total += (self.price(t, i) * z).exp() + self.local_cost[i] * y * y;
        }
        for l in 0..net.links().len() {
            total += self.link_cost[l] * x[net.index(Variable::Link(l))];
        }
        Ok(total)
    }

    pub fn loss_gradient(&self, t: usize, x: &Vector) -> Result<Vector> {
        self.check_point(x)?;
        let net = &self.network;
        let mut g = Vector::zeros(self.dim());
        for i in 0..net.nodes() {
            let zi = net.index(Variable::Cloud(i));
            let yi = net.index(Variable::Local(i));
            let p = self.price(t, i);
            g[zi] = p * (p * x[zi]).exp();
            g[yi] = 2.0 * self.local_cost[i] * x[yi];
        }
        for l in 0..net.links().len() {
            g[net.index(Variable::Link(l))] = self.link_cost[l];
        }
        Ok(g)
    }

    pub fn constraints(&self, t: usize, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(self.arrivals_at(t)? + self.network.net_inflow(x))
    }

    /// Upper bounds on `|f_t|` and on the gradient norms of `f_t` and of each
    /// constraint row over `X`. Every term of the cost is nondecreasing in
    /// its coordinate, so both maxima sit at the upper corner of the box.
    pub fn bounds(&self) -> LossBounds {
        let net = &self.network;
        let mut value = 0.0;
        let mut grad_sq = 0.0;
        for i in 0..net.nodes() {
            let p = self.prices[i].amplitude.abs() + self.prices[i].offset;
            let z = net.cloud_capacity()[i];
            let y = net.local_capacity()[i];
            value += (p * z).exp() + self.local_cost[i] * y * y;
            grad_sq += (p * (p * z).exp()).powi(2) + (2.0 * self.local_cost[i] * y).powi(2);
        }
        for l in 0..net.links().len() {
            value += self.link_cost[l] * net.link_capacity()[l];
            grad_sq += self.link_cost[l].powi(2);
        }
        let row_norm = (0..net.nodes())
            .map(|i| {
                (2 + net
                    .links()
                    .iter()
                    .filter(|(a, b)| *a == i || *b == i)
                    .count()) as f64
            })
            .fold(0.0, f64::max)
            .sqrt();
        LossBounds {
            value: Some(value),
            lipschitz: Some(grad_sq.sqrt().max(row_norm)),
        }
    }

    /// Cloud-only: `z^n = min(b^n + backlog^n, z̄^n)`, nothing else.
    pub fn cloud_only_step(&self, t: usize, backlog: &Vector) -> Result<(Vector, Vector)> {
        let net = &self.network;
        self.heuristic_step(t, backlog, |i| {
            (net.index(Variable::Cloud(i)), net.cloud_capacity()[i])
        })
    }

    /// Fog-only: `y^{nn} = min(b^n + backlog^n, ȳ^{nn})`, nothing else.
    pub fn fog_only_step(&self, t: usize, backlog: &Vector) -> Result<(Vector, Vector)> {
        let net = &self.network;
        self.heuristic_step(t, backlog, |i| {
            (net.index(Variable::Local(i)), net.local_capacity()[i])
        })
    }

    fn heuristic_step(
        &self,
        t: usize,
        backlog: &Vector,
        slot_of: impl Fn(usize) -> (usize, f64),
    ) -> Result<(Vector, Vector)> {
        let n = self.network.nodes();
        check_dim(n, backlog.len())?;
        let b = self.arrivals_at(t)?;
        let mut x = Vector::zeros(self.dim());
        let mut next = Vector::zeros(n);
        for i in 0..n {
            let demand = (b[i] + backlog[i]).max(0.0);
            let (idx, cap) = slot_of(i);
            x[idx] = demand.min(cap);
            next[i] = backlog[i] + b[i] - x[idx];
        }
        Ok((x, next))
    }

    /// The BanSaP update written node by node.
    ///
    /// Each node clamps its own cloud, local and outgoing-link variables
    /// using its multiplier and its out-neighbors' multipliers, then updates
    /// its multiplier from the new flows touching it. `grad` is the slot's
    /// loss-gradient estimate at `state.x_hat`.
    pub fn decentralized_step(
        &self,
        state: &PrimalDualState,
        grad: &Vector,
        hp: &HyperParams,
    ) -> Result<(Vec<NodeUpdate>, PrimalDualState)> {
        let net = &self.network;
        let n = net.nodes();
        let t = state.slot;
        check_dim(self.dim(), state.x_hat.len())?;
        check_dim(self.dim(), grad.len())?;
        check_dim(n, state.lambda.len())?;
        let shrunk = self.feasible_set().shrink(hp.gamma)?;
        let (lo, hi) = (shrunk.lower(), shrunk.upper());
        let lam = &state.lambda;
        let x = &state.x_hat;
        let clamp = |i: usize, v: f64| v.max(lo[i]).min(hi[i]);

        let mut x_next = x.clone();
        for i in 0..n {
            let zi = net.index(Variable::Cloud(i));
            x_next[zi] = clamp(zi, x[zi] - hp.alpha * (grad[zi] - lam[i]));
            let yi = net.index(Variable::Local(i));
            x_next[yi] = clamp(yi, x[yi] - hp.alpha * (grad[yi] - lam[i]));
        }
        for (l, &(from, to)) in net.links().iter().enumerate() {
            let li = net.index(Variable::Link(l));
            x_next[li] = clamp(li, x[li] - hp.alpha * (grad[li] - lam[from] + lam[to]));
        }

        let b = self.arrivals_at(t)?;
        let inflow = net.net_inflow(&x_next);
        let lambda_next = Vector::from_iterator(
            n,
            (0..n).map(|i| (lam[i] + hp.mu * (b[i] + inflow[i])).max(0.0)),
        );

        let updates = (0..n)
            .map(|i| NodeUpdate {
                node: i,
                cloud: x_next[net.index(Variable::Cloud(i))],
                local: x_next[net.index(Variable::Local(i))],
                outgoing: net
                    .out_links(i)
                    .iter()
                    .map(|&k| {
                        let l = net.link_index(i, k).expect("link listed in out_links");
                        (k, x_next[net.index(Variable::Link(l))])
                    })
                    .collect(),
                lambda: lambda_next[i],
            })
            .collect();
        Ok((
            updates,
            PrimalDualState {
                x_hat: x_next,
                lambda: lambda_next,
                slot: t + 1,
            },
        ))
    }
}

/// One node's share of a decentralized step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeUpdate {
    pub node: usize,
    pub cloud: f64,
    pub local: f64,
    /// `(neighbor, flow)` per outgoing link.
    pub outgoing: Vec<(usize, f64)>,
    pub lambda: f64,
}

impl LossOracle for FogInstance {
    fn dim(&self) -> usize {
        self.network.dim()
    }

    fn query(&self, t: usize, x: &Vector) -> Result<f64> {
        self.loss(t, x)
    }

    fn bounds(&self) -> LossBounds {
        FogInstance::bounds(self)
    }
}

impl ExactLoss for FogInstance {
    fn dim(&self) -> usize {
        self.network.dim()
    }

    fn value(&self, t: usize, x: &Vector) -> Result<f64> {
        self.loss(t, x)
    }

    fn gradient(&self, t: usize, x: &Vector) -> Result<Vector> {
        self.loss_gradient(t, x)
    }
}

impl GradientOracle for FogInstance {
    fn gradient(&self, t: usize, x: &Vector) -> Result<Vector> {
        self.loss_gradient(t, x)
    }
}

impl ConstraintOracle for FogInstance {
    fn count(&self) -> usize {
        self.network.nodes()
    }

    fn value(&self, t: usize, x: &Vector) -> Result<Vector> {
        self.constraints(t, x)
    }

    fn jacobian(&self, _t: usize, x: &Vector) -> Result<Matrix> {
        check_dim(self.dim(), x.len())?;
        Ok(self.network.constraint_jacobian())
    }
}

impl HeuristicPolicy for FogInstance {
    fn action(&self, kind: Heuristic, t: usize, backlog: &Vector) -> Result<Vector> {
        let (x, _) = match kind {
            Heuristic::CloudOnly => self.cloud_only_step(t, backlog)?,
            Heuristic::FogOnly => self.fog_only_step(t, backlog)?,
        };
        Ok(x)
    }
}

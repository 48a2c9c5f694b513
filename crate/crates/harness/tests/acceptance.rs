//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p bansap-harness --test acceptance`; pass criterion
//! numbers as arguments to run a subset. The process fails when a criterion
//! fails that is not listed in `KNOWN_RED`, or when a listed one passes.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use bansap::estimators::{
    one_point_grad, two_point_grad, EstimatorKind, GradientEstimate, LossBounds,
};
use bansap::fog::FogInstance;
use bansap::geometry::{sample_direction, stream_rng};
use bansap::metrics::{per_slot_optimum, ExactLoss, OptimumConfig};
use bansap::solver::{
    bansap_step, mosp_step, run_with, ExactGradient, GradientSource, PrimalDualState,
};
use bansap::{
    Algorithm, BoxSet, ConstraintOracle, HyperParams, LossOracle, Matrix, SamplingScheme, Vector,
};
use bansap_harness::config::Instance;
use bansap_harness::{run_experiment, ExperimentConfig, ResultTable};
use rand::{Rng, RngCore};
use rayon::prelude::*;

/// Criteria that fail as stated; the blocking analysis is in the decisions
/// ledger.
const KNOWN_RED: &[u32] = &[5];

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_path(name)).expect("checked-in config parses")
}

// 1. Unbiasedness on a linear loss.

struct Linear(Vector);

impl LossOracle for Linear {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn query(&self, _t: usize, x: &Vector) -> bansap::Result<f64> {
        Ok(self.0.dot(x))
    }
}

fn empirical_mean(
    a: &Vector,
    draws: usize,
    estimate: impl Fn(&Linear, &BoxSet, &Vector, &bansap::Direction) -> bansap::Result<GradientEstimate>
        + Sync,
    stream: u64,
) -> Vector {
    let oracle = Linear(a.clone());
    let set = BoxSet::cube(a.len(), -1.0, 1.0).unwrap();
    let x_hat = set.center();
    let chunks = 16;
    let sums: Vec<Vector> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(c as u64, stream);
            let mut acc = Vector::zeros(a.len());
            for _ in 0..draws / chunks {
                let u = sample_direction(SamplingScheme::UniformSphere, a.len(), &mut rng).unwrap();
                acc += estimate(&oracle, &set, &x_hat, &u).unwrap().g;
            }
            acc
        })
        .collect();
    sums.into_iter().sum::<Vector>() / (draws - draws % chunks) as f64
}

fn criterion_1() -> Verdict {
    // E[d (aᵀu) u] = a for u uniform on the sphere.
    let a = Vector::from_vec(vec![1.0, -2.0, 3.0, 0.5, -1.5]);
    let delta = 0.5;
    let two = empirical_mean(
        &a,
        100_000,
        |o, s, x, u| two_point_grad(o, s, 1, x, delta, u),
        11,
    );
    let one = empirical_mean(
        &a,
        1_000_000,
        |o, s, x, u| one_point_grad(o, s, 1, x, delta, u),
        12,
    );
    let err_two = (&two - &a).norm() / a.norm();
    let err_one = (&one - &a).norm() / a.norm();
    verdict(
        err_two < 0.02 && err_one < 0.05,
        format!("two-point rel. error {err_two:.4} (< 0.02), one-point {err_one:.4} (< 0.05)"),
    )
}

// 2. Norm bounds on bounded test functions over [-1, 1]^d.

#[derive(Clone)]
enum TestFn {
    Affine(Vector, f64),
    Quadratic(Vector),
    Sines(Vector),
}

impl TestFn {
    fn random<R: Rng>(d: usize, rng: &mut R) -> Self {
        let v =
            |rng: &mut R, s: f64| Vector::from_iterator(d, (0..d).map(|_| rng.random_range(-s..s)));
        match rng.random_range(0..3) {
            0 => TestFn::Affine(v(rng, 5.0), rng.random_range(-3.0..3.0)),
            1 => TestFn::Quadratic(v(rng, 1.0)),
            _ => TestFn::Sines(v(rng, 4.0)),
        }
    }

    /// Exact sup of `|f|` and of `||∇f||` over the box.
    fn bounds(&self) -> (f64, f64) {
        match self {
            TestFn::Affine(a, c) => (a.lp_norm(1) + c.abs(), a.norm()),
            TestFn::Quadratic(b) => {
                let far: f64 = b.iter().map(|bi| (1.0 + bi.abs()).powi(2)).sum();
                (0.5 * far, far.sqrt())
            }
            TestFn::Sines(w) => (w.len() as f64, w.norm()),
        }
    }
}

impl LossOracle for TestFn {
    fn dim(&self) -> usize {
        match self {
            TestFn::Affine(a, _) | TestFn::Quadratic(a) | TestFn::Sines(a) => a.len(),
        }
    }

    fn query(&self, _t: usize, x: &Vector) -> bansap::Result<f64> {
        Ok(match self {
            TestFn::Affine(a, c) => a.dot(x) + c,
            TestFn::Quadratic(b) => 0.5 * (x - b).norm_squared(),
            TestFn::Sines(w) => x.iter().zip(w.iter()).map(|(xi, wi)| (wi * xi).sin()).sum(),
        })
    }

    fn bounds(&self) -> LossBounds {
        let (f, g) = TestFn::bounds(self);
        LossBounds {
            value: Some(f),
            lipschitz: Some(g),
        }
    }
}

fn criterion_2() -> Verdict {
    let total = 100_000;
    let chunks = 20;
    let counts: Vec<(usize, usize, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(c as u64, 21);
            let mut violations = 0;
            let mut checked = 0;
            let mut worst = 0.0f64;
            for k in 0..total / chunks {
                let d = rng.random_range(1..=8);
                let f = TestFn::random(d, &mut rng);
                let (big_f, big_g) = f.bounds();
                let set = BoxSet::cube(d, -1.0, 1.0).unwrap();
                let gamma = rng.random_range(0.01..0.99);
                let delta = gamma * rng.random_range(0.01..=1.0);
                let inner = set.shrink(gamma).unwrap();
                let x_hat = Vector::from_iterator(
                    d,
                    (0..d).map(|i| rng.random_range(inner.lower()[i]..=inner.upper()[i])),
                );
                let scheme = SamplingScheme::ALL[k % 3];
                let u = sample_direction(scheme, d, &mut rng).unwrap();
                let dd = d as f64;
                let (norm, limit) = if k % 2 == 0 {
                    let g = one_point_grad(&f, &set, 1, &x_hat, delta, &u).unwrap().g;
                    (g.norm(), dd * big_f / delta)
                } else {
                    let g = two_point_grad(&f, &set, 1, &x_hat, delta, &u).unwrap().g;
                    (g.norm(), dd * big_g)
                };
                checked += 1;
                worst = worst.max(norm / limit);
                if norm > limit + 1e-9 {
                    violations += 1;
                }
            }
            (violations, checked, worst)
        })
        .collect();
    let violations: usize = counts.iter().map(|c| c.0).sum();
    let checked: usize = counts.iter().map(|c| c.1).sum();
    let worst = counts.iter().map(|c| c.2).fold(0.0, f64::max);
    verdict(
        violations == 0 && checked == total,
        format!("{violations} violations in {checked} estimates; largest norm/bound {worst:.4}"),
    )
}

// 3. Feasibility of every played action.

fn criterion_3() -> Verdict {
    let mut cfg = load("desk.toml");
    cfg.runs = 20;
    let resolved = cfg.validate().unwrap();
    let set = cfg.problem.feasible_set().unwrap();
    let bandit: Vec<(Algorithm, HyperParams)> = resolved
        .into_iter()
        .filter(|(a, _)| matches!(a, Algorithm::BanSaP { .. }))
        .collect();
    let seeds: Vec<u64> = cfg.seeds().collect();
    let jobs: Vec<(usize, u64)> = (0..bandit.len())
        .flat_map(|a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let results: Vec<(usize, usize)> = jobs
        .par_iter()
        .map(|&(a, seed)| {
            let (algo, hp) = &bandit[a];
            let inst = cfg.problem.instance(cfg.horizon, seed).unwrap();
            let mut outside = 0;
            let mut actions = 0;
            run_with(&inst.problem(&set), *algo, hp, seed, |rec| {
                actions += rec.actions.len();
                outside += rec.actions.iter().filter(|x| !set.contains(x)).count();
                Ok(())
            })
            .unwrap();
            (outside, actions)
        })
        .collect();
    let outside: usize = results.iter().map(|r| r.0).sum();
    let actions: usize = results.iter().map(|r| r.1).sum();
    let names: Vec<String> = bandit.iter().map(|(a, _)| a.label()).collect();
    verdict(
        outside == 0,
        format!(
            "{outside} of {actions} actions outside X ({} seeds, {})",
            seeds.len(),
            names.join(", ")
        ),
    )
}

// 4 and 5. Scheduled two-point runs.

fn scheduled(horizon: usize, runs: usize) -> ResultTable {
    let mut cfg = load("schedule.toml");
    cfg.horizon = horizon;
    cfg.runs = runs;
    let table = run_experiment(&cfg).unwrap();
    table.check_failures().unwrap();
    table
}

fn criterion_4() -> Verdict {
    let short = scheduled(2000, 1);
    let long = scheduled(4000, 1);
    let a = short.runs[0].max_dual_norm();
    let b = long.runs[0].max_dual_norm();
    let growth = b / a - 1.0;
    verdict(
        growth < 0.10,
        format!(
            "max ||lambda||: {a:.3} at T=2000, {b:.3} at T=4000, growth {:+.1}% (< 10%)",
            100.0 * growth
        ),
    )
}

fn criterion_5() -> Verdict {
    let horizons = [1000usize, 2000, 4000];
    let ratios: Vec<f64> = horizons
        .iter()
        .map(|&t| {
            let table = scheduled(t, 20);
            table.runs.iter().map(|r| r.fit()).sum::<f64>() / table.runs.len() as f64 / t as f64
        })
        .collect();
    let strictly = ratios.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = horizons
        .iter()
        .zip(&ratios)
        .map(|(t, r)| format!("T={t}: {r:.3e}"))
        .collect();
    verdict(strictly, format!("mean Fit_T/T {}", shown.join(", ")))
}

// 6 and 7. Desk-scale comparison, shared.

struct Stat {
    cost: f64,
    cost_std: f64,
    fit: f64,
}

fn desk() -> &'static (ResultTable, Duration) {
    static DESK: OnceLock<(ResultTable, Duration)> = OnceLock::new();
    DESK.get_or_init(|| {
        let started = Instant::now();
        let table = run_experiment(&load("desk.toml")).unwrap();
        table.check_failures().unwrap();
        (table, started.elapsed())
    })
}

fn stat(table: &ResultTable, label: &str) -> Stat {
    let costs: Vec<f64> = table
        .runs_of(label)
        .map(|r| r.time_average_cost())
        .collect();
    let fits: Vec<f64> = table.runs_of(label).map(|r| r.fit()).collect();
    assert_eq!(costs.len(), 100, "{label}");
    let (cost, cost_std) = bansap_harness::output::mean_std(&costs);
    Stat {
        cost,
        cost_std,
        fit: fits.iter().sum::<f64>() / fits.len() as f64,
    }
}

fn criterion_6() -> Verdict {
    let (table, elapsed) = desk();
    let cloud = stat(table, "cloud_only");
    let fog = stat(table, "fog_only");
    let m1 = stat(table, "bansap_m1_uniform");
    let m2 = stat(table, "bansap_m2_uniform");
    let mosp = stat(table, "mosp");
    let cost_order = cloud.cost > fog.cost
        && fog.cost > m1.cost
        && m1.cost > m2.cost
        && m2.cost >= 0.95 * mosp.cost;
    let min_fit = table
        .algorithms()
        .iter()
        .map(|a| stat(table, a).fit)
        .fold(f64::INFINITY, f64::min);
    let cloud_fit_min = cloud.fit <= min_fit;
    let variance = m1.cost_std > m2.cost_std;
    let fast = *elapsed < Duration::from_secs(20 * 60);
    verdict(
        cost_order && cloud_fit_min && variance && fast,
        format!(
            "cost cloud {:.1} > fog {:.1} > M1 {:.1} > M2 {:.1} >= 0.95 MOSP {:.1}: {cost_order}; \
             fit cloud {:.2} <= min {:.2}: {cloud_fit_min}; std M1 {:.2} > M2 {:.2}: {variance}; {:.1}s",
            cloud.cost,
            fog.cost,
            m1.cost,
            m2.cost,
            0.95 * mosp.cost,
            cloud.fit,
            min_fit,
            m1.cost_std,
            m2.cost_std,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Verdict {
    let (table, elapsed) = desk();
    let m1u = stat(table, "bansap_m1_uniform").cost;
    let m1c = stat(table, "bansap_m1_coordinate").cost;
    let m2u = stat(table, "bansap_m2_uniform").cost;
    let m2c = stat(table, "bansap_m2_coordinate").cost;
    let fast = *elapsed < Duration::from_secs(20 * 60);
    verdict(
        m1c < m1u && m2u <= m2c && fast,
        format!("M=1 coordinate {m1c:.2} < uniform {m1u:.2}; M=2 uniform {m2u:.2} <= coordinate {m2c:.2}"),
    )
}

// 8. Per-slot optimum against exhaustive search on a three-variable node.

/// One node that offloads `z` to the cloud, sends `w` down a link leaving the
/// network and processes `y` itself:
/// `f_t = exp(p_t z) + l_w w + l_y y²`, `g_t = b_t - z - w - y`.
struct Toy {
    prices: Vec<f64>,
    arrivals: Vec<f64>,
    link_cost: f64,
    local_cost: f64,
}

const TOY_CAPS: [f64; 3] = [2.0, 1.0, 2.0];

impl ExactLoss for Toy {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, t: usize, x: &Vector) -> bansap::Result<f64> {
        Ok((self.prices[t - 1] * x[0]).exp()
            + self.link_cost * x[1]
            + self.local_cost * x[2] * x[2])
    }

    fn gradient(&self, t: usize, x: &Vector) -> bansap::Result<Vector> {
        let p = self.prices[t - 1];
        Ok(Vector::from_vec(vec![
            p * (p * x[0]).exp(),
            self.link_cost,
            2.0 * self.local_cost * x[2],
        ]))
    }
}

impl ConstraintOracle for Toy {
    fn count(&self) -> usize {
        1
    }

    fn value(&self, t: usize, x: &Vector) -> bansap::Result<Vector> {
        Ok(Vector::from_element(1, self.arrivals[t - 1] - x.sum()))
    }

    fn jacobian(&self, _t: usize, _x: &Vector) -> bansap::Result<Matrix> {
        Ok(Matrix::from_element(1, 3, -1.0))
    }
}

/// Brute force over the pitch-0.01 grid; integer arithmetic keeps the
/// feasibility test exact.
fn grid_minimum(toy: &Toy, t: usize) -> (f64, [f64; 3]) {
    let steps = TOY_CAPS.map(|c| (c * 100.0).round() as i64);
    let need = (toy.arrivals[t - 1] * 100.0).round() as i64;
    let p = toy.prices[t - 1];
    let mut best = (f64::INFINITY, [0.0; 3]);
    for iz in 0..=steps[0] {
        let z = iz as f64 / 100.0;
        let ez = (p * z).exp();
        for iw in 0..=steps[1] {
            let w = iw as f64 / 100.0;
            let lo = (need - iz - iw).max(0);
            for iy in lo..=steps[2] {
                let y = iy as f64 / 100.0;
                let f = ez + toy.link_cost * w + toy.local_cost * y * y;
                if f < best.0 {
                    best = (f, [z, w, y]);
                }
            }
        }
    }
    best
}

fn criterion_8() -> Verdict {
    let started = Instant::now();
    let mut rng = stream_rng(8, 0);
    let slots = 50;
    let toy = Toy {
        prices: (0..slots).map(|_| rng.random_range(0.3..1.5)).collect(),
        // on the grid, and sometimes above what the box can serve cheaply
        arrivals: (0..slots)
            .map(|_| rng.random_range(0..=450) as f64 / 100.0)
            .collect(),
        link_cost: 0.8,
        local_cost: 1.5,
    };
    let set = BoxSet::new(Vector::zeros(3), Vector::from_row_slice(&TOY_CAPS)).unwrap();
    let cfg = OptimumConfig::default();
    let gaps: Vec<(f64, f64)> = (1..=slots)
        .into_par_iter()
        .map(|t| {
            let opt = per_slot_optimum(&toy, &toy, &set, t, &cfg, None).unwrap();
            let (f_grid, x_grid) = grid_minimum(&toy, t);
            let dx = (opt.x.clone() - Vector::from_row_slice(&x_grid)).amax();
            ((opt.value - f_grid).abs(), dx)
        })
        .collect();
    let value_gap = gaps.iter().map(|g| g.0).fold(0.0, f64::max);
    let point_gap = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    let elapsed = started.elapsed();
    verdict(
        value_gap <= 1e-2 && point_gap <= 1e-2 && elapsed < Duration::from_secs(60),
        format!(
            "max |f_solver - f_grid| {value_gap:.2e}, max ||x_solver - x_grid||_inf {point_gap:.2e} over {slots} slots, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

// 9. Differential checks against the full-information and per-node steps.

struct Fixed(Vector);

impl GradientSource for Fixed {
    fn estimate(
        &mut self,
        _t: usize,
        x: &Vector,
        _d: f64,
        _r: &mut dyn RngCore,
    ) -> bansap::Result<GradientEstimate> {
        Ok(GradientEstimate {
            g: self.0.clone(),
            points: vec![x.clone()],
            losses: vec![0.0],
            kind: EstimatorKind::Exact,
        })
    }
}

fn random_state<R: Rng>(
    inst: &FogInstance,
    gamma: f64,
    rng: &mut R,
) -> (PrimalDualState, HyperParams) {
    let inner = inst.feasible_set().shrink(gamma).unwrap();
    let d = inner.dim();
    let n = inst.network.nodes();
    let state = PrimalDualState {
        x_hat: Vector::from_iterator(
            d,
            (0..d).map(|i| rng.random_range(inner.lower()[i]..=inner.upper()[i])),
        ),
        lambda: Vector::from_iterator(n, (0..n).map(|_| rng.random_range(0.0..50.0))),
        slot: rng.random_range(1..=inst.horizon()),
    };
    let hp = HyperParams {
        alpha: rng.random_range(1e-4..0.1),
        mu: rng.random_range(1e-4..0.1),
        delta: 0.0,
        gamma,
        m: 1,
        scheme: SamplingScheme::UniformSphere,
        horizon: 1,
        rho: None,
        start: Default::default(),
    };
    (state, hp)
}

fn criterion_9() -> Verdict {
    let cfg = load("desk.toml");
    let Instance::Fog(inst) = cfg.problem.instance(500, 0).unwrap() else {
        unreachable!("desk config is a fog problem")
    };
    let set = inst.feasible_set();
    let mut rng = stream_rng(9, 0);
    let (mut vs_mosp, mut vs_nodes) = (0.0f64, 0.0f64);
    for k in 0..1000 {
        let gamma = if k % 2 == 0 {
            0.0
        } else {
            rng.random_range(0.0..0.5)
        };
        let (state, hp) = random_state(&inst, gamma, &mut rng);
        let mut exact = ExactGradient {
            gradient: &inst,
            loss: &inst,
        };
        let (a, _) = bansap_step(&state, &mut exact, &inst, &set, &hp, &mut rng).unwrap();
        let (b, _) = mosp_step(&state, &inst, &inst, &inst, &set, &hp).unwrap();
        vs_mosp = vs_mosp
            .max((&a.x_hat - &b.x_hat).amax())
            .max((&a.lambda - &b.lambda).amax());

        let grad = Vector::from_iterator(
            set.dim(),
            (0..set.dim()).map(|_| rng.random_range(-20.0..20.0)),
        );
        let (global, _) =
            bansap_step(&state, &mut Fixed(grad.clone()), &inst, &set, &hp, &mut rng).unwrap();
        let (_, local) = inst.decentralized_step(&state, &grad, &hp).unwrap();
        vs_nodes = vs_nodes
            .max((&global.x_hat - &local.x_hat).amax())
            .max((&global.lambda - &local.lambda).amax());
    }
    verdict(
        vs_mosp <= 1e-12 && vs_nodes <= 1e-12,
        format!(
            "1000 states: exact-gradient vs MOSP {vs_mosp:.1e}, global vs per-node {vs_nodes:.1e}"
        ),
    )
}

// 10. Byte-identical CSVs from two CLI invocations.

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config_path("desk.toml"))
        .unwrap()
        .replace("horizon = 2000", "horizon = 300")
        .replace("runs = 100", "runs = 5");
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, text).unwrap();
    let invoke = |out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_bansap"))
            .arg("run")
            .arg(&cfg)
            .env("BANSAP_OUTPUT_DIR", dir.path().join(out))
            .env("RUST_LOG", "error")
            .status()
            .unwrap();
        assert!(status.success());
    };
    invoke("first");
    invoke("second");
    let mut same = true;
    let mut sizes = Vec::new();
    for name in ["raw.csv", "summary.csv"] {
        let a = std::fs::read(dir.path().join("first").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("second").join(name)).unwrap();
        same &= !a.is_empty() && a == b;
        sizes.push(format!("{name} {} bytes", a.len()));
    }
    verdict(same, format!("identical: {same} ({})", sizes.join(", ")))
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [Criterion; 10] = [
        (1, "estimator unbiasedness", criterion_1),
        (2, "estimator norm bounds", criterion_2),
        (3, "feasibility of played actions", criterion_3),
        (4, "dual boundedness", criterion_4),
        (5, "fit sub-linearity", criterion_5),
        (6, "desk-scale ordering", criterion_6),
        (7, "sampling-scheme crossover", criterion_7),
        (8, "per-slot optimum vs grid", criterion_8),
        (9, "differential full-information", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let known = KNOWN_RED.contains(&id);
        let tag = match (v.passed, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (listed as known red)",
        };
        println!(
            "criterion {id:>2} {name}: {tag} [{:.1}s] {}",
            started.elapsed().as_secs_f64(),
            v.detail
        );
        if v.passed == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}

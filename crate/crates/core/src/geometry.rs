//! Box feasible sets, Euclidean projection, shrinkage and random directions.
//!
//! The shrunken set used by the bandit updates is contracted toward the box
//! *center*, not toward the origin. For a box `[l, u]` with center `c` and
//! half-widths `h`, `shrink(gamma)` returns `[c - (1-gamma) h, c + (1-gamma) h]`.
//! Any point of that set stays inside the original box after a perturbation of
//! length `delta <= gamma * r`, where `r = min_i h_i` is the radius of the
//! largest ball inscribed around `c`. For an origin-centered symmetric box the
//! result coincides with the scaled set `(1-gamma) X`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// Relative slack accepted when snapping a perturbed point back onto the box.
/// Only floating-point rounding is tolerated, never a genuine exit.
const ROUNDING_SLACK: f64 = 1e-9;

/// Random stream `stream` of run `seed`.
///
/// Every run owns its streams; nothing in the library keeps hidden generator
/// state. Stream 0 is conventionally used for instance generation and stream 1
/// for the algorithm's exploration directions.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BoxSet {
    lower: Vector,
    upper: Vector,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for BoxSet {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        BoxSet::new(DVector::from_vec(raw.lower), DVector::from_vec(raw.upper))
    }
}

impl From<BoxSet> for RawBox {
    fn from(b: BoxSet) -> Self {
        RawBox {
            lower: b.lower.iter().copied().collect(),
            upper: b.upper.iter().copied().collect(),
        }
    }
}

impl BoxSet {
    /// Builds `{x : lower <= x <= upper}`. The box must have a nonempty
    /// interior in every coordinate.
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::invalid("box must have dimension >= 1"));
        }
        for (i, (lo, hi)) in lower.iter().zip(upper.iter()).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!(
                    "coordinate {i} has a non-finite bound"
                )));
            }
            if lo >= hi {
                return Err(Error::invalid(format!(
                    "coordinate {i}: lower {lo} must be strictly below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(DVector::from_element(d, lo), DVector::from_element(d, hi))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    pub fn center(&self) -> Vector {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn half_widths(&self) -> Vector {
        (&self.upper - &self.lower) * 0.5
    }

    /// Radius `r` of the largest ball around the center contained in the box.
    pub fn inner_radius(&self) -> f64 {
        self.half_widths().min()
    }

    /// Radius `R` of the smallest ball around the center containing the box.
    pub fn outer_radius(&self) -> f64 {
        self.half_widths().norm()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Euclidean projection; for a box this is coordinate-wise clamping.
    pub fn project(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.dim(), y.len())?;
        Ok(self.clamp(y))
    }

    pub(crate) fn clamp(&self, y: &Vector) -> Vector {
        DVector::from_iterator(
            y.len(),
            y.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(v, (lo, hi))| v.max(*lo).min(*hi)),
        )
    }

    /// Contracts the box by `1 - gamma` toward its center.
    pub fn shrink(&self, gamma: f64) -> Result<BoxSet> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!(
                "shrink factor gamma={gamma} outside [0, 1)"
            )));
        }
        if gamma == 0.0 {
            return Ok(self.clone());
        }
        let c = self.center();
        let h = self.half_widths() * (1.0 - gamma);
        BoxSet::new(&c - &h, &c + &h)
    }

    /// Accepts a point that lies in the box up to floating-point rounding and
    /// snaps it exactly inside. Anything further out is a contract violation.
    pub fn snap_inside(&self, x: Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        for (i, (v, (lo, hi))) in x
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .enumerate()
        {
            let slack = ROUNDING_SLACK * (1.0 + lo.abs().max(hi.abs()));
            if !v.is_finite() || *v < lo - slack || *v > hi + slack {
                return Err(Error::ContractViolation(format!(
                    "point leaves the feasible box at coordinate {i}: {v} not in [{lo}, {hi}]"
                )));
            }
        }
        Ok(self.clamp(&x))
    }
}

/// A unit-norm direction in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vector);

impl Direction {
    /// Normalizes `v`; fails on a zero or non-finite vector.
    pub fn new(v: Vector) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::invalid("direction must be a finite nonzero vector"));
        }
        Ok(Self(v / n))
    }

    /// Signed canonical basis vector `sign * e_index`.
    pub fn basis(d: usize, index: usize, negative: bool) -> Result<Self> {
        if index >= d {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for d={d}"
            )));
        }
        let mut v = DVector::zeros(d);
        v[index] = if negative { -1.0 } else { 1.0 };
        Ok(Self(v))
    }

    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vector {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// Uniform on the unit sphere (normalized standard normal).
    UniformSphere,
    /// `±e_i` with `i` and the sign both uniform.
    CoordinateBasis,
    /// Same law as `UniformSphere`, drawn through a separate Box-Muller path
    /// so scheme sweeps exercise an independent sampler.
    GaussianNormalized,
}

impl SamplingScheme {
    pub const ALL: [SamplingScheme; 3] = [
        SamplingScheme::UniformSphere,
        SamplingScheme::CoordinateBasis,
        SamplingScheme::GaussianNormalized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplingScheme::UniformSphere => "uniform",
            SamplingScheme::CoordinateBasis => "coordinate",
            SamplingScheme::GaussianNormalized => "gaussian",
        }
    }
}

impl std::str::FromStr for SamplingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform_sphere" => Ok(SamplingScheme::UniformSphere),
            "coordinate" | "coordinate_basis" => Ok(SamplingScheme::CoordinateBasis),
            "gaussian" | "gaussian_normalized" => Ok(SamplingScheme::GaussianNormalized),
            other => Err(Error::invalid(format!("unknown sampling scheme '{other}'"))),
        }
    }
}

pub fn sample_direction<R: Rng + ?Sized>(
    scheme: SamplingScheme,
    d: usize,
    rng: &mut R,
) -> Result<Direction> {
    if d == 0 {
        return Err(Error::invalid("direction dimension must be >= 1"));
    }
    match scheme {
        SamplingScheme::UniformSphere => loop {
            let v = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
            // A zero draw has probability zero but would break normalization.
            if let Ok(u) = Direction::new(v) {
                return Ok(u);
            }
        },
        SamplingScheme::CoordinateBasis => {
            let i = rng.random_range(0..d);
            Direction::basis(d, i, rng.random_bool(0.5))
        }
        SamplingScheme::GaussianNormalized => loop {
            let v = DVector::from_vec(box_muller(d, rng));
            if let Ok(u) = Direction::new(v) {
                return Ok(u);
            }
        },
    }
}

fn box_muller<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(d + 1);
    while out.len() < d {
        // 1 - U keeps the logarithm argument in (0, 1].
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        out.push(radius * angle.cos());
        out.push(radius * angle.sin());
    }
    out.truncate(d);
    out
}

/// Uniform draw from the unit ball: a sphere direction scaled by `U^(1/d)`.
pub fn sample_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vector> {
    let u = sample_direction(SamplingScheme::UniformSphere, d, rng)?;
    let radius = rng.random::<f64>().powf(1.0 / d as f64);
    Ok(u.into_inner() * radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    fn unit_square() -> BoxSet {
        BoxSet::cube(2, 0.0, 1.0).unwrap()
    }

    #[test]
    fn project_examples() {
        let b = unit_square();
        assert_eq!(b.project(&dvector![0.5, 0.5]).unwrap(), dvector![0.5, 0.5]);
        assert_eq!(b.project(&dvector![-2.0, 3.0]).unwrap(), dvector![0.0, 1.0]);
        let line = BoxSet::cube(1, 0.0, 10.0).unwrap();
        assert_eq!(line.project(&dvector![7.3]).unwrap(), dvector![7.3]);
    }

    #[test]
    fn project_rejects_wrong_dimension() {
        let err = unit_square().project(&dvector![1.0]).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn shrink_examples() {
        let b = BoxSet::cube(1, 0.0, 10.0).unwrap();
        assert_eq!(b.shrink(0.0).unwrap(), b);
        let s = b.shrink(0.1).unwrap();
        assert_abs_diff_eq!(s.lower()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.upper()[0], 9.5, epsilon = 1e-12);

        // Origin-centered: matches the scaled set (1 - gamma) X.
        let sym = BoxSet::cube(2, -1.0, 1.0).unwrap();
        let s = sym.shrink(0.5).unwrap();
        assert_eq!(s, BoxSet::cube(2, -0.5, 0.5).unwrap());
        for x in [dvector![1.0, -1.0], dvector![0.3, 0.7]] {
            assert_eq!(s.project(&(&x * 0.5)).unwrap(), &x * 0.5);
        }
    }

    #[test]
    fn shrink_rejects_bad_gamma() {
        let b = unit_square();
        assert!(b.shrink(1.0).is_err());
        assert!(b.shrink(-0.1).is_err());
        assert!(b.shrink(f64::NAN).is_err());
    }

    #[test]
    fn radii() {
        let b = BoxSet::new(dvector![0.0, 0.0], dvector![10.0, 4.0]).unwrap();
        assert_eq!(b.center(), dvector![5.0, 2.0]);
        assert_eq!(b.inner_radius(), 2.0);
        assert_abs_diff_eq!(b.outer_radius(), 29f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn box_requires_interior() {
        assert!(BoxSet::new(dvector![0.0], dvector![0.0]).is_err());
        assert!(BoxSet::new(dvector![1.0], dvector![0.0]).is_err());
        assert!(BoxSet::new(dvector![0.0, 0.0], dvector![1.0]).is_err());
    }

    #[test]
    fn snap_inside_tolerates_rounding_only() {
        let b = unit_square();
        let snapped = b.snap_inside(dvector![1.0 + 1e-14, -1e-15]).unwrap();
        assert_eq!(snapped, dvector![1.0, 0.0]);
        assert!(b.snap_inside(dvector![1.01, 0.5]).is_err());
    }

    #[test]
    fn direction_zero_dimension_fails() {
        let mut rng = stream_rng(1, 0);
        for s in SamplingScheme::ALL {
            assert!(sample_direction(s, 0, &mut rng).is_err());
        }
        assert!(sample_ball(0, &mut rng).is_err());
    }

    #[test]
    fn directions_are_unit() {
        let mut rng = stream_rng(7, 1);
        for s in SamplingScheme::ALL {
            for d in [1, 2, 5, 40] {
                let u = sample_direction(s, d, &mut rng).unwrap();
                assert_eq!(u.dim(), d);
                assert!((u.as_vector().norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn coordinate_basis_is_uniform_over_signed_axes() {
        // Pearson chi-square over the 6 outcomes {±e1, ±e2, ±e3}.
        let mut rng = stream_rng(11, 1);
        let draws = 60_000;
        let mut counts = [0usize; 6];
        for _ in 0..draws {
            let u = sample_direction(SamplingScheme::CoordinateBasis, 3, &mut rng).unwrap();
            let v = u.as_vector();
            let i = v.iter().position(|c| *c != 0.0).unwrap();
            assert_eq!(v.iter().filter(|c| **c != 0.0).count(), 1);
            counts[2 * i + usize::from(v[i] < 0.0)] += 1;
        }
        let expected = draws as f64 / 6.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 0.99 quantile of chi-square with 5 degrees of freedom.
        assert!(chi2 < 15.086, "chi2 = {chi2}, counts = {counts:?}");
    }

    fn second_moment(scheme: SamplingScheme, d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream_rng(seed, 1);
        let mut acc = vec![vec![0.0; d]; d];
        for _ in 0..n {
            let u = sample_direction(scheme, d, &mut rng).unwrap();
            let v = u.as_vector();
            for i in 0..d {
                for j in 0..d {
                    acc[i][j] += v[i] * v[j];
                }
            }
        }
        acc.iter()
            .map(|row| row.iter().map(|x| x / n as f64).collect())
            .collect()
    }

    #[test]
    fn sphere_second_moment_is_identity_over_d() {
        for scheme in [
            SamplingScheme::UniformSphere,
            SamplingScheme::GaussianNormalized,
        ] {
            let m = second_moment(scheme, 2, 100_000, 3);
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let target = if i == j { 0.5 } else { 0.0 };
                    assert!(
                        (v - target).abs() < 0.01,
                        "{scheme:?} E[uu^T][{i}][{j}] = {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn sphere_second_moment_within_three_standard_errors() {
        // For u uniform on S^{d-1}: Var(u_i^2) = 2(d-1) / (d^2 (d+2)) and
        // Var(u_i u_j) = 1 / (d (d+2)).
        let d = 4;
        let n = 50_000;
        let m = second_moment(SamplingScheme::UniformSphere, d, n, 5);
        let df = d as f64;
        let se_diag = (2.0 * (df - 1.0) / (df * df * (df + 2.0)) / n as f64).sqrt();
        let se_off = (1.0 / (df * (df + 2.0)) / n as f64).sqrt();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let (target, se) = if i == j {
                    (1.0 / df, se_diag)
                } else {
                    (0.0, se_off)
                };
                assert!((v - target).abs() < 3.0 * se, "entry ({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn ball_samples() {
        let mut rng = stream_rng(5, 2);
        for _ in 0..1000 {
            let v = sample_ball(1, &mut rng).unwrap();
            assert!(v[0].abs() <= 1.0);
        }

        let n = 100_000;
        let mut mean = DVector::zeros(3);
        for _ in 0..n {
            mean += sample_ball(3, &mut rng).unwrap();
        }
        mean /= n as f64;
        assert!(mean.amax() < 0.01, "mean = {mean}");

        let mut sq = 0.0;
        for _ in 0..n {
            sq += sample_ball(2, &mut rng).unwrap().norm_squared();
        }
        assert!((sq / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn ball_second_moment_matches_rejection_sampler() {
        // Independent route: rejection sampling from the enclosing square.
        let mut rng = stream_rng(9, 3);
        let n = 100_000;
        let mut accepted = 0usize;
        let mut sq_rej = 0.0;
        while accepted < n {
            let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let r2: f64 = p[0] * p[0] + p[1] * p[1];
            if r2 <= 1.0 {
                sq_rej += r2;
                accepted += 1;
            }
        }
        let mut sq = 0.0;
        for _ in 0..n {
            sq += sample_ball(2, &mut rng).unwrap().norm_squared();
        }
        assert!((sq / n as f64 - sq_rej / n as f64).abs() < 0.02);
    }
}

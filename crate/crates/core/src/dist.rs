//! Valuation priors on `[0, 1]`.
//!
//! Every prior is a continuous distribution restricted to the unit interval.
//! Normal, exponential and logistic laws are truncated to `[0, 1]` and
//! renormalized; the two-peak prior is a mixture of two truncated normals.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::quad::simpson;

/// Panels used by the Simpson rule behind [`ValuationDistribution::conditional_welfare`].
pub const WELFARE_PANELS: usize = 1024;

/// Below this acceptance probability the conditional welfare is reported as 0.
pub const NULL_EVENT: f64 = 1e-12;

/// Relative threshold under which a shape test counts as satisfied.
pub const SHAPE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistKind {
    Uniform,
    TruncatedNormal {
        mean: f64,
        sd: f64,
    },
    TruncatedExponential {
        rate: f64,
    },
    TruncatedLogistic {
        location: f64,
        scale: f64,
    },
    /// With probability `weight` the value comes from the first truncated
    /// normal, otherwise from the second.
    TwoPeak {
        mean1: f64,
        sd1: f64,
        mean2: f64,
        sd2: f64,
        weight: f64,
    },
    Kumaraswamy {
        a: f64,
        b: f64,
    },
}

/// A normal law restricted to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TruncNormal {
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
    mass: f64,
}

impl TruncNormal {
    fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "normal needs a finite mean and a positive sd, got ({mean}, {sd})"
            )));
        }
        let lo = -mean / sd;
        let hi = (1.0 - mean) / sd;
        let mass = normal_mass(lo, hi);
        if mass.is_nan() || mass <= 1e-300 {
            return Err(Error::InvalidDistribution(format!(
                "normal({mean}, {sd}) puts no mass on [0, 1]"
            )));
        }
        Ok(Self { mean, sd, lo, hi, mass })
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    fn density(&self, x: f64) -> f64 {
        let z = self.z(x);
        (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * self.sd * self.mass)
    }

    fn cdf(&self, x: f64) -> f64 {
        normal_mass(self.lo, self.z(x)) / self.mass
    }

    fn reliability(&self, x: f64) -> f64 {
        normal_mass(self.z(x), self.hi) / self.mass
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.mass >= 0.2 {
            loop {
                let z: f64 = rng.sample(StandardNormal);
                let x = self.mean + self.sd * z;
                if (0.0..=1.0).contains(&x) {
                    return x;
                }
            }
        }
        let u: f64 = rng.random();
        invert_cdf(|x| self.cdf(x), u)
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `P(a <= Z <= b)` for a standard normal `Z`, evaluated in whichever tail
/// keeps the subtraction well conditioned.
fn normal_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else if b <= 0.0 {
        std_normal_cdf(b) - std_normal_cdf(a)
    } else {
        1.0 - std_normal_cdf(a) - std_normal_sf(b)
    };
    m.max(0.0)
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logistic_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = if a >= 0.0 {
        logistic(-a) - logistic(-b)
    } else {
        logistic(b) - logistic(a)
    };
    m.max(0.0)
}

/// Bisection on a continuous nondecreasing CDF over `[0, 1]`.
fn invert_cdf<F: Fn(f64) -> f64>(cdf: F, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Uniform,
    Normal(TruncNormal),
    Exponential { rate: f64, mass: f64 },
    Logistic { location: f64, scale: f64, lo: f64, hi: f64, mass: f64 },
    TwoPeak { first: TruncNormal, second: TruncNormal, weight: f64 },
    Kumaraswamy { a: f64, b: f64 },
}

/// A valuation prior on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuationDistribution {
    kind: DistKind,
    law: Law,
}

/// Density, CDF and reliability at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub density: f64,
    pub cdf: f64,
    pub reliability: f64,
}

/// Grid verdicts on the shape conditions that make equal splits optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub log_concave: bool,
    pub welfare_concave: bool,
    pub nonincreasing: bool,
    pub grid_size: usize,
    pub log_concavity_violation: f64,
    pub welfare_concavity_violation: f64,
    pub monotonicity_violation: f64,
}

impl ValuationDistribution {
    pub fn new(kind: DistKind) -> Result<Self> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let law = match kind {
            DistKind::Uniform => Law::Uniform,
            DistKind::TruncatedNormal { mean, sd } => Law::Normal(TruncNormal::new(mean, sd)?),
            DistKind::TruncatedExponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "exponential rate must be positive, got {rate}"
                    )));
                }
                Law::Exponential { rate, mass: -(-rate).exp_m1() }
            }
            DistKind::TruncatedLogistic { location, scale } => {
                if !(finite(&[location, scale]) && scale > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "logistic needs a finite location and a positive scale, got ({location}, {scale})"
                    )));
                }
                let lo = -location / scale;
                let hi = (1.0 - location) / scale;
                let mass = logistic_mass(lo, hi);
                if mass.is_nan() || mass <= 1e-300 {
                    return Err(Error::InvalidDistribution(format!(
                        "logistic({location}, {scale}) puts no mass on [0, 1]"
                    )));
                }
                Law::Logistic { location, scale, lo, hi, mass }
            }
            DistKind::TwoPeak { mean1, sd1, mean2, sd2, weight } => {
                if !(weight.is_finite() && (0.0..=1.0).contains(&weight)) {
                    return Err(Error::InvalidDistribution(format!(
                        "two-peak weight must lie in [0, 1], got {weight}"
                    )));
                }
                Law::TwoPeak {
                    first: TruncNormal::new(mean1, sd1)?,
                    second: TruncNormal::new(mean2, sd2)?,
                    weight,
                }
            }
            DistKind::Kumaraswamy { a, b } => {
                if !(finite(&[a, b]) && a > 0.0 && b > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "kumaraswamy needs positive shapes, got ({a}, {b})"
                    )));
                }
                Law::Kumaraswamy { a, b }
            }
        };
        Ok(Self { kind, law })
    }

    pub fn uniform() -> Self {
        Self { kind: DistKind::Uniform, law: Law::Uniform }
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(DistKind::TruncatedNormal { mean, sd })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(DistKind::TruncatedExponential { rate })
    }

    pub fn logistic(location: f64, scale: f64) -> Result<Self> {
        Self::new(DistKind::TruncatedLogistic { location, scale })
    }

    pub fn two_peak(mean1: f64, sd1: f64, mean2: f64, sd2: f64, weight: f64) -> Result<Self> {
        Self::new(DistKind::TwoPeak { mean1, sd1, mean2, sd2, weight })
    }

    pub fn kumaraswamy(a: f64, b: f64) -> Result<Self> {
        Self::new(DistKind::Kumaraswamy { a, b })
    }

    /// Continuous stand-in for a fair coin on `{0, 1}`: two narrow truncated
    /// normals at the endpoints (sd 0.02), equally weighted.
    pub fn smoothed_bernoulli() -> Self {
        Self::two_peak(0.0, SMOOTHED_BERNOULLI_SD, 1.0, SMOOTHED_BERNOULLI_SD, 0.5)
            .expect("valid parameters")
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    /// Density, CDF and reliability at `x`.
    pub fn evaluate(&self, x: f64) -> Result<PointEval> {
        check_unit(x)?;
        Ok(PointEval { density: self.density(x), cdf: self.cdf(x), reliability: self.reliability(x) })
    }

    /// Density at `x`, which is clamped into `[0, 1]`.
    pub fn density(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.law {
            Law::Uniform => 1.0,
            Law::Normal(tn) => tn.density(x),
            Law::Exponential { rate, mass } => rate * (-rate * x).exp() / mass,
            Law::Logistic { location, scale, mass, .. } => {
                let z = (x - location) / scale;
                let l = logistic(z);
                l * (1.0 - l) / (scale * mass)
            }
            Law::TwoPeak { first, second, weight } => {
                weight * first.density(x) + (1.0 - weight) * second.density(x)
            }
            Law::Kumaraswamy { a, b } => {
                let one_minus = -(a * x.ln()).exp_m1();
                a * b * x.powf(a - 1.0) * one_minus.powf(b - 1.0)
            }
        }
    }

    /// CDF at `x`, which is clamped into `[0, 1]`.
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let v = match self.law {
            Law::Uniform => x,
            Law::Normal(tn) => tn.cdf(x),
            Law::Exponential { rate, mass } => -(-rate * x).exp_m1() / mass,
            Law::Logistic { location, scale, lo, mass, .. } => {
                logistic_mass(lo, (x - location) / scale) / mass
            }
            Law::TwoPeak { first, second, weight } => {
                weight * first.cdf(x) + (1.0 - weight) * second.cdf(x)
            }
            Law::Kumaraswamy { a, b } => {
                let one_minus = -(a * x.ln()).exp_m1();
                -(b * one_minus.ln()).exp_m1()
            }
        };
        v.clamp(0.0, 1.0)
    }

    /// `1 - F(x)`: the probability that an agent accepts a share of `x`.
    pub fn reliability(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let v = match self.law {
            Law::Uniform => 1.0 - x,
            Law::Normal(tn) => tn.reliability(x),
            Law::Exponential { rate, mass } => {
                (-rate * x).exp() * -(-rate * (1.0 - x)).exp_m1() / mass
            }
            Law::Logistic { location, scale, hi, mass, .. } => {
                logistic_mass((x - location) / scale, hi) / mass
            }
            Law::TwoPeak { first, second, weight } => {
                weight * first.reliability(x) + (1.0 - weight) * second.reliability(x)
            }
            Law::Kumaraswamy { a, b } => {
                let one_minus = -(a * x.ln()).exp_m1();
                one_minus.powf(b)
            }
        };
        v.clamp(0.0, 1.0)
    }

    /// Expected utility `E[v - c | v >= c]` of an agent offered share `c`.
    pub fn conditional_welfare(&self, c: f64) -> Result<f64> {
        check_unit(c)?;
        Ok(self.welfare_and_slope(c).0)
    }

    /// `w(c)` together with `w'(c)`.
    ///
    /// Integrating by parts, `∫_c^1 (x - c) f(x) dx = ∫_c^1 (1 - F(x)) dx`, so
    /// `w(c) = I(c) / R(c)` with `R` the reliability, and
    /// `w'(c) = -1 + I(c) f(c) / R(c)^2`.
    pub fn welfare_and_slope(&self, c: f64) -> (f64, f64) {
        let c = c.clamp(0.0, 1.0);
        let r = self.reliability(c);
        if r < NULL_EVENT {
            return (0.0, 0.0);
        }
        let tail = simpson(|x| self.reliability(x), c, 1.0, WELFARE_PANELS);
        let w = (tail / r).clamp(0.0, 1.0 - c);
        let f = self.density(c.clamp(1e-9, 1.0 - 1e-9));
        let slope = -1.0 + tail * f / (r * r);
        (w, if slope.is_finite() { slope } else { 0.0 })
    }

    /// `w(j / h)` for `j = 0..=h`.
    pub fn welfare_grid(&self, h: usize) -> Vec<f64> {
        (0..=h).map(|j| self.welfare_and_slope(j as f64 / h as f64).0).collect()
    }

    /// `R(j / h)` for `j = 0..=h`.
    pub fn reliability_grid(&self, h: usize) -> Vec<f64> {
        (0..=h).map(|j| self.reliability(j as f64 / h as f64)).collect()
    }

    /// Draws one valuation.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match self.law {
            Law::Uniform => rng.random::<f64>(),
            Law::Normal(tn) => tn.sample(rng),
            Law::Exponential { rate, mass } => {
                let u: f64 = rng.random();
                -(-u * mass).ln_1p() / rate
            }
            Law::Logistic { location, scale, lo, hi, .. } => {
                let u: f64 = rng.random();
                let (pl, ph) = (logistic(lo), logistic(hi));
                let p = pl + u * (ph - pl);
                location + scale * (p / (1.0 - p)).ln()
            }
            Law::TwoPeak { first, second, weight } => {
                if rng.random::<f64>() < weight {
                    first.sample(rng)
                } else {
                    second.sample(rng)
                }
            }
            Law::Kumaraswamy { a, b } => {
                let u: f64 = rng.random();
                // 1 - (1-u)^(1/b), then the a-th root.
                let inner = -((1.0 / b) * (-u).ln_1p()).exp_m1();
                inner.powf(1.0 / a)
            }
        };
        x.clamp(0.0, 1.0)
    }

    /// `count` i.i.d. draws from a generator seeded with `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_one(&mut rng)).collect()
    }

    /// Finite-difference shape diagnostics on the midpoint grid
    /// `x_j = (j + 1/2) / grid_size`.
    ///
    /// A second (first) difference counts as a violation when it is positive;
    /// violations are divided by `max(1, max |g|)` of the tested function `g`
    /// and a property holds when the largest one is at most
    /// [`SHAPE_TOLERANCE`]. Log-concavity is tested on consecutive triples
    /// where the density is positive.
    pub fn shape_report(&self, grid_size: usize) -> Result<ShapeReport> {
        if grid_size < 10 {
            return Err(Error::InvalidArgument(format!(
                "shape grids need at least 10 points, got {grid_size}"
            )));
        }
        let xs: Vec<f64> = (0..grid_size).map(|j| (j as f64 + 0.5) / grid_size as f64).collect();
        let dens: Vec<f64> = xs.iter().map(|&x| self.density(x)).collect();
        let log_dens: Vec<Option<f64>> = dens
            .iter()
            .map(|&f| (f > 0.0 && f.is_finite()).then(|| f.ln()))
            .collect();
        let welfare: Vec<f64> = xs.iter().map(|&x| self.welfare_and_slope(x).0).collect();

        let scale = |vals: &mut dyn Iterator<Item = f64>| vals.fold(1.0_f64, |m, v| m.max(v.abs()));

        let log_scale = scale(&mut log_dens.iter().flatten().copied());
        let log_violation = log_dens
            .windows(3)
            .filter_map(|w| match (w[0], w[1], w[2]) {
                (Some(a), Some(b), Some(c)) => Some(a - 2.0 * b + c),
                _ => None,
            })
            .fold(0.0_f64, f64::max)
            / log_scale;

        let welfare_scale = scale(&mut welfare.iter().copied());
        let welfare_violation = welfare
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .fold(0.0_f64, f64::max)
            / welfare_scale;

        let dens_scale = scale(&mut dens.iter().copied().filter(|f| f.is_finite()));
        let monotone_violation = dens
            .windows(2)
            .map(|w| w[1] - w[0])
            .map(|d| if d.is_nan() { f64::INFINITY } else { d })
            .fold(0.0_f64, f64::max)
            / dens_scale;

        Ok(ShapeReport {
            log_concave: log_violation <= SHAPE_TOLERANCE,
            welfare_concave: welfare_violation <= SHAPE_TOLERANCE,
            nonincreasing: monotone_violation <= SHAPE_TOLERANCE,
            grid_size,
            log_concavity_violation: log_violation,
            welfare_concavity_violation: welfare_violation,
            monotonicity_violation: monotone_violation,
        })
    }
}

/// Standard deviation of each peak of [`ValuationDistribution::smoothed_bernoulli`].
pub const SMOOTHED_BERNOULLI_SD: f64 = 0.02;

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { value: x })
    }
}

impl fmt::Display for ValuationDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DistKind::Uniform => write!(f, "uniform"),
            DistKind::TruncatedNormal { mean, sd } => write!(f, "normal:{mean},{sd}"),
            DistKind::TruncatedExponential { rate } => write!(f, "exponential:{rate}"),
            DistKind::TruncatedLogistic { location, scale } => {
                write!(f, "logistic:{location},{scale}")
            }
            DistKind::TwoPeak { mean1, sd1, mean2, sd2, weight } => {
                write!(f, "twopeak:{mean1},{sd1},{mean2},{sd2},{weight}")
            }
            DistKind::Kumaraswamy { a, b } => write!(f, "kumaraswamy:{a},{b}"),
        }
    }
}

/// Names accepted by [`ValuationDistribution::from_str`].
pub const SPEC_KINDS: &str =
    "uniform, normal:MEAN,SD, exponential:RATE, logistic:LOC,SCALE, twopeak:M1,S1,M2,S2,P, kumaraswamy:A,B";

impl FromStr for ValuationDistribution {
    type Err = Error;

    /// Parses `uniform`, `normal:0.5,0.1`, `exponential:1`,
    /// `logistic:0.5,0.1`, `twopeak:0.15,0.1,0.85,0.1,0.5` or
    /// `kumaraswamy:0.1,0.354`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((name, args)) => (name.trim(), args),
            None => (s.trim(), ""),
        };
        let params: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidDistribution(format!("bad parameter `{p}` in `{s}`"))
                    })
                })
                .collect::<Result<_>>()?
        };
        let want = |k: usize| -> Result<()> {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidDistribution(format!(
                    "`{name}` takes {k} parameter(s), got {} in `{s}`",
                    params.len()
                )))
            }
        };
        match name {
            "uniform" => {
                want(0)?;
                Ok(Self::uniform())
            }
            "normal" => {
                want(2)?;
                Self::normal(params[0], params[1])
            }
            "exponential" => {
                want(1)?;
                Self::exponential(params[0])
            }
            "logistic" => {
                want(2)?;
                Self::logistic(params[0], params[1])
            }
            "twopeak" => {
                want(5)?;
                Self::two_peak(params[0], params[1], params[2], params[3], params[4])
            }
            "kumaraswamy" => {
                want(2)?;
                Self::kumaraswamy(params[0], params[1])
            }
            other => Err(Error::InvalidDistribution(format!(
                "unknown distribution `{other}`; valid kinds: {SPEC_KINDS}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_peak_sym() -> ValuationDistribution {
        ValuationDistribution::two_peak(0.15, 0.1, 0.85, 0.1, 0.5).unwrap()
    }

    #[test]
    fn uniform_point() {
        let e = ValuationDistribution::uniform().evaluate(0.3).unwrap();
        assert_eq!(e.density, 1.0);
        assert!((e.cdf - 0.3).abs() < 1e-15);
        assert!((e.reliability - 0.7).abs() < 1e-15);
    }

    #[test]
    fn symmetric_two_peak_has_median_one_half() {
        let e = two_peak_sym().evaluate(0.5).unwrap();
        assert!((e.cdf - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kumaraswamy_closed_form_cdf() {
        let d = ValuationDistribution::kumaraswamy(0.1, 0.354).unwrap();
        let want = 1.0 - (1.0 - 0.5_f64.powf(0.1)).powf(0.354);
        assert!((d.cdf(0.5) - want).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_points_are_rejected() {
        let d = ValuationDistribution::uniform();
        assert!(matches!(d.evaluate(1.5), Err(Error::Domain { .. })));
        assert!(matches!(d.evaluate(-0.1), Err(Error::Domain { .. })));
        assert!(d.conditional_welfare(2.0).is_err());
    }

    #[test]
    fn uniform_conditional_welfare() {
        let d = ValuationDistribution::uniform();
        assert!((d.conditional_welfare(0.4).unwrap() - 0.3).abs() < 1e-12);
        assert!((d.conditional_welfare(0.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(d.conditional_welfare(1.0).unwrap(), 0.0);
    }

    #[test]
    fn welfare_slope_matches_uniform() {
        let (w, dw) = ValuationDistribution::uniform().welfare_and_slope(0.25);
        assert!((w - 0.375).abs() < 1e-12);
        assert!((dw + 0.5).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = ValuationDistribution::uniform();
        assert_eq!(d.sample(7, 5), d.sample(7, 5));
        assert_ne!(d.sample(7, 5), d.sample(8, 5));
    }

    #[test]
    fn samples_stay_in_support() {
        for d in [
            two_peak_sym(),
            ValuationDistribution::normal(-1.0, 0.3).unwrap(),
            ValuationDistribution::kumaraswamy(0.1, 0.354).unwrap(),
            ValuationDistribution::smoothed_bernoulli(),
        ] {
            assert!(d.sample(3, 100_000).iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn uniform_sample_mean() {
        let xs = ValuationDistribution::uniform().sample(1, 100_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.005);
    }

    #[test]
    fn shape_verdicts() {
        let u = ValuationDistribution::uniform().shape_report(200).unwrap();
        assert!(u.log_concave && u.welfare_concave && u.nonincreasing);

        let n = ValuationDistribution::normal(0.5, 0.1).unwrap().shape_report(200).unwrap();
        assert!(n.log_concave);
        assert!(!n.welfare_concave);
        assert!(!n.nonincreasing);

        let t = two_peak_sym().shape_report(200).unwrap();
        assert!(!t.log_concave);
        assert_eq!(t.grid_size, 200);
    }

    #[test]
    fn tiny_shape_grid_is_rejected() {
        assert!(ValuationDistribution::uniform().shape_report(9).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "uniform",
            "normal:0.5,0.1",
            "exponential:1",
            "logistic:0.5,0.1",
            "twopeak:0.15,0.1,0.85,0.1,0.5",
            "kumaraswamy:0.1,0.354",
        ] {
            let d: ValuationDistribution = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
    }

    #[test]
    fn bad_spec_strings() {
        let err = "gamma:1,2".parse::<ValuationDistribution>().unwrap_err();
        assert!(err.to_string().contains("valid kinds"));
        assert!("normal:0.5".parse::<ValuationDistribution>().is_err());
        assert!("normal:0.5,-1".parse::<ValuationDistribution>().is_err());
        assert!("twopeak:0,0.1,1,0.1,1.5".parse::<ValuationDistribution>().is_err());
        assert!("exponential:x".parse::<ValuationDistribution>().is_err());
    }
}

//! Exact and Monte Carlo evaluation of mechanisms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::dist::{ValuationDistribution, NULL_EVENT};
use crate::error::{Error, Result};
use crate::mechanisms::{
    run_largest_unanimous, run_schedule_as_is, run_sequential_offer, run_unanimous, CostShareVector, Outcome,
    Schedule,
};
use crate::objective::Objective;
use crate::quad::pairwise_sum;
use crate::solvers::OfferPolicy;

/// Anything that maps a reported profile to an outcome.
pub trait Mechanism: Sync {
    fn n(&self) -> usize;
    fn run(&self, profile: &[f64]) -> Result<Outcome>;
}

impl Mechanism for CostShareVector {
    fn n(&self) -> usize {
        self.len()
    }

    fn run(&self, profile: &[f64]) -> Result<Outcome> {
        run_unanimous(self, profile)
    }
}

/// Largest unanimous mechanism; refuses schedules that are not monotone.
impl Mechanism for Schedule {
    fn n(&self) -> usize {
        Schedule::n(self)
    }

    fn run(&self, profile: &[f64]) -> Result<Outcome> {
        run_largest_unanimous(self, profile)
    }
}

/// Iterative removal on a schedule without the monotonicity check.
#[derive(Debug, Clone, Copy)]
pub struct AsIs<'a>(pub &'a Schedule);

impl Mechanism for AsIs<'_> {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn run(&self, profile: &[f64]) -> Result<Outcome> {
        if !self.0.is_balanced() {
            return Err(Error::InvalidMechanism("schedule shares do not sum to 1".into()));
        }
        Ok(run_schedule_as_is(self.0, profile))
    }
}

/// Whole cost offered to each agent in turn; see [`run_sequential_offer`].
#[derive(Debug, Clone, Copy)]
pub struct SequentialOffer {
    pub n: usize,
    pub offer: f64,
}

impl Mechanism for SequentialOffer {
    fn n(&self) -> usize {
        self.n
    }

    fn run(&self, profile: &[f64]) -> Result<Outcome> {
        run_sequential_offer(profile, self.offer)
    }
}

impl Mechanism for OfferPolicy {
    fn n(&self) -> usize {
        OfferPolicy::n(self)
    }

    fn run(&self, profile: &[f64]) -> Result<Outcome> {
        OfferPolicy::run(self, profile)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// The random stream behind sample `index`: independent of how samples are
/// split across threads.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws the valuation profile for sample `index`.
pub fn sample_profile(d: &ValuationDistribution, n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = sample_rng(seed, index);
    (0..n).map(|_| d.sample_one(&mut rng)).collect()
}

/// Mean and standard error of `values` (sample standard deviation over
/// `sqrt(len)`), summed pairwise.
pub fn summarize(values: &[f64], seed: u64) -> Estimate {
    let len = values.len();
    let mean = pairwise_sum(values) / len as f64;
    let stderr = if len > 1 {
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (len - 1) as f64 / len as f64).sqrt()
    } else {
        0.0
    };
    Estimate { mean, stderr, samples: len, seed }
}

/// Average objective over `samples` i.i.d. profiles.
pub fn mc_estimate<M: Mechanism + ?Sized>(
    mechanism: &M,
    d: &ValuationDistribution,
    samples: usize,
    seed: u64,
    objective: Objective,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let n = mechanism.n();
    let values = (0..samples as u64)
        .into_par_iter()
        .map(|idx| {
            let profile = sample_profile(d, n, seed, idx);
            mechanism.run(&profile).map(|o| o.objective(&profile, objective))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&values, seed))
}

/// Expected objective of a unanimous mechanism: everyone must accept.
pub fn exact_unanimous_value(shares: &CostShareVector, d: &ValuationDistribution, objective: Objective) -> f64 {
    let all_accept: f64 = shares.as_slice().iter().map(|&c| d.reliability(c)).product();
    let payoff = match objective {
        Objective::Consumers => shares.len() as f64,
        Objective::Welfare => shares
            .as_slice()
            .iter()
            .map(|&c| d.welfare_and_slope(c).0)
            .sum(),
    };
    all_accept * payoff
}

/// Expected number of consumers under serial cost sharing.
///
/// The served coalition has size `max{k : N_k >= k}` where `N_k` counts
/// values of at least `1/k`. Walking `k` downwards, `N_k` given `N_{k+1}`
/// is a binomial thinning, so the distribution of `N_k` on the event that
/// no larger `k` succeeded is propagated exactly.
pub fn exact_scs_consumers(d: &ValuationDistribution, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one agent is required".into()));
    }
    let accept = |k: usize| d.reliability(1.0 / k as f64);
    let pmf = |trials: usize, p: f64| -> Result<Vec<f64>> {
        let b = Binomial::new(p.clamp(0.0, 1.0), trials as u64)
            .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?;
        Ok((0..=trials).map(|j| b.pmf(j as u64)).collect())
    };

    // alive[j] = P(N_k = j and no size above k was served)
    let mut alive = pmf(n, accept(n))?;
    let mut expected = 0.0;
    for k in (1..=n).rev() {
        let served: f64 = alive[k..].iter().sum();
        expected += k as f64 * served;
        if k == 1 {
            break;
        }
        let ratio = if accept(k) < NULL_EVENT { 0.0 } else { accept(k - 1) / accept(k) };
        let mut next = vec![0.0; k];
        for (j, &mass) in alive.iter().enumerate().take(k) {
            if mass == 0.0 {
                continue;
            }
            for (t, q) in pmf(j, ratio)?.into_iter().enumerate() {
                next[t] += mass * q;
            }
        }
        alive = next;
    }
    Ok(expected)
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub mechanism: String,
    pub distribution: String,
    pub n: usize,
    pub objective: Objective,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl EstimateRow {
    pub fn new(mechanism: &str, d: &ValuationDistribution, n: usize, objective: Objective, e: &Estimate) -> Self {
        Self {
            mechanism: mechanism.to_string(),
            distribution: d.to_string(),
            n,
            objective,
            mean: e.mean,
            stderr: e.stderr,
            samples: e.samples,
            seed: e.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{cec_shares, scs_schedule};

    #[test]
    fn cec_uniform_closed_form() {
        let v = exact_unanimous_value(&cec_shares(3), &ValuationDistribution::uniform(), Objective::Consumers);
        assert!((v - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn scs_small_cases() {
        let u = ValuationDistribution::uniform();
        assert!(exact_scs_consumers(&u, 1).unwrap().abs() < 1e-15);
        assert!((exact_scs_consumers(&u, 2).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scs_three_uniform_by_enumeration() {
        // Size 3 is served when all values reach 1/3. Size 2 needs exactly
        // two values of at least 1/2 and the third below 1/3.
        let expected = 3.0 * (2.0f64 / 3.0).powi(3) + 2.0 * 3.0 * 0.25 * (1.0 / 3.0);
        let v = exact_scs_consumers(&ValuationDistribution::uniform(), 3).unwrap();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn mc_is_deterministic_and_thread_independent() {
        let d = ValuationDistribution::uniform();
        let s = scs_schedule(4).unwrap();
        let a = mc_estimate(&s, &d, 2000, 9, Objective::Consumers).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_estimate(&s, &d, 2000, 9, Objective::Consumers).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn mc_rejects_zero_samples() {
        let d = ValuationDistribution::uniform();
        assert!(mc_estimate(&cec_shares(2), &d, 0, 1, Objective::Consumers).is_err());
    }

    #[test]
    fn infeasible_schedule_propagates() {
        let s = Schedule::from_fn(3, |c| match c {
            7 => vec![0.2, 0.4, 0.4],
            3 => vec![0.9, 0.1],
            c => vec![1.0 / crate::mechanisms::size(c) as f64; crate::mechanisms::size(c)],
        })
        .unwrap();
        let d = ValuationDistribution::uniform();
        assert!(mc_estimate(&s, &d, 10, 1, Objective::Consumers).is_err());
        assert!(mc_estimate(&AsIs(&s), &d, 10, 1, Objective::Consumers).is_ok());
    }

    #[test]
    fn summarize_matches_textbook() {
        let e = summarize(&[1.0, 2.0, 3.0, 4.0], 0);
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}

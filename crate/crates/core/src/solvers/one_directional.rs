use serde::{Deserialize, Serialize};

use super::{check_n, GridSpec, OfferTables};
use crate::dist::ValuationDistribution;
use crate::error::{Error, Result};
use crate::mechanisms::{check_profile, members, Outcome, Schedule, MAX_AGENTS};
use crate::objective::Objective;

/// Offer table of the one-directional mechanism.
///
/// Agents are approached once each, in index order. The offer depends on the
/// number of agents not yet approached `k`, the objective collected so far
/// `u` (grid index, step `1/h`, range `0..=n*h`) and the money still missing
/// `m` (grid index, range `0..=h`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferPolicy {
    header: PolicyHeader,
    offers: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PolicyHeader {
    n: usize,
    h: usize,
    objective: Objective,
    /// `[k, u, m]` extents; `offers` is row-major in this order.
    dims: [usize; 3],
    /// Grid increment of `u` when an offer with index `j` is accepted.
    utility_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneDirectionalSolution {
    pub policy: OfferPolicy,
    pub value: f64,
}

impl OfferPolicy {
    pub fn n(&self) -> usize {
        self.header.n
    }

    pub fn h(&self) -> usize {
        self.header.h
    }

    pub fn objective(&self) -> Objective {
        self.header.objective
    }

    fn index(&self, k: usize, u: usize, m: usize) -> usize {
        let [_, du, dm] = self.header.dims;
        (k * du + u) * dm + m
    }

    /// Offer (grid index) for `k` agents left, collected objective index `u`
    /// and missing money index `m`.
    pub fn offer(&self, k: usize, u: usize, m: usize) -> usize {
        self.offers[self.index(k, u, m)] as usize
    }

    fn u_cap(&self) -> usize {
        self.header.dims[1] - 1
    }

    /// Replays the offers for a fixed set of accepting agents. Returns the
    /// offer (grid index) made to each agent and the money left uncollected.
    fn replay(&self, mut accepts: impl FnMut(usize, usize) -> bool) -> (Vec<usize>, usize) {
        let n = self.n();
        let (mut u, mut m) = (0usize, self.h());
        let mut made = vec![0; n];
        for (i, slot) in made.iter_mut().enumerate() {
            let c = self.offer(n - i, u, m);
            *slot = c;
            if accepts(i, c) {
                u = (u + self.header.utility_steps[c]).min(self.u_cap());
                m -= c;
            }
        }
        (made, m)
    }

    pub fn run(&self, profile: &[f64]) -> Result<Outcome> {
        check_profile(profile, self.n())?;
        let h = self.h() as f64;
        let mut consumers = 0u32;
        let (made, left) = self.replay(|i, c| {
            let ok = profile[i] >= c as f64 / h;
            if ok {
                consumers |= 1 << i;
            }
            ok
        });
        if left > 0 {
            return Ok(Outcome::not_built(self.n()));
        }
        let payments = (0..self.n())
            .map(|i| if consumers >> i & 1 == 1 { made[i] as f64 / h } else { 0.0 })
            .collect();
        Ok(Outcome { built: true, consumers, payments })
    }

    /// Coalition schedule with each member's share equal to the offer they
    /// face when exactly that coalition accepts. Coalitions whose replay
    /// leaves money uncollected charge the remainder to their last member.
    pub fn as_schedule(&self) -> Result<Schedule> {
        let h = self.h() as f64;
        Schedule::from_fn(self.n(), |c| {
            let (made, left) = self.replay(|i, _| c >> i & 1 == 1);
            let mut shares: Vec<f64> = members(c).map(|i| made[i] as f64).collect();
            if let Some(last) = shares.last_mut() {
                *last += left as f64;
            }
            shares.iter().map(|s| s / h).collect()
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        let [dk, du, dm] = p.header.dims;
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("offer policy: {msg}")));
        if p.header.n == 0 || p.header.n > MAX_AGENTS || dk != p.header.n + 1 || dm != p.header.h + 1 {
            return bad("dims do not match n and h");
        }
        if du != p.header.n * p.header.h + 1 || p.offers.len() != dk * du * dm {
            return bad("offer array has the wrong length");
        }
        if p.header.utility_steps.len() != dm {
            return bad("utility_steps must have h + 1 entries");
        }
        for k in 0..dk {
            for u in 0..du {
                for m in 0..dm {
                    if p.offer(k, u, m) > m {
                        return bad("offer exceeds the missing money");
                    }
                }
            }
        }
        Ok(p)
    }
}

/// One offer per agent, in index order.
///
/// `D(k, u, m) = max_{0 <= c <= m} R(c) D(k - 1, u + p(c), m - c) + F(c) D(k - 1, u, m)`
/// with `D(k, u, 0) = u + k p(0)`, `D(0, u, m) = 0`
/// for `m > 0`, where `p` is the payoff of an accepting agent. `u` is
/// rounded to the grid after every acceptance.
pub fn solve_one_directional(
    d: &ValuationDistribution,
    n: usize,
    grid: GridSpec,
    objective: Objective,
) -> Result<OneDirectionalSolution> {
    check_n(n)?;
    if n > MAX_AGENTS {
        return Err(Error::InvalidArgument(format!("at most {MAX_AGENTS} agents are supported")));
    }
    let h = grid.h();
    let tables = OfferTables::new(d, grid, objective);
    let (rel, cdf, payoff) = (&tables.reliability, &tables.cdf, &tables.payoff);
    let steps: Vec<usize> = payoff.iter().map(|p| (p * h as f64).round() as usize).collect();
    let (du, dm) = (n * h + 1, h + 1);
    let u_cap = du - 1;

    let mut offers = vec![0u16; (n + 1) * du * dm];
    // prev[u * dm + m] = D(k - 1, u, m)
    let mut prev = vec![0.0; du * dm];
    for u in 0..du {
        prev[u * dm] = u as f64 / h as f64;
    }
    let mut cur = vec![0.0; du * dm];
    for k in 1..=n {
        for u in 0..du {
            cur[u * dm] = u as f64 / h as f64 + k as f64 * payoff[0];
            for m in 1..dm {
                let stay = prev[u * dm + m];
                let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
                for c in 0..=m {
                    let up = (u + steps[c]).min(u_cap);
                    let v = rel[c] * prev[up * dm + m - c] + cdf[c] * stay;
                    if v > best {
                        best = v;
                        arg = c;
                    }
                }
                cur[u * dm + m] = best;
                offers[(k * du + u) * dm + m] = arg as u16;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let value = prev[h];
    let header = PolicyHeader { n, h, objective, dims: [n + 1, du, dm], utility_steps: steps };
    Ok(OneDirectionalSolution { policy: OfferPolicy { header, offers }, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::feasibility_check;

    fn small() -> OneDirectionalSolution {
        let d = ValuationDistribution::two_peak(0.15, 0.1, 0.85, 0.1, 0.5).unwrap();
        solve_one_directional(&d, 3, GridSpec::new(20).unwrap(), Objective::Consumers).unwrap()
    }

    #[test]
    fn single_agent_value_is_zero() {
        let d = ValuationDistribution::normal(0.7, 0.2).unwrap();
        let s = solve_one_directional(&d, 1, GridSpec::default(), Objective::Consumers).unwrap();
        assert!(s.value.abs() < 1e-12);
    }

    #[test]
    fn offers_never_exceed_missing_money() {
        let p = small().policy;
        for k in 0..=3 {
            for u in 0..=60 {
                for m in 0..=20 {
                    assert!(p.offer(k, u, m) <= m);
                }
            }
        }
    }

    #[test]
    fn run_collects_exactly_the_cost() {
        let p = small().policy;
        let out = p.run(&[1.0, 1.0, 1.0]).unwrap();
        assert!(out.built);
        assert!((out.payments.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(!p.run(&[0.0, 0.0, 0.0]).unwrap().built);
    }

    #[test]
    fn json_round_trip() {
        let p = small().policy;
        let back = OfferPolicy::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn json_rejects_truncated_offers() {
        let p = small().policy;
        let mut v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        v["offers"].as_array_mut().unwrap().pop();
        assert!(OfferPolicy::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn schedule_is_budget_balanced() {
        let s = small().policy.as_schedule().unwrap();
        assert!(s.is_balanced());
        // Not guaranteed in general; recorded here for the small instance.
        let _ = feasibility_check(&s);
    }
}

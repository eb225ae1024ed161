//! Unanimous and largest unanimous mechanisms.
//!
//! Agents are indexed from 0 internally. A [`Coalition`] is a bitmask whose
//! bit `i` is set when agent `i` belongs to it; share vectors list the
//! members' shares in ascending agent order.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Objective;

pub type Coalition = u32;

/// Dense schedules store `2^n - 1` entries, so `n` is capped here.
pub const MAX_AGENTS: usize = 16;

/// Tolerance on `sum(shares) == 1`.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// A share may shrink by at most this much when a coalition loses a member
/// before the schedule is reported as non-monotone.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;

pub fn full_coalition(n: usize) -> Coalition {
    debug_assert!(n <= MAX_AGENTS);
    ((1u64 << n) - 1) as Coalition
}

/// Members of `c` in ascending order.
pub fn members(c: Coalition) -> impl Iterator<Item = usize> {
    let mut rest = c;
    std::iter::from_fn(move || {
        if rest == 0 {
            return None;
        }
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        Some(i)
    })
}

pub fn size(c: Coalition) -> usize {
    c.count_ones() as usize
}

/// Position of `agent` within the share vector of `c`.
fn position(c: Coalition, agent: usize) -> usize {
    (c & ((1u32 << agent) - 1)).count_ones() as usize
}

fn check_agents(n: usize) -> Result<()> {
    if (1..=MAX_AGENTS).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "agent count must lie in 1..={MAX_AGENTS}, got {n}"
        )))
    }
}

fn check_shares(shares: &[f64]) -> Result<()> {
    if let Some(bad) = shares.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidMechanism(format!("share {bad} is not a nonnegative number")));
    }
    Ok(())
}

fn check_budget(shares: &[f64]) -> Result<()> {
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > BUDGET_TOLERANCE {
        return Err(Error::InvalidMechanism(format!("shares sum to {total}, not 1")));
    }
    Ok(())
}

pub(crate) fn check_profile(profile: &[f64], n: usize) -> Result<()> {
    if profile.len() != n {
        return Err(Error::InvalidArgument(format!(
            "profile has {} values for {n} agents",
            profile.len()
        )));
    }
    match profile.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&v) => Err(Error::Domain { value: v }),
        None => Ok(()),
    }
}

/// Nonnegative shares that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CostShareVector(Vec<f64>);

impl CostShareVector {
    pub fn new(shares: Vec<f64>) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::EmptyCoalition);
        }
        check_shares(&shares)?;
        check_budget(&shares)?;
        Ok(Self(shares))
    }

    /// Equal shares `1/n`: the conservative equal costs mechanism.
    pub fn equal(n: usize) -> Self {
        assert!(n > 0, "equal shares need at least one agent");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for CostShareVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CostShareVector> for Vec<f64> {
    fn from(v: CostShareVector) -> Self {
        v.0
    }
}

/// Shares `1/n` for every agent.
pub fn cec_shares(n: usize) -> CostShareVector {
    CostShareVector::equal(n)
}

/// A cost share vector for every nonempty coalition of `n` agents.
#[derive(Debug, Clone)]
pub struct Schedule {
    n: usize,
    table: Vec<Vec<f64>>,
    balanced: bool,
    feasible: OnceLock<bool>,
}

impl PartialEq for Schedule {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.table == other.table
    }
}

impl Schedule {
    /// Builds a schedule from a dense table indexed by coalition mask; entry 0
    /// (the empty coalition) must be empty.
    pub fn new(n: usize, table: Vec<Vec<f64>>) -> Result<Self> {
        let s = Self::new_unbalanced(n, table)?;
        for c in 1..s.table.len() {
            check_budget(&s.table[c]).map_err(|e| {
                Error::InvalidMechanism(format!("coalition {c}: {e}"))
            })?;
        }
        Ok(Self { balanced: true, ..s })
    }

    /// Like [`Schedule::new`] but without the sum-to-one check. Such a
    /// schedule can be inspected but not run.
    pub fn new_unbalanced(n: usize, table: Vec<Vec<f64>>) -> Result<Self> {
        check_agents(n)?;
        if table.len() != 1usize << n {
            return Err(Error::InvalidMechanism(format!(
                "expected {} table entries for {n} agents, got {}",
                1usize << n,
                table.len()
            )));
        }
        if !table[0].is_empty() {
            return Err(Error::InvalidMechanism("the empty coalition must have no shares".into()));
        }
        for (c, entry) in table.iter().enumerate().skip(1) {
            if entry.len() != size(c as Coalition) {
                return Err(Error::InvalidMechanism(format!(
                    "coalition {c} has {} members but {} shares",
                    size(c as Coalition),
                    entry.len()
                )));
            }
            check_shares(entry)?;
        }
        let balanced = table.iter().skip(1).all(|e| check_budget(e).is_ok());
        Ok(Self { n, table, balanced, feasible: OnceLock::new() })
    }

    pub fn from_fn<F: FnMut(Coalition) -> Vec<f64>>(n: usize, mut f: F) -> Result<Self> {
        check_agents(n)?;
        let mut table = vec![Vec::new()];
        table.extend((1..(1u32 << n)).map(&mut f));
        Self::new(n, table)
    }

    /// Every coalition of size `k` uses `by_size(k)`.
    pub fn from_size_rule<F: FnMut(usize) -> Vec<f64>>(n: usize, mut by_size: F) -> Result<Self> {
        check_agents(n)?;
        let rules: Vec<Vec<f64>> = (0..=n).map(|k| if k == 0 { Vec::new() } else { by_size(k) }).collect();
        Self::from_fn(n, |c| rules[size(c)].clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shares(&self, c: Coalition) -> &[f64] {
        &self.table[c as usize]
    }

    /// Share of `agent` under coalition `c`; `agent` must belong to `c`.
    pub fn share(&self, c: Coalition, agent: usize) -> f64 {
        self.table[c as usize][position(c, agent)]
    }

    /// Length-`n` vector with member shares and 1 for every non-member.
    pub fn padded(&self, c: Coalition) -> Vec<f64> {
        let mut out = vec![1.0; self.n];
        for (i, s) in members(c).zip(&self.table[c as usize]) {
            out[i] = *s;
        }
        out
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    /// Whether shares never drop when a coalition loses a member.
    pub fn is_feasible(&self) -> bool {
        *self.feasible.get_or_init(|| feasibility_check(self).is_empty())
    }

    pub fn to_json(&self) -> Result<String> {
        let map: BTreeMap<String, &Vec<f64>> = self
            .table
            .iter()
            .enumerate()
            .skip(1)
            .map(|(c, e)| (c.to_string(), e))
            .collect();
        Ok(serde_json::to_string_pretty(&map)?)
    }

    /// Parses the JSON object form: decimal coalition masks (bit 0 is the
    /// first agent) mapped to member shares in ascending agent order.
    pub fn from_json(s: &str) -> Result<Self> {
        let map: BTreeMap<String, Vec<f64>> = serde_json::from_str(s)?;
        let mut entries = Vec::with_capacity(map.len());
        for (k, v) in map {
            let c: Coalition = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidMechanism(format!("bad coalition key `{k}`")))?;
            if c == 0 {
                return Err(Error::InvalidMechanism("coalition 0 is empty".into()));
            }
            entries.push((c, v));
        }
        let top = entries.iter().map(|(c, _)| *c).max().ok_or_else(|| {
            Error::InvalidMechanism("schedule has no coalitions".into())
        })?;
        let n = (32 - top.leading_zeros()) as usize;
        check_agents(n)?;
        let mut table: Vec<Option<Vec<f64>>> = vec![None; 1usize << n];
        table[0] = Some(Vec::new());
        for (c, v) in entries {
            table[c as usize] = Some(v);
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(c, e)| e.ok_or_else(|| Error::InvalidMechanism(format!("coalition {c} is missing"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, table)
    }
}

/// Serial cost sharing: every size-`k` coalition splits the cost equally.
pub fn scs_schedule(n: usize) -> Result<Schedule> {
    Schedule::from_size_rule(n, |k| vec![1.0 / k as f64; k])
}

/// One monotonicity breach: removing `removed` from `coalition` lowered the
/// share of `agent` from `before` to `after`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub coalition: Coalition,
    pub removed: usize,
    pub agent: usize,
    pub before: f64,
    pub after: f64,
}

/// Lists every pair `T`, `T \ {r}` under which a remaining agent's share
/// decreases.
pub fn feasibility_check(s: &Schedule) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in 1..(1u32 << s.n) {
        if size(t) < 2 {
            continue;
        }
        for removed in members(t) {
            let sub = t & !(1 << removed);
            for agent in members(sub) {
                let before = s.share(t, agent);
                let after = s.share(sub, agent);
                if after < before - MONOTONE_TOLERANCE {
                    out.push(Violation { coalition: t, removed, agent, before, after });
                }
            }
        }
    }
    out
}

/// Build decision, consumer set and payments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub built: bool,
    pub consumers: Coalition,
    pub payments: Vec<f64>,
}

impl Outcome {
    pub fn not_built(n: usize) -> Self {
        Self { built: false, consumers: 0, payments: vec![0.0; n] }
    }

    pub fn consumer_count(&self) -> usize {
        size(self.consumers)
    }

    pub fn consumer_indices(&self) -> Vec<usize> {
        members(self.consumers).collect()
    }

    pub fn is_consumer(&self, agent: usize) -> bool {
        self.consumers & (1 << agent) != 0
    }

    /// Utility `v_i - p_i` of a consumer, 0 otherwise.
    pub fn utility(&self, profile: &[f64], agent: usize) -> f64 {
        if self.is_consumer(agent) {
            profile[agent] - self.payments[agent]
        } else {
            0.0
        }
    }

    /// Number of consumers, or their total utility.
    pub fn objective(&self, profile: &[f64], objective: Objective) -> f64 {
        match objective {
            Objective::Consumers => self.consumer_count() as f64,
            Objective::Welfare => members(self.consumers)
                .map(|i| profile[i] - self.payments[i])
                .sum(),
        }
    }
}

/// Runs the removal process: starting from everyone, drop every agent whose
/// value is strictly below their current share, until nobody objects.
///
/// Returns the surviving coalition (0 when everyone left) and the number of
/// rounds that removed someone. No monotonicity is assumed of `share`.
pub fn iterative_removal<F>(n: usize, share: F, profile: &[f64]) -> (Coalition, usize)
where
    F: Fn(Coalition, usize) -> f64,
{
    let mut s = full_coalition(n);
    let mut rounds = 0;
    while s != 0 {
        let refusers = members(s)
            .filter(|&i| profile[i] < share(s, i))
            .fold(0, |acc, i| acc | (1 << i));
        if refusers == 0 {
            break;
        }
        s &= !refusers;
        rounds += 1;
    }
    (s, rounds)
}

fn outcome_for(s: &Schedule, c: Coalition) -> Outcome {
    if c == 0 {
        return Outcome::not_built(s.n);
    }
    let mut payments = vec![0.0; s.n];
    for (i, p) in members(c).zip(s.shares(c)) {
        payments[i] = *p;
    }
    Outcome { built: true, consumers: c, payments }
}

/// Builds iff every agent accepts their fixed share; everyone consumes.
pub fn run_unanimous(shares: &CostShareVector, profile: &[f64]) -> Result<Outcome> {
    let n = shares.len();
    check_profile(profile, n)?;
    if profile.iter().zip(shares.as_slice()).all(|(v, c)| v >= c) {
        Ok(Outcome { built: true, consumers: full_coalition(n), payments: shares.as_slice().to_vec() })
    } else {
        Ok(Outcome::not_built(n))
    }
}

/// Serves the largest coalition that unanimously approves its shares.
pub fn run_largest_unanimous(s: &Schedule, profile: &[f64]) -> Result<Outcome> {
    check_profile(profile, s.n)?;
    if !s.is_balanced() {
        return Err(Error::InvalidMechanism("schedule shares do not sum to 1".into()));
    }
    if !s.is_feasible() {
        return Err(Error::InvalidMechanism(
            "schedule is not monotone; iterative removal need not find the largest approved coalition".into(),
        ));
    }
    Ok(run_schedule_as_is(s, profile))
}

/// Iterative removal on any schedule, monotone or not.
pub fn run_schedule_as_is(s: &Schedule, profile: &[f64]) -> Outcome {
    let (c, _) = iterative_removal(s.n, |c, i| s.share(c, i), profile);
    outcome_for(s, c)
}

/// Asks agents in index order to pay the whole cost. Refusers leave; the
/// first agent whose value reaches `offer` pays 1 and everyone after them
/// consumes for free. An `offer` below 1 serves as the acceptance threshold
/// for smoothed two-point priors, whose upper peak never quite reaches 1.
pub fn run_sequential_offer(profile: &[f64], offer: f64) -> Result<Outcome> {
    let n = profile.len();
    check_profile(profile, n)?;
    let Some(first) = profile.iter().position(|&v| v >= offer) else {
        return Ok(Outcome::not_built(n));
    };
    let mut payments = vec![0.0; n];
    payments[first] = 1.0;
    let consumers = full_coalition(n) & !((1u32 << first) - 1);
    Ok(Outcome { built: true, consumers, payments })
}

/// [`run_sequential_offer`] with the full cost as the offer.
pub fn run_sequential_unit_offer(profile: &[f64]) -> Result<Outcome> {
    run_sequential_offer(profile, 1.0)
}

/// Largest gain `agent` can obtain by reporting one of `deviations` instead
/// of their true value, the others reporting truthfully. Returns 0 for an
/// empty deviation list.
pub fn strategyproofness_probe(
    s: &Schedule,
    profile: &[f64],
    agent: usize,
    deviations: &[f64],
) -> Result<f64> {
    if agent >= s.n {
        return Err(Error::InvalidArgument(format!("agent {agent} out of range for {} agents", s.n)));
    }
    let truth = run_largest_unanimous(s, profile)?.utility(profile, agent);
    let mut report = profile.to_vec();
    let mut best = f64::NEG_INFINITY;
    for &d in deviations {
        report[agent] = d;
        let lie = run_largest_unanimous(s, &report)?;
        best = best.max(lie.utility(profile, agent) - truth);
    }
    Ok(if deviations.is_empty() { 0.0 } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_iteration() {
        assert_eq!(members(0b1011).collect::<Vec<_>>(), vec![0, 1, 3]);
        assert_eq!(position(0b1011, 3), 2);
        assert_eq!(full_coalition(4), 0b1111);
    }

    #[test]
    fn cost_share_vector_validation() {
        assert!(CostShareVector::new(vec![0.5, 0.5]).is_ok());
        assert!(CostShareVector::new(vec![0.5, 0.4]).is_err());
        assert!(CostShareVector::new(vec![1.5, -0.5]).is_err());
        assert!(matches!(CostShareVector::new(vec![]), Err(Error::EmptyCoalition)));
    }

    #[test]
    fn cec() {
        assert_eq!(cec_shares(4).as_slice(), &[0.25; 4]);
        assert_eq!(cec_shares(1).as_slice(), &[1.0]);
        assert!((cec_shares(3).as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unanimous_examples() {
        let third = cec_shares(3);
        let o = run_unanimous(&third, &[0.5, 0.4, 0.35]).unwrap();
        assert!(o.built);
        assert_eq!(o.consumer_count(), 3);
        assert!(o.payments.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));

        let o = run_unanimous(&third, &[0.5, 0.2, 0.9]).unwrap();
        assert_eq!(o, Outcome::not_built(3));

        let lone = CostShareVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let o = run_unanimous(&lone, &[1.0, 0.0, 0.0]).unwrap();
        assert!(o.built);
        assert_eq!(o.payments, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn scs_examples() {
        let s = scs_schedule(2).unwrap();
        assert_eq!(s.shares(0b11), &[0.5, 0.5]);
        assert_eq!(s.shares(0b01), &[1.0]);
        assert_eq!(s.shares(0b10), &[1.0]);
        assert_eq!(scs_schedule(3).unwrap().shares(0b101), &[0.5, 0.5]);
        assert_eq!(scs_schedule(10).unwrap().shares(full_coalition(10)), &[0.1; 10]);
        assert!(feasibility_check(&scs_schedule(5).unwrap()).is_empty());
    }

    #[test]
    fn largest_unanimous_examples() {
        let s = scs_schedule(5).unwrap();
        let o = run_largest_unanimous(&s, &[0.9, 0.5, 0.5, 0.25, 0.0]).unwrap();
        assert_eq!(o.consumer_indices(), vec![0, 1, 2, 3]);
        assert_eq!(o.payments, vec![0.25, 0.25, 0.25, 0.25, 0.0]);

        let s = scs_schedule(4).unwrap();
        let o = run_largest_unanimous(&s, &[0.5, 0.5, 0.25, 0.0]).unwrap();
        assert_eq!(o.consumer_indices(), vec![0, 1]);
        assert_eq!(o.payments, vec![0.5, 0.5, 0.0, 0.0]);

        let o = run_largest_unanimous(&s, &[0.0; 4]).unwrap();
        assert!(!o.built);
    }

    #[test]
    fn removal_runs_at_most_n_rounds() {
        let s = scs_schedule(4).unwrap();
        let (c, rounds) = iterative_removal(4, |c, i| s.share(c, i), &[0.6, 0.5, 0.3, 0.0]);
        assert_eq!(c, 0b0011);
        assert_eq!(rounds, 2);
    }

    #[test]
    fn sequential_examples() {
        let o = run_sequential_unit_offer(&[1.0, 0.5, 0.0]).unwrap();
        assert_eq!(o.consumer_indices(), vec![0, 1, 2]);
        assert_eq!(o.payments, vec![1.0, 0.0, 0.0]);

        let o = run_sequential_unit_offer(&[0.0, 0.0, 1.0, 0.2, 0.9]).unwrap();
        assert_eq!(o.consumer_indices(), vec![2, 3, 4]);
        assert_eq!(o.payments, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(5 - o.consumer_count(), 2);

        assert!(!run_sequential_unit_offer(&[0.9, 0.99, 0.5]).unwrap().built);
    }

    #[test]
    fn constructed_violation() {
        let table = vec![vec![], vec![0.4], vec![1.0], vec![0.5, 0.5]];
        let s = Schedule::new_unbalanced(2, table).unwrap();
        let v = feasibility_check(&s);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].coalition, v[0].removed, v[0].agent), (0b11, 1, 0));
        assert_eq!((v[0].before, v[0].after), (0.5, 0.4));
        assert!(run_largest_unanimous(&s, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn infeasible_schedule_is_refused() {
        let table = vec![vec![], vec![1.0], vec![1.0], vec![0.5, 0.5], vec![1.0], vec![0.5, 0.5], vec![0.5, 0.5], vec![0.6, 0.2, 0.2]];
        let s = Schedule::new(3, table).unwrap();
        assert!(!s.is_feasible());
        assert!(matches!(run_largest_unanimous(&s, &[0.5; 3]), Err(Error::InvalidMechanism(_))));
        assert!(run_schedule_as_is(&s, &[0.7, 0.5, 0.5]).built);
    }

    #[test]
    fn probe_examples() {
        let s = scs_schedule(3).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        assert!(strategyproofness_probe(&s, &[0.6, 0.6, 0.1], 2, &grid).unwrap() <= 0.0);
        assert_eq!(strategyproofness_probe(&s, &[0.6, 0.6, 0.1], 0, &[0.6]).unwrap(), 0.0);

        let s = scs_schedule(2).unwrap();
        let gain = strategyproofness_probe(&s, &[0.9, 0.9], 0, &[0.0]).unwrap();
        assert!((gain + 0.4).abs() < 1e-12);
    }

    #[test]
    fn bad_profiles() {
        let s = scs_schedule(2).unwrap();
        assert!(run_largest_unanimous(&s, &[0.5]).is_err());
        assert!(matches!(run_largest_unanimous(&s, &[0.5, 1.2]), Err(Error::Domain { .. })));
    }

    #[test]
    fn json_format() {
        let s = scs_schedule(2).unwrap();
        let text = s.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["3"], serde_json::json!([0.5, 0.5]));
        assert_eq!(v["2"], serde_json::json!([1.0]));
        assert_eq!(Schedule::from_json(&text).unwrap(), s);

        assert!(Schedule::from_json(r#"{"1": [1.0], "3": [0.5, 0.5]}"#).is_err());
        assert!(Schedule::from_json(r#"{"1": [1.0], "2": [1.0], "3": [0.7, 0.5]}"#).is_err());
    }

    #[test]
    fn welfare_objective() {
        let s = scs_schedule(3).unwrap();
        let profile = [0.9, 0.6, 0.1];
        let o = run_largest_unanimous(&s, &profile).unwrap();
        assert_eq!(o.consumer_indices(), vec![0, 1]);
        assert!((o.objective(&profile, Objective::Welfare) - 0.5).abs() < 1e-12);
        assert_eq!(o.objective(&profile, Objective::Consumers), 2.0);
    }
}

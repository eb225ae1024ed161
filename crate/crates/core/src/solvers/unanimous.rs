use serde::Serialize;

use super::{check_n, GridSpec, OfferTables};
use crate::dist::ValuationDistribution;
use crate::error::Result;
use crate::mechanisms::CostShareVector;
use crate::objective::Objective;

/// Optimal grid shares for a unanimous mechanism and their expected objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnanimousSolution {
    pub shares: CostShareVector,
    pub value: f64,
    pub h: usize,
    pub objective: Objective,
}

/// `B(k, u, m)` for fixed `(k, m)` as a function of the accumulated payoff
/// `u`: the upper envelope of lines `slope * u + intercept`, where `slope`
/// is the probability that the remaining agents all accept and `intercept`
/// their expected payoff.
#[derive(Debug, Clone, Copy)]
struct Line {
    slope: f64,
    intercept: f64,
    offer: u32,
    parent: u32,
}

impl Line {
    fn at(&self, u: f64) -> f64 {
        self.slope * u + self.intercept
    }
}

/// Where line `b` (steeper) overtakes line `a`.
fn crossing(a: &Line, b: &Line) -> f64 {
    (a.intercept - b.intercept) / (b.slope - a.slope)
}

/// Upper envelope of `lines` restricted to `u` in `[0, umax]`, ordered by
/// increasing slope. Among identical lines the earliest one (smallest offer)
/// survives.
fn envelope(mut lines: Vec<Line>, umax: f64) -> Vec<Line> {
    lines.sort_by(|a, b| {
        a.slope
            .total_cmp(&b.slope)
            .then(b.intercept.total_cmp(&a.intercept))
    });
    lines.dedup_by(|later, kept| later.slope == kept.slope);

    let mut hull: Vec<Line> = Vec::with_capacity(lines.len());
    for line in lines {
        while let [.., a, b] = hull.as_slice() {
            if crossing(a, &line) <= crossing(a, b) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(line);
    }

    // Drop lines that are only maximal outside [0, umax].
    let mut out = Vec::with_capacity(hull.len());
    for (i, line) in hull.iter().enumerate() {
        let from = if i == 0 { f64::NEG_INFINITY } else { crossing(&hull[i - 1], line) };
        let to = if i + 1 == hull.len() { f64::INFINITY } else { crossing(line, &hull[i + 1]) };
        if to > 0.0 && from < umax {
            out.push(*line);
        }
    }
    out
}

/// Optimal unanimous shares by dynamic programming over agents and money.
///
/// `B(k, u, m) = max_{0 <= c <= m} R(c) B(k - 1, u + p(c), m - c)` with
/// `B(1, u, m) = R(m) (u + p(m))`, where `R` is the reliability and `p(c)`
/// the per-consumer payoff (1, or `w(c)` for welfare). The dependence on the
/// accumulated payoff `u` is kept exact as an envelope of lines, so only the
/// offers and the money are discretized.
pub fn solve_optimal_unanimous(
    d: &ValuationDistribution,
    n: usize,
    grid: GridSpec,
    objective: Objective,
) -> Result<UnanimousSolution> {
    check_n(n)?;
    let h = grid.h();
    let tables = OfferTables::new(d, grid, objective);
    let (rel, payoff) = (&tables.reliability, &tables.payoff);
    let umax = n as f64;

    // levels[k - 1][m] holds the envelope for k agents raising m / h.
    let mut levels: Vec<Vec<Vec<Line>>> = Vec::with_capacity(n);
    levels.push(
        (0..=h)
            .map(|m| {
                vec![Line { slope: rel[m], intercept: rel[m] * payoff[m], offer: m as u32, parent: 0 }]
            })
            .collect(),
    );
    for _ in 2..=n {
        let prev = levels.last().expect("level 1 exists");
        let next: Vec<Vec<Line>> = (0..=h)
            .map(|m| {
                let mut cands = Vec::new();
                for c in 0..=m {
                    for (idx, l) in prev[m - c].iter().enumerate() {
                        cands.push(Line {
                            slope: rel[c] * l.slope,
                            intercept: rel[c] * (l.slope * payoff[c] + l.intercept),
                            offer: c as u32,
                            parent: idx as u32,
                        });
                    }
                }
                envelope(cands, umax)
            })
            .collect();
        levels.push(next);
    }

    let top = &levels[n - 1][h];
    let mut best = 0;
    for (i, l) in top.iter().enumerate() {
        if l.at(0.0) > top[best].at(0.0) {
            best = i;
        }
    }
    let value = top[best].at(0.0);

    let mut offers = Vec::with_capacity(n);
    let (mut m, mut idx) = (h, best);
    for k in (1..=n).rev() {
        let line = levels[k - 1][m][idx];
        offers.push(line.offer as usize);
        m -= line.offer as usize;
        idx = line.parent as usize;
    }
    debug_assert_eq!(m, 0);
    let shares = CostShareVector::new(offers.iter().map(|&j| grid.point(j)).collect())?;
    Ok(UnanimousSolution { shares, value, h, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(slope: f64, intercept: f64, offer: u32) -> Line {
        Line { slope, intercept, offer, parent: 0 }
    }

    #[test]
    fn envelope_drops_dominated_lines() {
        let lines = vec![line(0.0, 1.0, 0), line(1.0, 0.0, 1), line(0.5, 0.2, 2), line(2.0, -5.0, 3)];
        let env = envelope(lines, 2.0);
        let offers: Vec<u32> = env.iter().map(|l| l.offer).collect();
        // (0.5, 0.2) is below max(1, u) everywhere; (2, -5) only wins past u = 5.
        assert_eq!(offers, vec![0, 1]);
    }

    #[test]
    fn envelope_keeps_first_of_duplicates() {
        let env = envelope(vec![line(0.5, 0.5, 3), line(0.5, 0.5, 7)], 1.0);
        assert_eq!(env.len(), 1);
        assert_eq!(env[0].offer, 3);
    }

    #[test]
    fn uniform_two_agents_split_evenly() {
        let s = solve_optimal_unanimous(&ValuationDistribution::uniform(), 2, GridSpec::default(), Objective::Consumers)
            .unwrap();
        assert_eq!(s.shares.as_slice(), &[0.5, 0.5]);
        assert!((s.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_agent_gets_nothing() {
        let s = solve_optimal_unanimous(&ValuationDistribution::uniform(), 1, GridSpec::default(), Objective::Welfare)
            .unwrap();
        assert_eq!(s.shares.as_slice(), &[1.0]);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn log_concave_prior_gives_equal_shares() {
        let d = ValuationDistribution::normal(0.5, 0.1).unwrap();
        let s = solve_optimal_unanimous(&d, 4, GridSpec::default(), Objective::Consumers).unwrap();
        assert_eq!(s.shares.as_slice(), &[0.25; 4]);
    }
}

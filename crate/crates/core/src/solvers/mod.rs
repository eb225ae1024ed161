//! Grid dynamic programs over cost shares.
//!
//! Every continuous state coordinate (money still to raise, lower bounds,
//! offers) lives on the grid `{0, 1/H, ..., 1}`; maximizations scan grid
//! multiples only and break ties towards the smallest offer.

mod bound;
mod one_directional;
mod unanimous;

pub use bound::{upper_bound, welfare_cap, welfare_cap_table};
pub use one_directional::{solve_one_directional, OfferPolicy, OneDirectionalSolution};
pub use unanimous::{solve_optimal_unanimous, UnanimousSolution};

use serde::{Deserialize, Serialize};

use crate::dist::ValuationDistribution;
use crate::error::{Error, Result};
use crate::mechanisms::Schedule;
use crate::objective::Objective;

pub const DEFAULT_H: usize = 100;

/// Grid density: every state coordinate moves in steps of `1/h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    h: usize,
}

impl GridSpec {
    pub fn new(h: usize) -> Result<Self> {
        if !(10..=u16::MAX as usize).contains(&h) {
            return Err(Error::InvalidArgument(format!("grid density H must lie in 10..=65535, got {h}")));
        }
        Ok(Self { h })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.h as f64
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { h: DEFAULT_H }
    }
}

/// Per-offer quantities on the grid, indexed by `j` for offer `j / h`.
pub(crate) struct OfferTables {
    pub reliability: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Payoff of an agent who accepts the offer: 1 or `w(j / h)`.
    pub payoff: Vec<f64>,
}

impl OfferTables {
    pub fn new(d: &ValuationDistribution, grid: GridSpec, objective: Objective) -> Self {
        let h = grid.h();
        let reliability = d.reliability_grid(h);
        let cdf = (0..=h).map(|j| d.cdf(grid.point(j))).collect();
        let payoff = match objective {
            Objective::Consumers => vec![1.0; h + 1],
            Objective::Welfare => d.welfare_grid(h),
        };
        Self { reliability, cdf, payoff }
    }
}

pub(crate) fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("at least one agent is required".into()))
    } else {
        Ok(())
    }
}

/// Treats every coalition of size `k` as a stand-alone unanimous problem and
/// uses its optimal grid shares. The optimum is symmetric under permuting
/// agents; members receive the shares in increasing order of agent index,
/// smallest share first.
///
/// The result need not be monotone.
pub fn myopic_schedule(
    d: &ValuationDistribution,
    n: usize,
    grid: GridSpec,
    objective: Objective,
) -> Result<Schedule> {
    check_n(n)?;
    let by_size = (1..=n)
        .map(|k| {
            solve_optimal_unanimous(d, k, grid, objective).map(|s| {
                let mut shares = s.shares.as_slice().to_vec();
                shares.sort_by(f64::total_cmp);
                shares
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Schedule::from_size_rule(n, |k| by_size[k - 1].clone())
}

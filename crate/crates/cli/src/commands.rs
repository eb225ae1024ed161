use std::path::Path;

use anyhow::{bail, Result};
use serde::Serialize;

use pubshare_core::eval::{mc_estimate, AsIs, EstimateRow, SequentialOffer};
use pubshare_core::mechanisms::{cec_shares, scs_schedule};
use pubshare_core::neural::{initial_params, network_to_schedule, train, CostKind, Init, NetworkParams, TrainConfig};
use pubshare_core::solvers::{
    myopic_schedule, solve_one_directional, solve_optimal_unanimous, upper_bound, welfare_cap_table, OfferPolicy,
    DEFAULT_H,
};
use pubshare_core::{GridSpec, Objective, Schedule, ValuationDistribution};

use crate::args::{Common, MechSpec, Solver};
use crate::output::{emit, read_text, write_text, RunInfo};

pub const DEFAULT_N: usize = 5;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 100_000;

impl Common {
    pub fn dist(&self) -> ValuationDistribution {
        self.dist.unwrap_or_else(ValuationDistribution::uniform)
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(DEFAULT_N)
    }

    pub fn objective(&self) -> Objective {
        self.objective.unwrap_or(Objective::Consumers)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.h.unwrap_or(DEFAULT_H))?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }
}

/// Agent count of a file-based mechanism, checked against `--n` if given.
fn agree(common: &Common, from_file: usize, path: &Path) -> Result<usize> {
    match common.n {
        Some(n) if n != from_file => bail!("{} is for n = {from_file}, but --n {n} was given", path.display()),
        _ => Ok(from_file),
    }
}

pub fn eval(common: &Common, mech: &MechSpec, offer: f64) -> Result<()> {
    let d = common.dist();
    let (obj, samples, seed) = (common.objective(), common.samples(), common.seed());
    let (label, n, e) = match mech {
        MechSpec::Scs => {
            let n = common.n();
            ("scs".to_string(), n, mc_estimate(&scs_schedule(n)?, &d, samples, seed, obj)?)
        }
        MechSpec::Cec => {
            let n = common.n();
            ("cec".to_string(), n, mc_estimate(&cec_shares(n), &d, samples, seed, obj)?)
        }
        MechSpec::Seq => {
            let n = common.n();
            if !(0.0..=1.0).contains(&offer) {
                bail!("--offer must lie in [0, 1], got {offer}");
            }
            (format!("seq:{offer}"), n, mc_estimate(&SequentialOffer { n, offer }, &d, samples, seed, obj)?)
        }
        MechSpec::Schedule(path) => {
            let s = Schedule::from_json(&read_text(path)?)?;
            let n = agree(common, s.n(), path)?;
            ("schedule".to_string(), n, mc_estimate(&s, &d, samples, seed, obj)?)
        }
        MechSpec::Network(path) => {
            let p = NetworkParams::from_json(&read_text(path)?)?;
            let n = agree(common, p.n(), path)?;
            let s = network_to_schedule(&p)?;
            ("network".to_string(), n, mc_estimate(&AsIs(&s), &d, samples, seed, obj)?)
        }
        MechSpec::Policy(path) => {
            let policy = OfferPolicy::from_json(&read_text(path)?)?;
            let n = agree(common, policy.n(), path)?;
            ("policy".to_string(), n, mc_estimate(&policy, &d, samples, seed, obj)?)
        }
    };
    let row = EstimateRow::new(&label, &d, n, obj, &e);
    let info = RunInfo { seed: Some(seed), h: None, samples: Some(samples) };
    emit(common.out.as_deref(), &info, &[row])
}

#[derive(Debug, Serialize)]
struct SolveRow {
    solver: &'static str,
    distribution: String,
    n: usize,
    objective: Objective,
    h: usize,
    value: f64,
    stderr: Option<f64>,
    shares: String,
}

fn join(shares: &[f64]) -> String {
    shares.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn solve(common: &Common, solver: Solver, artifact: Option<&Path>) -> Result<()> {
    let d = common.dist();
    let (n, obj, grid) = (common.n(), common.objective(), common.grid()?);
    let row = |solver, n, value, stderr, shares| SolveRow {
        solver,
        distribution: d.to_string(),
        n,
        objective: obj,
        h: grid.h(),
        value,
        stderr,
        shares,
    };
    let mut info = RunInfo { seed: None, h: Some(grid.h()), samples: None };
    let rows = match solver {
        Solver::Unanimous => {
            let s = solve_optimal_unanimous(&d, n, grid, obj)?;
            if let Some(path) = artifact {
                write_text(path, &serde_json::to_string_pretty(&s.shares)?)?;
            }
            vec![row("unanimous", n, s.value, None, join(s.shares.as_slice()))]
        }
        Solver::OneDirectional => {
            let s = solve_one_directional(&d, n, grid, obj)?;
            if let Some(path) = artifact {
                write_text(path, &s.policy.to_json()?)?;
            }
            vec![row("one-directional", n, s.value, None, String::new())]
        }
        Solver::Myopic => {
            let s = myopic_schedule(&d, n, grid, obj)?;
            if let Some(path) = artifact {
                write_text(path, &s.to_json()?)?;
            }
            let (samples, seed) = (common.samples(), common.seed());
            info.seed = Some(seed);
            info.samples = Some(samples);
            let e = mc_estimate(&AsIs(&s), &d, samples, seed, obj)?;
            let full = s.shares(pubshare_core::mechanisms::full_coalition(n));
            vec![row("myopic", n, e.mean, Some(e.stderr), join(full))]
        }
        Solver::Cap => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            let table = welfare_cap_table(&d, n, grid, obj);
            (1..=n).map(|t| row("cap", t, table[t], None, String::new())).collect()
        }
    };
    emit(common.out.as_deref(), &info, &rows)
}

#[derive(Debug, Serialize)]
struct BoundRow {
    distribution: String,
    n: usize,
    objective: Objective,
    h: usize,
    bound: f64,
}

pub fn bound(common: &Common) -> Result<()> {
    let d = common.dist();
    let (n, obj, grid) = (common.n(), common.objective(), common.grid()?);
    let b = upper_bound(&d, n, grid, obj)?;
    let row = BoundRow { distribution: d.to_string(), n, objective: obj, h: grid.h(), bound: b };
    emit(common.out.as_deref(), &RunInfo { seed: None, h: Some(grid.h()), samples: None }, &[row])
}

pub struct TrainFlags<'a> {
    pub init: Option<Init>,
    pub rounds: Option<usize>,
    pub cost: Option<CostKind>,
    pub config: Option<&'a Path>,
    pub checkpoint: Option<&'a Path>,
}

/// File config first, then command-line overrides.
pub fn train_config(common: &Common, flags: &TrainFlags) -> Result<TrainConfig> {
    let mut config = match flags.config {
        Some(path) => TrainConfig::from_json(&read_text(path)?)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = common.objective {
        config.objective = v;
    }
    if let Some(v) = common.seed {
        config.seed = v;
    }
    if let Some(v) = common.h {
        config.grid_h = v;
    }
    if let Some(v) = common.samples {
        config.eval_samples = v;
    }
    if let Some(v) = flags.init {
        config.init = v;
    }
    if let Some(v) = flags.rounds {
        config.rounds = v;
    }
    if let Some(v) = flags.cost {
        config.cost = v;
    }
    config.validate()?;
    Ok(config)
}

pub fn train_cmd(common: &Common, flags: &TrainFlags) -> Result<()> {
    let config = train_config(common, flags)?;
    let d = common.dist();
    let n = common.n();
    let (p, report) = initial_params(&d, n, &config)?;
    if let Some(r) = report {
        log::info!("supervised init: loss {:.3e} after {} iterations (converged {})", r.loss, r.iterations, r.converged);
    }
    let outcome = train(p, &d, &config)?;
    match outcome.best_round {
        Some(r) => log::info!("best round {r}: estimate {:.4}", outcome.history[r].estimate),
        None => log::warn!("no round met the monotonicity tolerance; keeping the final network"),
    }
    if let Some(path) = flags.checkpoint {
        write_text(path, &outcome.params.to_json()?)?;
    }
    let info = RunInfo { seed: Some(config.seed), h: Some(config.grid_h), samples: Some(config.eval_samples) };
    emit(common.out.as_deref(), &info, &outcome.history)
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cost::{batch_cost, monotonicity_penalty, penalty_pairs, prepare_batch, sample_batch, CostKind};
use super::network::{network_to_schedule, parameter_count, NetworkParams};
use crate::dist::ValuationDistribution;
use crate::error::{Error, Result};
use crate::eval::{mc_estimate, AsIs, Estimate};
use crate::mechanisms::{scs_schedule, Schedule};
use crate::objective::Objective;
use crate::solvers::{myopic_schedule, solve_one_directional, GridSpec};

/// Penalty below which a network counts as monotone when picking the best
/// parameters.
pub const FEASIBLE_PENALTY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// Xavier normal weights, bias 0.1.
    #[default]
    Random,
    /// Mimic serial cost sharing.
    Scs,
    /// Mimic the one-directional dynamic program.
    Dp,
    /// Mimic the myopic schedule.
    Myopic,
}

impl std::str::FromStr for Init {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Self::Random),
            "scs" => Ok(Self::Scs),
            "dp" => Ok(Self::Dp),
            "myopic" => Ok(Self::Myopic),
            other => Err(format!("unknown init `{other}` (expected random, scs, dp or myopic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub rounds: usize,
    pub batches_per_round: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub penalty_weight: f64,
    pub seed: u64,
    pub objective: Objective,
    pub init: Init,
    pub cost: CostKind,
    /// Grid density for the dynamic-program and myopic targets.
    pub grid_h: usize,
    /// Supervision stops once the mean squared error drops below this.
    pub supervise_tolerance: f64,
    pub supervise_iterations: usize,
    pub eval_samples: usize,
    pub eval_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rounds: 200,
            batches_per_round: 5,
            batch_size: 128,
            step_size: 1e-3,
            penalty_weight: 1000.0,
            seed: 0,
            objective: Objective::Consumers,
            init: Init::Random,
            cost: CostKind::Porf,
            grid_h: 100,
            supervise_tolerance: 1e-5,
            supervise_iterations: 20_000,
            eval_samples: 10_000,
            eval_seed: 0x5eed,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step size must be positive, got {}", self.step_size));
        }
        if !(self.penalty_weight > 0.0 && self.penalty_weight.is_finite()) {
            return bad(format!("penalty weight must be positive, got {}", self.penalty_weight));
        }
        if self.batches_per_round == 0 || self.batch_size == 0 || self.eval_samples == 0 {
            return bad("batch counts and evaluation samples must be positive".into());
        }
        if self.supervise_tolerance.is_nan() || self.supervise_tolerance <= 0.0 {
            return bad("supervision tolerance must be positive".into());
        }
        GridSpec::new(self.grid_h)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Adaptive moment estimation.
#[derive(Debug, Clone)]
pub struct Adam {
    step_size: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(len: usize, step_size: f64) -> Self {
        Self { step_size, first: vec![0.0; len], second: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.first).zip(&mut self.second) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= self.step_size * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisionReport {
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Mean squared error between the network's outputs and `target`'s padded
/// shares over all coalitions; adds the gradient to `grad` if given.
pub fn supervision_loss(p: &NetworkParams, target: &Schedule, mut grad: Option<&mut [f64]>) -> f64 {
    let n = p.n();
    let count = ((1usize << n) - 1) * n;
    let mut loss = 0.0;
    for c in 1..1u32 << n {
        let trace = p.trace(c);
        let want = target.padded(c);
        let diff: Vec<f64> = trace.out.iter().zip(&want).map(|(a, b)| a - b).collect();
        loss += diff.iter().map(|d| d * d).sum::<f64>();
        if let Some(g) = grad.as_deref_mut() {
            let d_out: Vec<f64> = diff.iter().map(|d| 2.0 * d / count as f64).collect();
            p.backward(&trace, &d_out, g);
        }
    }
    loss / count as f64
}

/// Trains `p` to reproduce `target`. Returns the lowest-loss parameters
/// seen; `converged` is false if the tolerance was never reached.
pub fn supervise(p: NetworkParams, target: &Schedule, config: &TrainConfig) -> Result<(NetworkParams, SupervisionReport)> {
    if target.n() != p.n() {
        return Err(Error::InvalidArgument(format!(
            "target has {} agents, network {}",
            target.n(),
            p.n()
        )));
    }
    let mut p = p;
    let mut adam = Adam::new(parameter_count(p.n()), config.step_size);
    let mut grad = vec![0.0; parameter_count(p.n())];
    let mut best = (f64::INFINITY, p.clone());
    let mut iterations = 0;
    while iterations < config.supervise_iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let loss = supervision_loss(&p, target, Some(&mut grad));
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("supervision loss became {loss} at iteration {iterations}")));
        }
        if loss < best.0 {
            best = (loss, p.clone());
        }
        if loss < config.supervise_tolerance {
            break;
        }
        adam.step(p.values_mut(), &grad);
        iterations += 1;
    }
    if iterations == config.supervise_iterations {
        let loss = supervision_loss(&p, target, None);
        if loss < best.0 {
            best = (loss, p);
        }
    }
    let converged = best.0 < config.supervise_tolerance;
    if !converged {
        log::warn!("supervision stopped at loss {:.3e} after {iterations} iterations", best.0);
    }
    Ok((best.1, SupervisionReport { loss: best.0, iterations, converged }))
}

/// The schedule the `init` option imitates, if any.
pub fn init_target(
    init: Init,
    d: &ValuationDistribution,
    n: usize,
    config: &TrainConfig,
) -> Result<Option<Schedule>> {
    let grid = GridSpec::new(config.grid_h)?;
    Ok(match init {
        Init::Random => None,
        Init::Scs => Some(scs_schedule(n)?),
        Init::Dp => Some(solve_one_directional(d, n, grid, config.objective)?.policy.as_schedule()?),
        Init::Myopic => Some(myopic_schedule(d, n, grid, config.objective)?),
    })
}

/// Xavier initialization (seeded by `config.seed`), then supervision
/// towards the configured target.
pub fn initial_params(
    d: &ValuationDistribution,
    n: usize,
    config: &TrainConfig,
) -> Result<(NetworkParams, Option<SupervisionReport>)> {
    config.validate()?;
    let p = NetworkParams::xavier(n, config.seed)?;
    match init_target(config.init, d, n, config)? {
        None => Ok((p, None)),
        Some(target) => {
            let (p, report) = supervise(p, &target, config)?;
            Ok((p, Some(report)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub round: usize,
    /// Expected nonconsumers, or expected welfare.
    pub estimate: f64,
    pub stderr: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best monotone parameters by the per-round estimate, or the final
    /// parameters if no round was monotone.
    pub params: NetworkParams,
    pub last: NetworkParams,
    pub history: Vec<HistoryEntry>,
    pub best_round: Option<usize>,
}

/// Fixed-seed Monte Carlo estimate of the network's mechanism: expected
/// nonconsumers for the consumer objective, expected welfare otherwise.
pub fn evaluate_network(p: &NetworkParams, d: &ValuationDistribution, config: &TrainConfig) -> Result<Estimate> {
    let schedule = network_to_schedule(p)?;
    let mut e = mc_estimate(&AsIs(&schedule), d, config.eval_samples, config.eval_seed, config.objective)?;
    if config.objective == Objective::Consumers {
        e.mean = p.n() as f64 - e.mean;
    }
    Ok(e)
}

fn better(objective: Objective, a: f64, b: f64) -> bool {
    match objective {
        Objective::Consumers => a < b,
        Objective::Welfare => a > b,
    }
}

/// Gradient descent on the configured cost, starting from `p`.
pub fn train(p: NetworkParams, d: &ValuationDistribution, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(parameter_count(n), config.step_size);
    let mut grad = vec![0.0; parameter_count(n)];
    let mut p = p;

    let record = |p: &NetworkParams, round: usize| -> Result<HistoryEntry> {
        let e = evaluate_network(p, d, config)?;
        Ok(HistoryEntry { round, estimate: e.mean, stderr: e.stderr, penalty: monotonicity_penalty(p) })
    };
    let first = record(&p, 0)?;
    let mut best = (first.penalty <= FEASIBLE_PENALTY).then(|| (first.estimate, 0, p.clone()));
    let mut history = vec![first];

    for round in 1..=config.rounds {
        for _ in 0..config.batches_per_round {
            let batch = sample_batch(d, n, config.batch_size, &mut rng);
            let prepared = prepare_batch(&p, &batch, config.cost, config.objective);
            let pairs = penalty_pairs(n, &mut rng);
            grad.iter_mut().for_each(|g| *g = 0.0);
            let c = batch_cost(&p, d, &prepared, &pairs, config.penalty_weight, Some(&mut grad));
            if !c.cost.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged(format!("cost became {} in round {round}", c.cost)));
            }
            adam.step(p.values_mut(), &grad);
        }
        let entry = record(&p, round)?;
        log::debug!("round {round}: estimate {:.4} penalty {:.2e}", entry.estimate, entry.penalty);
        if entry.penalty <= FEASIBLE_PENALTY && best.as_ref().is_none_or(|b| better(config.objective, entry.estimate, b.0)) {
            best = Some((entry.estimate, round, p.clone()));
        }
        history.push(entry);
    }
    let best_round = best.as_ref().map(|b| b.1);
    let params = best.map_or_else(|| p.clone(), |b| b.2);
    Ok(TrainOutcome { params, last: p, history, best_round })
}

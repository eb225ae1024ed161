use std::cell::OnceCell;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::network::{NetworkParams, Trace};
use crate::dist::ValuationDistribution;
use crate::mechanisms::{iterative_removal, members, size, Coalition};
use crate::objective::Objective;

/// Exhaustive penalty enumeration up to this many agents; sampled above.
pub const EXHAUSTIVE_PENALTY_AGENTS: usize = 10;
pub const SAMPLED_PENALTY_PAIRS: usize = 10_000;

/// How the singled-out agent's acceptance is mixed into the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// Analytic acceptance probability `1 - F(offer)`.
    #[default]
    Porf,
    /// `sigmoid(v_i - offer)` with a sampled `v_i`.
    Sigmoid,
}

impl std::str::FromStr for CostKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "porf" => Ok(Self::Porf),
            "sigmoid" => Ok(Self::Sigmoid),
            other => Err(format!("unknown cost `{other}` (expected porf or sigmoid)")),
        }
    }
}

/// An agent singled out together with a full profile. For the analytic cost
/// only the other agents' values matter.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchElement {
    pub agent: usize,
    pub profile: Vec<f64>,
}

pub fn sample_batch<R: Rng + ?Sized>(d: &ValuationDistribution, n: usize, size: usize, rng: &mut R) -> Vec<BatchElement> {
    (0..size)
        .map(|_| {
            let agent = rng.random_range(0..n);
            let profile = (0..n).map(|_| d.sample_one(rng)).collect();
            BatchElement { agent, profile }
        })
        .collect()
}

/// Outcome of the removal process with the singled-out agent forced in and
/// forced out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    pub agent: usize,
    /// Coalition reached when the agent never refuses; their offer is their
    /// share there.
    pub deciding: Coalition,
    /// Objective when they consume. For welfare only the other consumers'
    /// part; their own term depends on the offer.
    pub success: f64,
    /// Objective when they refuse.
    pub failure: f64,
    /// Their sampled value (used by the sigmoid cost only).
    pub value: f64,
}

/// Runs the removal process twice on the shares `out(coalition)` (padded
/// with ones), once with `element.agent` accepting everything and once with
/// them refusing everything. No monotonicity is assumed.
pub fn simulate<'a, F>(n: usize, out: F, element: &BatchElement, objective: Objective) -> Simulation
where
    F: Fn(Coalition) -> &'a [f64],
{
    let i = element.agent;
    let mut profile = element.profile.clone();
    let share = |c: Coalition, j: usize| out(c)[j];
    profile[i] = f64::INFINITY;
    let (deciding, _) = iterative_removal(n, share, &profile);
    profile[i] = f64::NEG_INFINITY;
    let (without, _) = iterative_removal(n, share, &profile);
    let served = |c: Coalition, skip: Option<usize>| -> f64 {
        match objective {
            Objective::Consumers => size(c) as f64,
            Objective::Welfare if c == 0 => 0.0,
            Objective::Welfare => members(c)
                .filter(|&j| Some(j) != skip)
                .map(|j| element.profile[j] - out(c)[j])
                .sum(),
        }
    };
    Simulation {
        agent: i,
        deciding,
        success: served(deciding, Some(i)),
        failure: served(without, None),
        value: element.profile[i],
    }
}

/// Expected objective over the singled-out agent's value and its derivative
/// in the offer.
pub fn porf_expected(d: &ValuationDistribution, sim: &Simulation, offer: f64, objective: Objective) -> (f64, f64) {
    let (cdf, dens) = (d.cdf(offer), d.density(offer));
    match objective {
        Objective::Consumers => {
            let e = (1.0 - cdf) * sim.success + cdf * sim.failure;
            (e, dens * (sim.failure - sim.success))
        }
        Objective::Welfare => {
            let (w, slope) = d.welfare_and_slope(offer);
            let served = sim.success + w;
            let e = (1.0 - cdf) * served + cdf * sim.failure;
            (e, dens * (sim.failure - served) + (1.0 - cdf) * slope)
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Like [`porf_expected`] with `sigmoid(v_i - offer)` as the acceptance
/// weight. For welfare their utility `v_i - offer` joins the success branch.
pub fn sigmoid_expected(sim: &Simulation, offer: f64, objective: Objective) -> (f64, f64) {
    let accept = sigmoid(sim.value - offer);
    let slope = accept * (1.0 - accept);
    match objective {
        Objective::Consumers => {
            let e = accept * sim.success + (1.0 - accept) * sim.failure;
            (e, slope * (sim.failure - sim.success))
        }
        Objective::Welfare => {
            let served = sim.success + sim.value - offer;
            let e = accept * served + (1.0 - accept) * sim.failure;
            (e, slope * (sim.failure - served) - accept)
        }
    }
}

/// Simulations frozen under fixed parameters; the cost is then a function
/// of the parameters through the offers only.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedBatch {
    pub kind: CostKind,
    pub objective: Objective,
    pub simulations: Vec<Simulation>,
}

/// Lazily evaluated network outputs with per-coalition output gradients.
pub(crate) struct Tape<'a> {
    params: &'a NetworkParams,
    traces: Vec<OnceCell<Trace>>,
    d_out: Vec<Option<Vec<f64>>>,
}

impl<'a> Tape<'a> {
    pub fn new(params: &'a NetworkParams) -> Self {
        let count = 1usize << params.n();
        Self { params, traces: (0..count).map(|_| OnceCell::new()).collect(), d_out: vec![None; count] }
    }

    pub fn out(&self, c: Coalition) -> &[f64] {
        &self.traces[c as usize].get_or_init(|| self.params.trace(c)).out
    }

    pub fn add(&mut self, c: Coalition, i: usize, g: f64) {
        let n = self.params.n();
        self.d_out[c as usize].get_or_insert_with(|| vec![0.0; n])[i] += g;
    }

    pub fn backprop(&self, grad: &mut [f64]) {
        for (c, d) in self.d_out.iter().enumerate() {
            if let Some(d) = d {
                let trace = self.traces[c].get().expect("gradient only on evaluated coalitions");
                self.params.backward(trace, d, grad);
            }
        }
    }
}

pub fn prepare_batch(p: &NetworkParams, batch: &[BatchElement], kind: CostKind, objective: Objective) -> PreparedBatch {
    let tape = Tape::new(p);
    let simulations = batch.iter().map(|e| simulate(p.n(), |c| tape.out(c), e, objective)).collect();
    PreparedBatch { kind, objective, simulations }
}

/// Every (coalition, coalition minus one member) pair with at least two
/// members, or a sample of them for large `n`.
pub fn penalty_pairs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(Coalition, Coalition)> {
    if n <= EXHAUSTIVE_PENALTY_AGENTS {
        (1..1u32 << n)
            .filter(|&c| size(c) >= 2)
            .flat_map(|c| members(c).map(move |j| (c, c & !(1 << j))))
            .collect()
    } else {
        (0..SAMPLED_PENALTY_PAIRS)
            .map(|_| loop {
                let c = rng.random_range(1..1u32 << n);
                if size(c) >= 2 {
                    let pick = rng.random_range(0..size(c));
                    let j = members(c).nth(pick).expect("pick below size");
                    break (c, c & !(1 << j));
                }
            })
            .collect()
    }
}

fn penalty_on_tape(tape: &mut Tape, pairs: &[(Coalition, Coalition)], weight: Option<f64>) -> f64 {
    let n = tape.params.n();
    let mut total = 0.0;
    for &(big, small) in pairs {
        for i in 0..n {
            let diff = tape.out(big)[i] - tape.out(small)[i];
            if diff > 0.0 {
                total += diff;
                if let Some(w) = weight {
                    tape.add(big, i, w);
                    tape.add(small, i, -w);
                }
            }
        }
    }
    total
}

/// Sum of share increases along single-member removals. Zero exactly when
/// the network's schedule is monotone on the enumerated pairs.
pub fn monotonicity_penalty(p: &NetworkParams) -> f64 {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let pairs = penalty_pairs(p.n(), &mut rng);
    penalty_on_tape(&mut Tape::new(p), &pairs, None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostValue {
    /// Total cost including the weighted penalty.
    pub cost: f64,
    /// Mean expected objective over the batch.
    pub objective: f64,
    pub penalty: f64,
}

/// Cost of `p` on a prepared batch; adds its gradient to `grad` if given.
pub fn batch_cost(
    p: &NetworkParams,
    d: &ValuationDistribution,
    batch: &PreparedBatch,
    pairs: &[(Coalition, Coalition)],
    penalty_weight: f64,
    grad: Option<&mut [f64]>,
) -> CostValue {
    let n = p.n() as f64;
    let mut tape = Tape::new(p);
    let want_grad = grad.is_some();
    let scale = 1.0 / batch.simulations.len().max(1) as f64;
    let mut expected = 0.0;
    for sim in &batch.simulations {
        let offer = tape.out(sim.deciding)[sim.agent];
        let (e, de) = match batch.kind {
            CostKind::Porf => porf_expected(d, sim, offer, batch.objective),
            CostKind::Sigmoid => sigmoid_expected(sim, offer, batch.objective),
        };
        expected += e;
        if want_grad && de != 0.0 {
            tape.add(sim.deciding, sim.agent, -de * scale);
        }
    }
    expected *= scale;
    let penalty = penalty_on_tape(&mut tape, pairs, want_grad.then_some(penalty_weight));
    let base = match batch.objective {
        Objective::Consumers => n - expected,
        Objective::Welfare => -expected,
    };
    if let Some(g) = grad {
        tape.backprop(g);
    }
    CostValue { cost: base + penalty_weight * penalty, objective: expected, penalty }
}

fn cost_with(
    p: &NetworkParams,
    d: &ValuationDistribution,
    batch: &[BatchElement],
    kind: CostKind,
    objective: Objective,
    penalty_weight: f64,
) -> CostValue {
    let prepared = prepare_batch(p, batch, kind, objective);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let pairs = penalty_pairs(p.n(), &mut rng);
    batch_cost(p, d, &prepared, &pairs, penalty_weight, None)
}

/// Mean of `n - E` (or `-E` for welfare) with `E` mixing the two simulated
/// outcomes by the analytic acceptance probability, plus the weighted
/// monotonicity penalty.
pub fn porf_cost(
    p: &NetworkParams,
    d: &ValuationDistribution,
    batch: &[BatchElement],
    objective: Objective,
    penalty_weight: f64,
) -> CostValue {
    cost_with(p, d, batch, CostKind::Porf, objective, penalty_weight)
}

/// As [`porf_cost`] with sigmoid acceptance weights; `d` is not consulted.
pub fn sigmoid_cost(
    p: &NetworkParams,
    d: &ValuationDistribution,
    batch: &[BatchElement],
    objective: Objective,
    penalty_weight: f64,
) -> CostValue {
    cost_with(p, d, batch, CostKind::Sigmoid, objective, penalty_weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::scs_schedule;

    fn scs_sim(objective: Objective) -> Simulation {
        let s = scs_schedule(5).unwrap();
        let table: Vec<Vec<f64>> = (0..32u32).map(|c| if c == 0 { vec![1.0; 5] } else { s.padded(c) }).collect();
        let element = BatchElement { agent: 0, profile: vec![0.0, 0.5, 0.5, 0.25, 0.0] };
        simulate(5, |c| &table[c as usize], &element, objective)
    }

    #[test]
    fn scs_example_constants() {
        let sim = scs_sim(Objective::Consumers);
        assert_eq!(sim.deciding, 0b01111);
        assert_eq!((sim.success, sim.failure), (4.0, 2.0));
        let (e, _) = porf_expected(&ValuationDistribution::uniform(), &sim, 0.25, Objective::Consumers);
        assert!((e - 3.5).abs() < 1e-12);
    }

    #[test]
    fn scs_example_welfare_constants() {
        let sim = scs_sim(Objective::Welfare);
        assert!((sim.success - (0.25 + 0.25 + 0.0)).abs() < 1e-12);
        assert!(sim.failure.abs() < 1e-12);
    }

    #[test]
    fn equal_branches_ignore_the_offer() {
        let sim = Simulation { agent: 0, deciding: 1, success: 3.0, failure: 3.0, value: 0.2 };
        let d = ValuationDistribution::normal(0.3, 0.2).unwrap();
        for offer in [0.0, 0.3, 0.9] {
            assert_eq!(porf_expected(&d, &sim, offer, Objective::Consumers), (3.0, 0.0));
        }
    }

    #[test]
    fn sigmoid_examples() {
        let sim = Simulation { agent: 0, deciding: 1, success: 4.0, failure: 2.0, value: 0.9 };
        let (e, _) = sigmoid_expected(&sim, 0.9, Objective::Consumers);
        assert!((e - 3.0).abs() < 1e-12);
        let (e, _) = sigmoid_expected(&sim, 0.25, Objective::Consumers);
        assert!((e - 3.314).abs() < 1e-3, "{e}");
        let far = Simulation { value: 1e3, ..sim };
        assert!((sigmoid_expected(&far, 0.1, Objective::Consumers).0 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pair_count() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        // sum over |b| >= 2 of |b| = n 2^(n-1) - n
        assert_eq!(penalty_pairs(4, &mut rng).len(), 4 * 8 - 4);
        assert_eq!(penalty_pairs(11, &mut rng).len(), SAMPLED_PENALTY_PAIRS);
    }

    #[test]
    fn hand_built_violation_is_penalized() {
        // Agent 0's logit is 5 exactly when agent 2 is present, so its share
        // drops from about 0.99 to 0.5 when agent 2 leaves.
        let mut p = NetworkParams::from_values(3, vec![0.0; super::super::network::parameter_count(3)]).unwrap();
        let v = p.values_mut();
        v[2] = 1.0;
        let mut offset = 3 * 100 + 100;
        for _ in 0..3 {
            v[offset] = 1.0;
            offset += 100 * 100 + 100;
        }
        v[offset] = 5.0;
        let big = p.forward(0b111).unwrap();
        let small = p.forward(0b011).unwrap();
        assert!(big[0] > 0.98 && (small[0] - 0.5).abs() < 1e-12);
        assert!(monotonicity_penalty(&p) > 0.4);
    }

    #[test]
    fn penalty_is_nonnegative() {
        for seed in 0..3 {
            let p = NetworkParams::xavier(4, seed).unwrap();
            assert!(monotonicity_penalty(&p) >= 0.0);
        }
    }
}

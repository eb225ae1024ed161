use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pubshare_core::mechanisms::{run_schedule_as_is, scs_schedule};
use pubshare_core::neural::{
    monotonicity_penalty, network_to_schedule, porf_expected, prepare_batch, sample_batch, supervise, train,
    CostKind, NetworkParams, TrainConfig,
};
use pubshare_core::{Objective, ValuationDistribution};

#[test]
fn forward_invariants_on_many_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for net in 0..100 {
        let n = rng.random_range(1..=8);
        let p = NetworkParams::xavier(n, net).unwrap();
        for _ in 0..100 {
            let c = rng.random_range(1..1u32 << n);
            let out = p.forward(c).unwrap();
            let mut sum = 0.0;
            for (i, v) in out.iter().enumerate() {
                assert!((0.0..=1.0).contains(v));
                if c >> i & 1 == 1 {
                    sum += v;
                } else {
                    assert_eq!(*v, 1.0);
                }
            }
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn training_is_reproducible() {
    let d: ValuationDistribution = "twopeak:0.15,0.1,0.85,0.1,0.5".parse().unwrap();
    let config = TrainConfig { rounds: 4, batch_size: 32, eval_samples: 2000, seed: 3, ..TrainConfig::default() };
    let run = || train(NetworkParams::xavier(3, 8).unwrap(), &d, &config).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.history, b.history);
    assert_eq!(a.last.values(), b.last.values());
}

fn simpson201(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let h = (b - a) / 200.0;
    let inner: f64 = (1..200).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h)).sum();
    (g(a) + inner + g(b)) * h / 3.0
}

/// On a network trained to reproduce a monotone schedule, the analytic
/// expectation over the singled-out agent's value agrees with quadrature
/// over full off-network runs of that schedule.
#[test]
fn porf_expectation_matches_off_network_runs() {
    let d: ValuationDistribution = "twopeak:0.15,0.1,0.85,0.1,0.5".parse().unwrap();
    let n = 3;
    let config = TrainConfig::default();
    let (p, _) = supervise(NetworkParams::xavier(n, 1).unwrap(), &scs_schedule(n).unwrap(), &config).unwrap();
    assert!(monotonicity_penalty(&p) < 1e-3);
    let schedule = network_to_schedule(&p).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let batch = sample_batch(&d, n, 40, &mut rng);
    for objective in [Objective::Consumers, Objective::Welfare] {
        let prepared = prepare_batch(&p, &batch, CostKind::Porf, objective);
        for (element, sim) in batch.iter().zip(&prepared.simulations) {
            let offer = p.forward(sim.deciding).unwrap()[sim.agent];
            let (analytic, _) = porf_expected(&d, sim, offer, objective);
            // values are nudged off the offer so each piece sees one branch
            let run = |v: f64, reported: f64| {
                let mut profile = element.profile.clone();
                profile[element.agent] = reported;
                let outcome = run_schedule_as_is(&schedule, &profile);
                let mut value = outcome.objective(&profile, objective);
                if objective == Objective::Welfare && outcome.is_consumer(element.agent) {
                    value += v - reported;
                }
                d.density(v) * value
            };
            let numeric = simpson201(|v| run(v, v.min(offer - 1e-9)), 0.0, offer)
                + simpson201(|v| run(v, v.max(offer + 1e-9)), offer, 1.0);
            assert!((analytic - numeric).abs() < 1e-3, "{objective}: {analytic} vs {numeric}");
        }
    }
}

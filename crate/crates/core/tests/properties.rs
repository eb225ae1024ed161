use proptest::prelude::*;

use pubshare_core::eval::{exact_scs_consumers, exact_unanimous_value, mc_estimate};
use pubshare_core::mechanisms::{cec_shares, feasibility_check, run_largest_unanimous, scs_schedule};
use pubshare_core::neural::{monotonicity_penalty, network_to_schedule, NetworkParams};
use pubshare_core::solvers::{solve_one_directional, solve_optimal_unanimous, upper_bound, welfare_cap};
use pubshare_core::{GridSpec, Objective, Schedule, ValuationDistribution};

fn distribution() -> impl Strategy<Value = ValuationDistribution> {
    prop_oneof![
        Just(ValuationDistribution::uniform()),
        (0.2..0.8f64, 0.05..0.3f64).prop_map(|(m, s)| ValuationDistribution::normal(m, s).unwrap()),
        (0.5..3.0f64).prop_map(|r| ValuationDistribution::exponential(r).unwrap()),
        (0.3..0.7f64, 0.05..0.2f64).prop_map(|(m, s)| ValuationDistribution::logistic(m, s).unwrap()),
        (0.05..0.4f64, 0.6..0.95f64, 0.2..0.8f64)
            .prop_map(|(a, b, w)| ValuationDistribution::two_peak(a, 0.1, b, 0.1, w).unwrap()),
    ]
}

fn objective() -> impl Strategy<Value = Objective> {
    prop_oneof![Just(Objective::Consumers), Just(Objective::Welfare)]
}

fn proportional(weights: &[f64]) -> Schedule {
    Schedule::from_fn(weights.len(), |c| {
        let chosen: Vec<f64> = (0..weights.len()).filter(|i| c >> i & 1 == 1).map(|i| weights[i]).collect();
        let total: f64 = chosen.iter().sum();
        chosen.iter().map(|w| w / total).collect()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn network_outputs_live_on_the_simplex(n in 1usize..=6, seed in any::<u64>(), raw in 1u32..64) {
        let p = NetworkParams::xavier(n, seed).unwrap();
        let c = raw & ((1 << n) - 1);
        prop_assume!(c != 0);
        let out = p.forward(c).unwrap();
        let mut member_sum = 0.0;
        for (i, v) in out.iter().enumerate() {
            prop_assert!(v.is_finite() && *v >= 0.0);
            if c >> i & 1 == 1 {
                member_sum += v;
            } else {
                prop_assert_eq!(*v, 1.0);
            }
        }
        prop_assert!((member_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn penalty_is_nonnegative_and_schedule_is_balanced(n in 1usize..=5, seed in any::<u64>()) {
        let p = NetworkParams::xavier(n, seed).unwrap();
        prop_assert!(monotonicity_penalty(&p) >= 0.0);
        prop_assert!(network_to_schedule(&p).unwrap().is_balanced());
    }

    #[test]
    fn schedule_json_round_trip(weights in prop::collection::vec(0.01..1.0f64, 1..=6)) {
        let s = proportional(&weights);
        let back = Schedule::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn proportional_schedules_are_feasible(weights in prop::collection::vec(0.01..1.0f64, 1..=6),
                                           profile in prop::collection::vec(0.0..1.0f64, 6)) {
        let s = proportional(&weights);
        prop_assert!(feasibility_check(&s).is_empty());
        let out = run_largest_unanimous(&s, &profile[..weights.len()]).unwrap();
        let paid: f64 = out.payments.iter().sum();
        prop_assert!(!out.built || (paid - 1.0).abs() < 1e-9);
        for (i, v) in profile.iter().take(weights.len()).enumerate() {
            if out.is_consumer(i) {
                prop_assert!(*v >= out.payments[i]);
            }
        }
    }

    #[test]
    fn mc_is_deterministic(d in distribution(), n in 1usize..=6, seed in any::<u64>(), obj in objective()) {
        let s = scs_schedule(n).unwrap();
        let a = mc_estimate(&s, &d, 2000, seed, obj).unwrap();
        let b = mc_estimate(&s, &d, 2000, seed, obj).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dominance_chain(d in distribution(), n in 2usize..=5, obj in objective()) {
        // H = 60 puts every equal split 1/n on the grid
        let grid = GridSpec::new(60).unwrap();
        let cec = exact_unanimous_value(&cec_shares(n), &d, obj);
        let unanimous = solve_optimal_unanimous(&d, n, grid, obj).unwrap().value;
        let one_dir = solve_one_directional(&d, n, grid, obj).unwrap().value;
        let bound = upper_bound(&d, n, grid, obj).unwrap();
        prop_assert!(cec <= unanimous + 1e-9, "cec {} > unanimous {}", cec, unanimous);
        // u is snapped in the one-directional table, allow one grid step per agent
        prop_assert!(unanimous <= one_dir + n as f64 / 60.0, "unanimous {} > one-directional {}", unanimous, one_dir);
        prop_assert!(unanimous <= bound + 1e-9, "unanimous {} > bound {}", unanimous, bound);
        prop_assert!(one_dir <= bound + n as f64 / 60.0, "one-directional {} > bound {}", one_dir, bound);
        if obj == Objective::Consumers {
            let scs = exact_scs_consumers(&d, n).unwrap();
            prop_assert!(scs <= bound + 1e-9, "scs {} > bound {}", scs, bound);
        }
    }

    #[test]
    fn uniform_welfare_cap(t in 1usize..=8, h in prop::sample::select(vec![50usize, 100, 200])) {
        let cap = welfare_cap(&ValuationDistribution::uniform(), t, GridSpec::new(h).unwrap(), Objective::Welfare).unwrap();
        prop_assert!((cap - (t as f64 - 1.0) / 2.0).abs() <= 2.0 / h as f64, "t={} h={}: {}", t, h, cap);
    }

    #[test]
    fn doubling_the_grid_changes_little(d in distribution(), n in 2usize..=4, obj in objective()) {
        let at = |h| solve_optimal_unanimous(&d, n, GridSpec::new(h).unwrap(), obj).unwrap().value;
        let (coarse, fine, finer) = (at(50), at(100), at(200));
        // values only grow on a refined grid and the steps shrink
        prop_assert!(fine >= coarse - 1e-12 && finer >= fine - 1e-12);
        prop_assert!(finer - fine <= 0.02 && fine - coarse <= 0.04, "{} {} {}", coarse, fine, finer);
    }
}

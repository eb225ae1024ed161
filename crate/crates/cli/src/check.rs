use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pubshare_core::eval::{exact_scs_consumers, exact_unanimous_value, mc_estimate};
use pubshare_core::mechanisms::{feasibility_check, scs_schedule, strategyproofness_probe};
use pubshare_core::neural::{
    batch_cost, gradient_check, penalty_pairs, prepare_batch, sample_batch, CostKind, NetworkParams,
};
use pubshare_core::solvers::solve_optimal_unanimous;
use pubshare_core::{CostShareVector, GridSpec, Objective, Schedule, ValuationDistribution};

use crate::args::Common;
use crate::output::{emit, RunInfo};

#[derive(Debug, Serialize)]
struct CheckRow {
    check: String,
    passed: bool,
    detail: String,
}

fn row(check: impl Into<String>, passed: bool, detail: String) -> CheckRow {
    CheckRow { check: check.into(), passed, detail }
}

fn shape_reports() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    // families known to be log-concave on [0, 1]
    for spec in ["uniform", "normal:0.5,0.1", "exponential:1", "logistic:0.5,0.1"] {
        let r = spec.parse::<ValuationDistribution>()?.shape_report(1000)?;
        rows.push(row(
            format!("shape {spec}"),
            r.log_concave,
            format!("log-concave {} welfare-concave {} nonincreasing {}", r.log_concave, r.welfare_concave, r.nonincreasing),
        ));
    }
    let r = "twopeak:0.15,0.1,0.85,0.1,0.5".parse::<ValuationDistribution>()?.shape_report(1000)?;
    rows.push(row(
        "shape twopeak:0.15,0.1,0.85,0.1,0.5",
        !r.log_concave,
        format!("log-concavity violation {:.3e}", r.log_concavity_violation),
    ));
    Ok(rows)
}

fn proportional(weights: &[f64]) -> Result<Schedule> {
    Ok(Schedule::from_fn(weights.len(), |c| {
        let chosen: Vec<f64> = (0..weights.len()).filter(|i| c >> i & 1 == 1).map(|i| weights[i]).collect();
        let total: f64 = chosen.iter().sum();
        chosen.iter().map(|w| w / total).collect()
    })?)
}

fn incentives(rng: &mut ChaCha8Rng) -> Result<CheckRow> {
    let reports: Vec<f64> = (0..=40).map(|j| j as f64 / 40.0).collect();
    let mut worst = f64::NEG_INFINITY;
    for case in 0..500 {
        let n = rng.random_range(2..=6);
        let s = if case % 2 == 0 {
            scs_schedule(n)?
        } else {
            proportional(&(0..n).map(|_| rng.random_range(0.1..1.0)).collect::<Vec<_>>())?
        };
        let profile: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let agent = rng.random_range(0..n);
        worst = worst.max(strategyproofness_probe(&s, &profile, agent, &reports)?);
    }
    Ok(row("misreport gain, 500 cases", worst <= 1e-9, format!("largest gain {worst:.2e}")))
}

fn gradients(seed: u64) -> Result<Vec<CheckRow>> {
    let d = ValuationDistribution::two_peak(0.15, 0.1, 0.85, 0.1, 0.5)?;
    let p = NetworkParams::xavier(3, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = sample_batch(&d, 3, 32, &mut rng);
    let pairs = penalty_pairs(3, &mut rng);
    let mut rows = Vec::new();
    for kind in [CostKind::Porf, CostKind::Sigmoid] {
        for obj in [Objective::Consumers, Objective::Welfare] {
            let prepared = prepare_batch(&p, &batch, kind, obj);
            let cost = |q: &NetworkParams, g: Option<&mut [f64]>| batch_cost(q, &d, &prepared, &pairs, 1000.0, g).cost;
            let r = gradient_check(&p, cost, 1e-5, 60, seed)?;
            rows.push(row(
                format!("gradient {kind:?} {obj}"),
                r.max_relative_error < 1e-4,
                format!("max relative error {:.2e}", r.max_relative_error),
            ));
        }
    }
    Ok(rows)
}

fn oracles(seed: u64, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>> {
    let d = ValuationDistribution::two_peak(0.1, 0.1, 0.9, 0.1, 0.5)?;
    let h = 50;
    let mut worst: f64 = 0.0;
    for obj in [Objective::Consumers, Objective::Welfare] {
        let solved = solve_optimal_unanimous(&d, 2, GridSpec::new(h)?, obj)?.value;
        let mut best = f64::NEG_INFINITY;
        for j in 0..=h {
            let shares = CostShareVector::new(vec![j as f64 / h as f64, (h - j) as f64 / h as f64])?;
            best = best.max(exact_unanimous_value(&shares, &d, obj));
        }
        worst = worst.max((solved - best).abs());
    }
    let mut rows = vec![row("unanimous DP vs exhaustive, n=2", worst <= 1e-12, format!("max difference {worst:.2e}"))];

    let mut misses = 0;
    for case in 0..10 {
        let n = rng.random_range(2..=5);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let shares = CostShareVector::new(raw.iter().map(|r| r / total).collect())?;
        let obj = if case % 2 == 0 { Objective::Consumers } else { Objective::Welfare };
        let e = mc_estimate(&shares, &d, 100_000, seed + case, obj)?;
        if (e.mean - exact_unanimous_value(&shares, &d, obj)).abs() > 4.0 * e.stderr.max(1e-12) {
            misses += 1;
        }
    }
    rows.push(row("exact unanimous vs Monte Carlo, 10 cases", misses == 0, format!("{misses} beyond 4 stderr")));

    let mut misses = 0;
    for n in 2..=8 {
        let e = mc_estimate(&scs_schedule(n)?, &d, 100_000, seed + n as u64, Objective::Consumers)?;
        if (e.mean - exact_scs_consumers(&d, n)?).abs() > 4.0 * e.stderr.max(1e-12) {
            misses += 1;
        }
    }
    rows.push(row("exact serial cost sharing vs Monte Carlo, n=2..8", misses == 0, format!("{misses} beyond 4 stderr")));

    let infeasible = (2..=8).filter(|&n| scs_schedule(n).map_or(true, |s| !feasibility_check(&s).is_empty())).count();
    rows.push(row("serial cost sharing schedules feasible", infeasible == 0, format!("{infeasible} infeasible")));
    Ok(rows)
}

pub fn run(common: &Common) -> Result<()> {
    let seed = common.seed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = shape_reports()?;
    rows.push(incentives(&mut rng)?);
    rows.extend(gradients(seed)?);
    rows.extend(oracles(seed, &mut rng)?);
    emit(common.out.as_deref(), &RunInfo { seed: Some(seed), h: Some(50), samples: Some(100_000) }, &rows)?;
    let failed = rows.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        bail!("{failed} of {} checks failed", rows.len());
    }
    Ok(())
}

use anyhow::Result;
use serde::Serialize;

use pubshare_core::eval::{exact_scs_consumers, exact_unanimous_value, mc_estimate, AsIs};
use pubshare_core::mechanisms::{cec_shares, scs_schedule};
use pubshare_core::solvers::{myopic_schedule, solve_one_directional, solve_optimal_unanimous, upper_bound};
use pubshare_core::{Objective, ValuationDistribution};

use crate::args::{Common, Table};
use crate::output::{emit, RunInfo};

/// Monte Carlo size for table cells without a closed form.
pub const TABLE_SAMPLES: usize = 1_000_000;

#[derive(Debug, Serialize)]
struct CecDpRow {
    distribution: String,
    n: usize,
    mechanism: &'static str,
    consumers: f64,
    consumers_published: f64,
    consumers_abs_diff: f64,
    welfare: f64,
    welfare_published: f64,
    welfare_abs_diff: f64,
}

#[derive(Debug, Serialize)]
struct ScsBoundRow {
    distribution: String,
    n: usize,
    objective: Objective,
    scs: f64,
    scs_stderr: Option<f64>,
    scs_published: f64,
    scs_abs_diff: f64,
    bound: f64,
    bound_published: f64,
    bound_abs_diff: f64,
}

#[derive(Debug, Serialize)]
struct BaselineRow {
    distribution: String,
    n: usize,
    objective: Objective,
    mechanism: &'static str,
    value: f64,
    stderr: Option<f64>,
    published: f64,
    abs_diff: f64,
}

pub fn run(table: Table, common: &Common) -> Result<()> {
    let grid = common.grid()?;
    let (seed, samples) = (common.seed(), common.samples.unwrap_or(TABLE_SAMPLES));
    let out = common.out.as_deref();
    match table {
        Table::CecDpTwopeak => {
            let d = ValuationDistribution::two_peak(0.1, 0.1, 0.9, 0.1, 0.5)?;
            let published = [(3, [0.376, 0.200], [0.766, 0.306]), (5, [0.373, 0.199], [1.426, 0.591])];
            let mut rows = Vec::new();
            for (n, cec, dp) in published {
                let cec_value = |obj| exact_unanimous_value(&cec_shares(n), &d, obj);
                let dp_value = |obj| solve_optimal_unanimous(&d, n, grid, obj).map(|s| s.value);
                let (cc, cw) = (cec_value(Objective::Consumers), cec_value(Objective::Welfare));
                let (dc, dw) = (dp_value(Objective::Consumers)?, dp_value(Objective::Welfare)?);
                for (mechanism, (c, w), published) in [("cec", (cc, cw), cec), ("dp", (dc, dw), dp)] {
                    rows.push(CecDpRow {
                        distribution: d.to_string(),
                        n,
                        mechanism,
                        consumers: c,
                        consumers_published: published[0],
                        consumers_abs_diff: (c - published[0]).abs(),
                        welfare: w,
                        welfare_published: published[1],
                        welfare_abs_diff: (w - published[1]).abs(),
                    });
                }
            }
            emit(out, &RunInfo { seed: None, h: Some(grid.h()), samples: None }, &rows)
        }
        Table::ScsVsBound => {
            // (distribution, n, consumers (scs, bound), welfare (scs, bound))
            let published = [
                ("uniform", 5, (3.559, 3.753), (1.350, 1.417)),
                ("uniform", 10, (8.915, 8.994), (3.938, 4.037)),
                ("normal:0.5,0.1", 5, (4.988, 4.993), (1.492, 2.017)),
                ("normal:0.5,0.1", 10, (10.00, 10.00), (3.983, 4.545)),
                ("exponential:1", 5, (2.799, 3.038), (0.889, 0.928)),
                ("exponential:1", 10, (8.184, 8.476), (3.081, 3.163)),
                ("logistic:0.5,0.1", 5, (4.744, 4.781), (1.451, 1.910)),
                ("logistic:0.5,0.1", 10, (9.873, 9.886), (3.957, 4.487)),
            ];
            let mut rows = Vec::new();
            for (spec, n, consumers, welfare) in published {
                let d: ValuationDistribution = spec.parse()?;
                for (obj, (scs_pub, bound_pub)) in [(Objective::Consumers, consumers), (Objective::Welfare, welfare)] {
                    let (scs, scs_stderr) = match obj {
                        Objective::Consumers => (exact_scs_consumers(&d, n)?, None),
                        Objective::Welfare => {
                            let e = mc_estimate(&scs_schedule(n)?, &d, samples, seed, obj)?;
                            (e.mean, Some(e.stderr))
                        }
                    };
                    let bound = upper_bound(&d, n, grid, obj)?;
                    rows.push(ScsBoundRow {
                        distribution: d.to_string(),
                        n,
                        objective: obj,
                        scs,
                        scs_stderr,
                        scs_published: scs_pub,
                        scs_abs_diff: (scs - scs_pub).abs(),
                        bound,
                        bound_published: bound_pub,
                        bound_abs_diff: (bound - bound_pub).abs(),
                    });
                }
            }
            emit(out, &RunInfo { seed: Some(seed), h: Some(grid.h()), samples: Some(samples) }, &rows)
        }
        Table::WelfareBaselines => {
            let d = ValuationDistribution::two_peak(0.2, 0.1, 0.6, 0.1, 0.5)?;
            let (n, obj) = (5, Objective::Welfare);
            let dp = solve_one_directional(&d, n, grid, obj)?.value;
            let scs = mc_estimate(&scs_schedule(n)?, &d, samples, seed, obj)?;
            let myopic = myopic_schedule(&d, n, grid, obj)?;
            let myopic = mc_estimate(&AsIs(&myopic), &d, samples, seed, obj)?;
            let cells = [
                ("dp", dp, None, 0.7517),
                ("scs", scs.mean, Some(scs.stderr), 0.7897),
                ("myopic", myopic.mean, Some(myopic.stderr), 0.7719),
            ];
            let rows: Vec<BaselineRow> = cells
                .into_iter()
                .map(|(mechanism, value, stderr, published)| BaselineRow {
                    distribution: d.to_string(),
                    n,
                    objective: obj,
                    mechanism,
                    value,
                    stderr,
                    published,
                    abs_diff: (value - published).abs(),
                })
                .collect();
            emit(out, &RunInfo { seed: Some(seed), h: Some(grid.h()), samples: Some(samples) }, &rows)
        }
    }
}

use super::{check_n, GridSpec, OfferTables};
use crate::dist::{ValuationDistribution, NULL_EVENT};
use crate::error::Result;
use crate::objective::Objective;

/// `G(t)` for `t = 0..=t_max`: the best objective once the project is built
/// for exactly `t` consumers. `t` for consumers; for welfare the best split
/// of the cost, `g(k, m) = max_c w(c) + g(k - 1, m - c)`, `g(1, m) = w(m)`.
pub fn welfare_cap_table(
    d: &ValuationDistribution,
    t_max: usize,
    grid: GridSpec,
    objective: Objective,
) -> Vec<f64> {
    if objective == Objective::Consumers {
        return (0..=t_max).map(|t| t as f64).collect();
    }
    let h = grid.h();
    let w = d.welfare_grid(h);
    let mut caps = vec![0.0];
    let mut g = w.clone();
    for t in 1..=t_max {
        if t > 1 {
            g = (0..=h)
                .map(|m| (0..=m).map(|c| w[c] + g[m - c]).fold(f64::NEG_INFINITY, f64::max))
                .collect();
        }
        caps.push(g[h]);
    }
    caps
}

pub fn welfare_cap(d: &ValuationDistribution, t: usize, grid: GridSpec, objective: Objective) -> Result<f64> {
    check_n(t)?;
    Ok(welfare_cap_table(d, t, grid, objective)[t])
}

/// Upper bound on the expected objective of every largest unanimous
/// mechanism with `n` agents.
///
/// State `(t, k, m, l)`: `t` agents remain in play, `k` of them still to be
/// offered, `m` is the money the unoffered agents must cover and `l` a
/// lower bound already known for their values' total. On offer `c` with
/// known lower bound `l*`, acceptance has probability `R(c) / R(l*)` and
/// moves to `(t, k - 1, m - c, l - l*)`; rejection restarts with one agent
/// fewer at `(t - 1, t - 1, 1, 1 - m + l - l*)`. States keep `l <= m`.
pub fn upper_bound(d: &ValuationDistribution, n: usize, grid: GridSpec, objective: Objective) -> Result<f64> {
    check_n(n)?;
    let h = grid.h();
    let dim = h + 1;
    let rel = OfferTables::new(d, grid, objective).reliability;
    let caps = welfare_cap_table(d, n, grid, objective);
    let accept = |c: usize, lower: usize| {
        if rel[lower] < NULL_EVENT {
            0.0
        } else {
            rel[c] / rel[lower]
        }
    };

    // restart[l] = U(t - 1, t - 1, 1, l / h); zero for t - 1 = 1.
    let mut restart = vec![0.0; dim];
    for (t, &cap) in caps.iter().enumerate().skip(2) {
        // layer[m * dim + l] = U(t, k, m, l)
        let mut layer = vec![0.0; dim * dim];
        for m in 0..=h {
            for l in 0..=m {
                let p = accept(m, l);
                layer[m * dim + l] = p * cap + (1.0 - p) * restart[h - m];
            }
        }
        for k in 2..=t {
            let rows = if k == t { h..=h } else { 0..=h };
            let mut next = vec![0.0; dim * dim];
            for m in rows {
                for l in 0..=m {
                    let mut best = f64::NEG_INFINITY;
                    for lower in 0..=l {
                        let rest = l - lower;
                        let reject = restart[h - m + rest];
                        for c in lower..=m - rest {
                            let p = accept(c, lower);
                            let v = p * layer[(m - c) * dim + rest] + (1.0 - p) * reject;
                            if v > best {
                                best = v;
                            }
                        }
                    }
                    next[m * dim + l] = best;
                }
            }
            layer = next;
        }
        restart = layer[h * dim..].to_vec();
    }
    Ok(restart[0])
}

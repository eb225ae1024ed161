use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{parameter_count, NetworkParams};
use crate::error::{Error, Result};

/// Gradients smaller than this are compared absolutely.
pub const GRADIENT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Euclidean norm of the full analytic gradient.
    pub gradient_norm: f64,
}

/// Compares the analytic gradient of `cost` with central differences on
/// `count` parameters. Half of them are drawn among parameters with a
/// nonzero analytic gradient, the rest uniformly.
///
/// `cost(p, grad)` returns the cost and adds its gradient into `grad` when
/// given one.
pub fn gradient_check<F>(p: &NetworkParams, cost: F, epsilon: f64, count: usize, seed: u64) -> Result<GradientCheck>
where
    F: Fn(&NetworkParams, Option<&mut [f64]>) -> f64,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [1e-7, 1e-3], got {epsilon}")));
    }
    let total = parameter_count(p.n());
    let mut grad = vec![0.0; total];
    cost(p, Some(&mut grad));
    let gradient_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active: Vec<usize> = (0..total).filter(|&i| grad[i] != 0.0).collect();
    let from_active = (count / 2).min(active.len());
    let mut picked: Vec<usize> = sample(&mut rng, active.len(), from_active).into_iter().map(|j| active[j]).collect();
    picked.extend(sample(&mut rng, total, (count - from_active).min(total)));

    let mut probe = p.clone();
    let mut worst: f64 = 0.0;
    for &idx in &picked {
        let orig = p.values()[idx];
        probe.values_mut()[idx] = orig + epsilon;
        let up = cost(&probe, None);
        probe.values_mut()[idx] = orig - epsilon;
        let down = cost(&probe, None);
        probe.values_mut()[idx] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let scale = numeric.abs().max(grad[idx].abs()).max(GRADIENT_FLOOR);
        worst = worst.max((numeric - grad[idx]).abs() / scale);
    }
    Ok(GradientCheck { max_relative_error: worst, checked: picked.len(), gradient_norm })
}

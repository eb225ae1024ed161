use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{members, Coalition, Schedule, MAX_AGENTS};

pub const HIDDEN_WIDTH: usize = 100;
pub const HIDDEN_LAYERS: usize = 4;
/// Logit offset that removes non-members from the softmax.
pub const MASK_CONSTANT: f64 = 1000.0;
pub const INIT_BIAS: f64 = 0.1;

/// `(inputs, outputs)` of every dense layer for `n` agents.
pub fn layer_dims(n: usize) -> Vec<(usize, usize)> {
    let mut dims = vec![(n, HIDDEN_WIDTH)];
    dims.extend(std::iter::repeat_n((HIDDEN_WIDTH, HIDDEN_WIDTH), HIDDEN_LAYERS - 1));
    dims.push((HIDDEN_WIDTH, n));
    dims
}

pub fn parameter_count(n: usize) -> usize {
    layer_dims(n).iter().map(|(i, o)| i * o + o).sum()
}

/// Weights and biases of the share network, flattened layer by layer: the
/// `out x in` weight matrix in row-major order, then the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    shape: CheckpointShape,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointShape {
    n: usize,
    hidden: Vec<usize>,
    layout: String,
}

const LAYOUT: &str = "per layer: weights out x in row-major, then biases";

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    coalition: Coalition,
    /// Input followed by each hidden layer's rectified output.
    activations: Vec<Vec<f64>>,
    softmax: Vec<f64>,
    pub out: Vec<f64>,
}

impl NetworkParams {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::InvalidArgument(format!("network needs 1..={MAX_AGENTS} agents, got {n}")));
        }
        if values.len() != parameter_count(n) {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters for {n} agents, got {}",
                parameter_count(n),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("network parameters must be finite".into()));
        }
        Ok(Self { n, values })
    }

    /// Xavier normal weights, constant bias.
    pub fn xavier(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(parameter_count(n));
        for (fan_in, fan_out) in layer_dims(n) {
            let sd = (2.0 / (fan_in + fan_out) as f64).sqrt();
            let normal = Normal::new(0.0, sd).expect("positive standard deviation");
            values.extend((0..fan_in * fan_out).map(|_| normal.sample(&mut rng)));
            values.extend(std::iter::repeat_n(INIT_BIAS, fan_out));
        }
        Self::from_values(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn check_coalition(&self, b: Coalition) -> Result<()> {
        if b == 0 {
            return Err(Error::EmptyCoalition);
        }
        if b >> self.n != 0 {
            return Err(Error::InvalidArgument(format!("coalition {b:#b} names agents beyond {}", self.n)));
        }
        Ok(())
    }

    /// Share vector for coalition `b`: a softmax over members, 1 for everyone
    /// else.
    pub fn forward(&self, b: Coalition) -> Result<Vec<f64>> {
        self.check_coalition(b)?;
        Ok(self.trace(b).out)
    }

    pub(crate) fn trace(&self, b: Coalition) -> Trace {
        let n = self.n;
        let input: Vec<f64> = (0..n).map(|i| (b >> i & 1) as f64).collect();
        let mut activations = vec![input];
        let mut offset = 0;
        let dims = layer_dims(n);
        let mut logits = Vec::new();
        for (layer, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let x = activations.last().expect("input present");
            let w = &self.values[offset..offset + fan_in * fan_out];
            let bias = &self.values[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let z: Vec<f64> = (0..fan_out)
                .map(|o| bias[o] + w[o * fan_in..(o + 1) * fan_in].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if layer + 1 == dims.len() {
                logits = z;
            } else {
                activations.push(z.into_iter().map(|v| v.max(0.0)).collect());
            }
        }
        let masked: Vec<f64> = (0..n)
            .map(|i| logits[i] - MASK_CONSTANT * (1.0 - (b >> i & 1) as f64))
            .collect();
        let top = masked.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = masked.iter().map(|v| (v - top).exp()).collect();
        let total: f64 = exps.iter().sum();
        let softmax: Vec<f64> = exps.iter().map(|e| e / total).collect();
        let out = (0..n).map(|i| softmax[i] + (1 - (b >> i & 1)) as f64).collect();
        Trace { coalition: b, activations, softmax, out }
    }

    /// Adds `d(loss)/d(params)` to `grad`, given `d(loss)/d(out)` for the
    /// traced coalition.
    pub(crate) fn backward(&self, trace: &Trace, d_out: &[f64], grad: &mut [f64]) {
        let s = &trace.softmax;
        let dot: f64 = s.iter().zip(d_out).map(|(a, b)| a * b).sum();
        let mut delta: Vec<f64> = s.iter().zip(d_out).map(|(si, gi)| si * (gi - dot)).collect();
        let dims = layer_dims(self.n);
        let mut offsets = Vec::with_capacity(dims.len());
        let mut offset = 0;
        for &(fan_in, fan_out) in &dims {
            offsets.push(offset);
            offset += fan_in * fan_out + fan_out;
        }
        for layer in (0..dims.len()).rev() {
            let (fan_in, fan_out) = dims[layer];
            let start = offsets[layer];
            let x = &trace.activations[layer];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[start + o * fan_in..start + (o + 1) * fan_in];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += d * xi;
                }
                grad[start + fan_in * fan_out + o] += d;
            }
            if layer == 0 {
                break;
            }
            let w = &self.values[start..start + fan_in * fan_out];
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, wi) in prev.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                    *p += d * wi;
                }
            }
            // Rectifier: no gradient where the unit was inactive.
            for (p, a) in prev.iter_mut().zip(x) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        debug_assert!(trace.coalition != 0);
    }

    pub fn to_json(&self) -> Result<String> {
        let c = Checkpoint {
            shape: CheckpointShape { n: self.n, hidden: vec![HIDDEN_WIDTH; HIDDEN_LAYERS], layout: LAYOUT.into() },
            values: self.values.clone(),
        };
        Ok(serde_json::to_string(&c)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.shape.hidden != vec![HIDDEN_WIDTH; HIDDEN_LAYERS] {
            return Err(Error::InvalidArgument(format!(
                "checkpoint has hidden layers {:?}, expected {HIDDEN_LAYERS} x {HIDDEN_WIDTH}",
                c.shape.hidden
            )));
        }
        Self::from_values(c.shape.n, c.values)
    }
}

/// Member shares of every coalition, renormalized to sum to exactly 1.
pub fn network_to_schedule(p: &NetworkParams) -> Result<Schedule> {
    Schedule::from_fn(p.n(), |c| {
        let out = p.trace(c).out;
        let shares: Vec<f64> = members(c).map(|i| out[i].max(0.0)).collect();
        let total: f64 = shares.iter().sum();
        shares.iter().map(|s| s / total).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_layout() {
        assert_eq!(parameter_count(3), 3 * 100 + 100 + 3 * (100 * 100 + 100) + 100 * 3 + 3);
        let p = NetworkParams::xavier(3, 1).unwrap();
        assert_eq!(p.values().len(), parameter_count(3));
        assert_eq!(p.values()[300], INIT_BIAS);
    }

    #[test]
    fn masked_coordinates_are_one() {
        let p = NetworkParams::xavier(3, 2).unwrap();
        let out = p.forward(0b101).unwrap();
        assert!((out[1] - 1.0).abs() < 1e-12);
        assert!((out[0] + out[2] - 1.0).abs() < 1e-12);
        assert!(out[0] >= 0.0 && out[2] >= 0.0);
    }

    #[test]
    fn singleton_pays_everything() {
        let p = NetworkParams::xavier(3, 3).unwrap();
        let out = p.forward(0b010).unwrap();
        for v in out {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_coalition_is_rejected() {
        let p = NetworkParams::xavier(2, 4).unwrap();
        assert!(matches!(p.forward(0), Err(Error::EmptyCoalition)));
        assert!(p.forward(0b100).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = NetworkParams::xavier(2, 5).unwrap();
        assert_eq!(NetworkParams::from_json(&p.to_json().unwrap()).unwrap(), p);
    }

    #[test]
    fn backward_matches_differences_on_one_output() {
        let mut p = NetworkParams::xavier(3, 6).unwrap();
        let weights = [0.3, -1.2, 0.7];
        let f = |p: &NetworkParams| -> f64 {
            p.forward(0b111).unwrap().iter().zip(&weights).map(|(a, b)| a * b).sum()
        };
        let mut grad = vec![0.0; parameter_count(3)];
        p.backward(&p.trace(0b111), &weights, &mut grad);
        for idx in [0, 150, 5000, 20_000, parameter_count(3) - 1] {
            let orig = p.values()[idx];
            p.values_mut()[idx] = orig + 1e-6;
            let up = f(&p);
            p.values_mut()[idx] = orig - 1e-6;
            let down = f(&p);
            p.values_mut()[idx] = orig;
            let numeric = (up - down) / 2e-6;
            assert!((numeric - grad[idx]).abs() < 1e-7 * (1.0 + numeric.abs()), "{idx}: {numeric} vs {}", grad[idx]);
        }
    }

    #[test]
    fn extracted_schedule_is_balanced() {
        let p = NetworkParams::xavier(4, 7).unwrap();
        let s = network_to_schedule(&p).unwrap();
        for c in 1..16u32 {
            assert!((s.shares(c).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

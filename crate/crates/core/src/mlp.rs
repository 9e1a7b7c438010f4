//! The classical policy network: 4 -> h -> h -> 2 with tanh activations
//! and manual reverse-mode differentiation.

// Indexed loops mirror the matrix arithmetic they implement.
#![allow(clippy::needless_range_loop)]

#[allow(unused_imports)] // no_std float math; builds with std shadow it
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::policy::PolicyDistribution;
use crate::rng::StreamRng;

pub const OBS_DIM: usize = 4;
pub const ACTION_DIM: usize = 2;

/// Weights and biases of the three affine maps. Flattening order is
/// `w1, b1, w2, b2, w3, b3` with row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    hidden: usize,
    w1: Vec<f64>, // hidden x 4
    b1: Vec<f64>,
    w2: Vec<f64>, // hidden x hidden
    b2: Vec<f64>,
    w3: Vec<f64>, // 2 x hidden
    b3: Vec<f64>,
}

/// Hidden activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    h1: Vec<f64>,
    h2: Vec<f64>,
}

impl MlpParams {
    /// Hidden layers get symmetric uniform init,
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`; the logit layer starts at
    /// zero so the initial policy is exactly uniform.
    pub fn init(hidden: usize, rng: &mut StreamRng) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Config(alloc::string::String::from(
                "hidden width must be positive",
            )));
        }
        let layer = |rows: usize, cols: usize, rng: &mut StreamRng| {
            let bound = 1.0 / (cols as f64).sqrt();
            let w: Vec<f64> = (0..rows * cols)
                .map(|_| rng.uniform_in(-bound, bound))
                .collect();
            let b: Vec<f64> = (0..rows).map(|_| rng.uniform_in(-bound, bound)).collect();
            (w, b)
        };
        let (w1, b1) = layer(hidden, OBS_DIM, rng);
        let (w2, b2) = layer(hidden, hidden, rng);
        Ok(MlpParams {
            hidden,
            w1,
            b1,
            w2,
            b2,
            w3: vec![0.0; ACTION_DIM * hidden],
            b3: vec![0.0; ACTION_DIM],
        })
    }

    pub fn zeros(hidden: usize) -> Self {
        MlpParams {
            hidden,
            w1: vec![0.0; hidden * OBS_DIM],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * hidden],
            b2: vec![0.0; hidden],
            w3: vec![0.0; ACTION_DIM * hidden],
            b3: vec![0.0; ACTION_DIM],
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Trainable parameter count: `4h + h + h^2 + h + 2h + 2`.
    pub fn param_count(&self) -> usize {
        Self::param_count_for(self.hidden)
    }

    pub fn param_count_for(hidden: usize) -> usize {
        hidden * OBS_DIM + hidden + hidden * hidden + hidden + ACTION_DIM * hidden + ACTION_DIM
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for part in [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3] {
            out.extend_from_slice(part);
        }
        out
    }

    pub fn from_flat(hidden: usize, flat: &[f64]) -> Result<Self> {
        let expected = Self::param_count_for(hidden);
        if flat.len() != expected {
            return Err(Error::Shape {
                context: "mlp flat params",
                expected,
                got: flat.len(),
            });
        }
        let mut params = Self::zeros(hidden);
        let mut offset = 0;
        for part in [
            &mut params.w1,
            &mut params.b1,
            &mut params.w2,
            &mut params.b2,
            &mut params.w3,
            &mut params.b3,
        ] {
            let len = part.len();
            part.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(params)
    }

    /// In-place `theta -= step` with `step` in flattening order.
    pub fn apply_step(&mut self, step: &[f64]) -> Result<()> {
        if step.len() != self.param_count() {
            return Err(Error::Shape {
                context: "mlp update step",
                expected: self.param_count(),
                got: step.len(),
            });
        }
        let mut offset = 0;
        for part in [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ] {
            for value in part.iter_mut() {
                *value -= step[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
            .iter()
            .all(|part| part.iter().all(|v| v.is_finite()))
    }

    /// Forward pass keeping the activations needed for backprop.
    pub fn forward_traced(&self, obs: &[f64; OBS_DIM]) -> Result<(PolicyDistribution, MlpTrace)> {
        let h = self.hidden;
        let mut h1 = vec![0.0; h];
        for j in 0..h {
            let mut z = self.b1[j];
            for k in 0..OBS_DIM {
                z += self.w1[j * OBS_DIM + k] * obs[k];
            }
            h1[j] = z.tanh();
        }
        if !h1.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mlp hidden layer 1"));
        }
        let mut h2 = vec![0.0; h];
        for j in 0..h {
            let mut z = self.b2[j];
            for k in 0..h {
                z += self.w2[j * h + k] * h1[k];
            }
            h2[j] = z.tanh();
        }
        if !h2.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mlp hidden layer 2"));
        }
        let mut logits = [0.0; ACTION_DIM];
        for j in 0..ACTION_DIM {
            let mut z = self.b3[j];
            for k in 0..h {
                z += self.w3[j * h + k] * h2[k];
            }
            logits[j] = z;
        }
        if !logits.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mlp logit layer"));
        }
        Ok((PolicyDistribution::from_logits(logits), MlpTrace { h1, h2 }))
    }

    pub fn forward(&self, obs: &[f64; OBS_DIM]) -> Result<PolicyDistribution> {
        self.forward_traced(obs).map(|(dist, _)| dist)
    }

    /// Backpropagate an upstream logit gradient to every parameter.
    /// Returns the gradient in flattening order.
    pub fn backward(
        &self,
        obs: &[f64; OBS_DIM],
        trace: &MlpTrace,
        d_logits: [f64; ACTION_DIM],
    ) -> Vec<f64> {
        let h = self.hidden;
        let mut grad = vec![0.0; self.param_count()];
        let (gw1, rest) = grad.split_at_mut(h * OBS_DIM);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, rest) = rest.split_at_mut(h * h);
        let (gb2, rest) = rest.split_at_mut(h);
        let (gw3, gb3) = rest.split_at_mut(ACTION_DIM * h);

        // Logit layer.
        for j in 0..ACTION_DIM {
            gb3[j] = d_logits[j];
            for k in 0..h {
                gw3[j * h + k] = d_logits[j] * trace.h2[k];
            }
        }
        // Through tanh into layer 2.
        let mut dz2 = vec![0.0; h];
        for k in 0..h {
            let mut dh = 0.0;
            for j in 0..ACTION_DIM {
                dh += self.w3[j * h + k] * d_logits[j];
            }
            dz2[k] = dh * (1.0 - trace.h2[k] * trace.h2[k]);
        }
        for j in 0..h {
            gb2[j] = dz2[j];
            for k in 0..h {
                gw2[j * h + k] = dz2[j] * trace.h1[k];
            }
        }
        // Through tanh into layer 1.
        let mut dz1 = vec![0.0; h];
        for k in 0..h {
            let mut dh = 0.0;
            for j in 0..h {
                dh += self.w2[j * h + k] * dz2[j];
            }
            dz1[k] = dh * (1.0 - trace.h1[k] * trace.h1[k]);
        }
        for j in 0..h {
            gb1[j] = dz1[j];
            for k in 0..OBS_DIM {
                gw1[j * OBS_DIM + k] = dz1[j] * obs[k];
            }
        }
        grad
    }

    /// Gradient of `-weight * log pi(action | obs)` w.r.t. every parameter.
    pub fn logprob_gradient(
        &self,
        obs: &[f64; OBS_DIM],
        action: usize,
        weight: f64,
    ) -> Result<Vec<f64>> {
        let (dist, trace) = self.forward_traced(obs)?;
        let mut d_logits = [0.0; ACTION_DIM];
        for (j, d) in d_logits.iter_mut().enumerate() {
            let onehot = if j == action { 1.0 } else { 0.0 };
            *d = weight * (dist.probs[j] - onehot);
        }
        Ok(self.backward(obs, &trace, d_logits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    fn finite_difference<F>(f: F, flat: &[f64], h: f64) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut grad = vec![0.0; flat.len()];
        let mut probe = flat.to_vec();
        for i in 0..flat.len() {
            probe[i] = flat[i] + h;
            let plus = f(&probe);
            probe[i] = flat[i] - h;
            let minus = f(&probe);
            probe[i] = flat[i];
            grad[i] = (plus - minus) / (2.0 * h);
        }
        grad
    }

    #[test]
    fn zero_params_give_uniform_distribution() {
        let params = MlpParams::zeros(8);
        let dist = params.forward(&[0.4, -1.2, 0.03, 2.0]).unwrap();
        assert_eq!(dist.probs, [0.5, 0.5]);
        assert!((dist.entropy - LN_2).abs() < 1e-15);
    }

    #[test]
    fn parameter_count_formula() {
        assert_eq!(MlpParams::param_count_for(64), 4610);
        assert_eq!(MlpParams::zeros(8).param_count(), 32 + 8 + 64 + 8 + 16 + 2);
    }

    #[test]
    fn flatten_round_trips() {
        let mut rng = StreamRng::new(2);
        let params = MlpParams::init(6, &mut rng).unwrap();
        let flat = params.flatten();
        let back = MlpParams::from_flat(6, &flat).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn forward_matches_duplicate_arithmetic() {
        // Re-evaluate the network with independently written loops.
        let mut rng = StreamRng::new(77);
        let params = MlpParams::init(5, &mut rng).unwrap();
        let obs = [0.7, -0.3, 0.12, -1.5];
        let dist = params.forward(&obs).unwrap();

        let h = 5;
        let flat = params.flatten();
        let w1 = &flat[0..h * 4];
        let b1 = &flat[h * 4..h * 5];
        let w2 = &flat[h * 5..h * 5 + h * h];
        let b2 = &flat[h * 5 + h * h..h * 6 + h * h];
        let w3 = &flat[h * 6 + h * h..h * 8 + h * h];
        let b3 = &flat[h * 8 + h * h..];

        let h1: Vec<f64> = (0..h)
            .map(|j| (b1[j] + (0..4).map(|k| w1[j * 4 + k] * obs[k]).sum::<f64>()).tanh())
            .collect();
        let h2: Vec<f64> = (0..h)
            .map(|j| (b2[j] + (0..h).map(|k| w2[j * h + k] * h1[k]).sum::<f64>()).tanh())
            .collect();
        let logits: Vec<f64> = (0..2)
            .map(|j| b3[j] + (0..h).map(|k| w3[j * h + k] * h2[k]).sum::<f64>())
            .collect();
        let m = logits[0].max(logits[1]);
        let e0 = (logits[0] - m).exp();
        let e1 = (logits[1] - m).exp();
        let expect = [e0 / (e0 + e1), e1 / (e0 + e1)];

        assert!((dist.probs[0] - expect[0]).abs() < 1e-15);
        assert!((dist.probs[1] - expect[1]).abs() < 1e-15);
        assert!((dist.logits[0] - logits[0]).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_gives_zero_gradient() {
        let mut rng = StreamRng::new(3);
        let params = MlpParams::init(4, &mut rng).unwrap();
        let grad = params
            .logprob_gradient(&[0.1, 0.2, 0.3, 0.4], 1, 0.0)
            .unwrap();
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn zero_params_logit_gradient() {
        // Uniform probs: d(-log pi(0))/d logits = probs - onehot(0) = [-0.5, 0.5];
        // only the output bias picks it up (all activations are zero).
        let params = MlpParams::zeros(4);
        let grad = params
            .logprob_gradient(&[1.0, 0.0, 0.0, 0.0], 0, 1.0)
            .unwrap();
        let n = grad.len();
        assert!((grad[n - 2] - (-0.5)).abs() < 1e-15);
        assert!((grad[n - 1] - 0.5).abs() < 1e-15);
        assert!(grad[..n - 2].iter().all(|g| *g == 0.0));
    }

    #[test]
    fn logprob_gradient_matches_finite_differences() {
        let mut rng = StreamRng::new(4);
        for case in 0..20 {
            let hidden = 3 + (case % 3);
            let params = MlpParams::init(hidden, &mut rng).unwrap();
            let obs = [
                rng.uniform_in(-2.0, 2.0),
                rng.uniform_in(-2.0, 2.0),
                rng.uniform_in(-0.2, 0.2),
                rng.uniform_in(-2.0, 2.0),
            ];
            let action = (rng.next_u64() % 2) as usize;
            let weight = rng.uniform_in(-3.0, 3.0);

            let analytic = params.logprob_gradient(&obs, action, weight).unwrap();
            let flat = params.flatten();
            let numeric = finite_difference(
                |theta| {
                    let p = MlpParams::from_flat(hidden, theta).unwrap();
                    let dist = p.forward(&obs).unwrap();
                    -weight * dist.log_probs[action]
                },
                &flat,
                1e-5,
            );
            for (i, (a, n)) in analytic.iter().zip(numeric.iter()).enumerate() {
                let scale = a.abs().max(n.abs()).max(1e-6);
                assert!(
                    ((a - n) / scale).abs() < 1e-4,
                    "case {case} coord {i}: analytic {a} vs fd {n}"
                );
            }
        }
    }
}

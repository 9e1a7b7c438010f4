//! Deterministic CartPole dynamics with episode management, an optional
//! quadratic reward mode and Gaussian observation noise for robustness
//! sweeps.
//!
//! Physics constants and the explicit Euler integrator follow the
//! standard CartPole-v1 definition: force +/-10 N, g = 9.8, cart mass
//! 1.0, pole mass 0.1, half-length 0.5, dt = 0.02, horizon 500.

// Indexed loops mirror the matrix arithmetic they implement.
#![allow(clippy::needless_range_loop)]

#[allow(unused_imports)] // no_std float math; builds with std shadow it
use num_traits::Float;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_LIMIT: f64 = 2.4;
/// 12 degrees.
pub const THETA_LIMIT: f64 = 12.0 * core::f64::consts::PI / 180.0;
pub const DEFAULT_HORIZON: u32 = 500;

/// Cart position/velocity and pole angle/angular velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    pub fn is_failure(&self) -> bool {
        self.x.abs() > X_LIMIT || self.theta.abs() > THETA_LIMIT
    }
}

/// One explicit Euler step of the cart-pole equations of motion.
pub fn euler_step(state: &CartPoleState, action: usize) -> CartPoleState {
    let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
    let total_mass = CART_MASS + POLE_MASS;
    let polemass_length = POLE_MASS * POLE_HALF_LENGTH;

    let cos_theta = state.theta.cos();
    let sin_theta = state.theta.sin();
    let temp =
        (force + polemass_length * state.theta_dot * state.theta_dot * sin_theta) / total_mass;
    let theta_acc = (GRAVITY * sin_theta - cos_theta * temp)
        / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_theta * cos_theta / total_mass));
    let x_acc = temp - polemass_length * theta_acc * cos_theta / total_mass;

    CartPoleState {
        x: state.x + TAU * state.x_dot,
        x_dot: state.x_dot + TAU * x_acc,
        theta: state.theta + TAU * state.theta_dot,
        theta_dot: state.theta_dot + TAU * theta_acc,
    }
}

/// Reward assigned per step.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardMode {
    /// The standard benchmark reward: +1 for every step survived.
    UnitPerStep,
    /// `r = -(x' Q x + R u^2)` on the pre-step state, `u` in {-10, +10}.
    Quadratic { q: [[f64; 4]; 4], r: f64 },
}

impl RewardMode {
    /// Default weighting when the quadratic mode is enabled: angle
    /// weighted most heavily, small control cost.
    pub fn quadratic_default() -> Self {
        let mut q = [[0.0; 4]; 4];
        q[0][0] = 1.0;
        q[1][1] = 0.1;
        q[2][2] = 10.0;
        q[3][3] = 0.1;
        RewardMode::Quadratic { q, r: 0.001 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RewardMode::UnitPerStep => Ok(()),
            RewardMode::Quadratic { q, r } => {
                if !r.is_finite() || *r <= 0.0 {
                    return Err(Error::Config(alloc::format!(
                        "control weight R must be positive and finite, got {r}"
                    )));
                }
                for i in 0..4 {
                    for j in 0..4 {
                        if !q[i][j].is_finite() {
                            return Err(Error::NonFinite("state weight matrix Q"));
                        }
                        if (q[i][j] - q[j][i]).abs() > 1e-12 {
                            return Err(Error::Config(alloc::string::String::from(
                                "state weight matrix Q must be symmetric",
                            )));
                        }
                    }
                }
                let eigs = symmetric_eigenvalues_4x4(q);
                if eigs.iter().any(|e| *e < -1e-10) {
                    return Err(Error::Config(alloc::format!(
                        "state weight matrix Q must be positive semidefinite, min eigenvalue {}",
                        eigs.iter().cloned().fold(f64::INFINITY, f64::min)
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Eigenvalues of a symmetric 4x4 matrix by cyclic Jacobi rotations.
fn symmetric_eigenvalues_4x4(m: &[[f64; 4]; 4]) -> [f64; 4] {
    let mut a = *m;
    for _sweep in 0..50 {
        let mut off = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let diff = a[q][q] - a[p][p];
                let t = if diff.abs() < 1e-300 {
                    1.0
                } else {
                    let phi = diff / (2.0 * a[p][q]);
                    let sign = if phi >= 0.0 { 1.0 } else { -1.0 };
                    sign / (phi.abs() + (phi * phi + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut b = a;
                for k in 0..4 {
                    b[p][k] = c * a[p][k] - s * a[q][k];
                    b[q][k] = s * a[p][k] + c * a[q][k];
                }
                let mut next = b;
                for k in 0..4 {
                    next[k][p] = c * b[k][p] - s * b[k][q];
                    next[k][q] = s * b[k][p] + c * b[k][q];
                }
                a = next;
            }
        }
    }
    [a[0][0], a[1][1], a[2][2], a[3][3]]
}

/// Reward of the quadratic mode for a (state, action) pair.
pub fn quadratic_reward(state: &CartPoleState, action: usize, q: &[[f64; 4]; 4], r: f64) -> f64 {
    let x = state.as_array();
    let mut qx = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            qx += x[i] * q[i][j] * x[j];
        }
    }
    let u = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
    -(qx + r * u * u)
}

/// I.i.d. Gaussian noise added to each observation dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationNoiseSpec {
    sigma: f64,
}

impl ObservationNoiseSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::Config(alloc::format!(
                "observation noise sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(ObservationNoiseSpec { sigma })
    }

    pub fn none() -> Self {
        ObservationNoiseSpec { sigma: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// The measurement map: identity plus noise. With sigma = 0 the state is
/// returned exactly and no draws are consumed.
pub fn observe(
    state: &CartPoleState,
    noise: &ObservationNoiseSpec,
    rng: &mut StreamRng,
) -> [f64; 4] {
    let mut obs = state.as_array();
    if noise.sigma > 0.0 {
        for o in obs.iter_mut() {
            *o += noise.sigma * rng.normal();
        }
    }
    obs
}

/// Outcome of one environment step. Observations are produced separately
/// by [`observe`], so noise can never leak into the physics state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub state: CartPoleState,
    pub reward: f64,
    /// Failure: pole or cart left the allowed region.
    pub terminated: bool,
    /// Reached the step horizon without failing.
    pub truncated: bool,
}

/// Episode state machine around the pure dynamics.
#[derive(Debug, Clone)]
pub struct CartPole {
    state: CartPoleState,
    steps: u32,
    horizon: u32,
    reward_mode: RewardMode,
    finished: bool,
}

impl CartPole {
    pub fn new(reward_mode: RewardMode, horizon: u32) -> Result<Self> {
        reward_mode.validate()?;
        if horizon == 0 {
            return Err(Error::Config(alloc::string::String::from(
                "horizon must be positive",
            )));
        }
        Ok(CartPole {
            state: CartPoleState {
                x: 0.0,
                x_dot: 0.0,
                theta: 0.0,
                theta_dot: 0.0,
            },
            steps: 0,
            horizon,
            reward_mode,
            finished: true, // must reset before stepping
        })
    }

    pub fn standard() -> Self {
        Self::new(RewardMode::UnitPerStep, DEFAULT_HORIZON).expect("default config is valid")
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Start a new episode; every component is drawn uniform(-0.05, 0.05).
    pub fn reset(&mut self, rng: &mut StreamRng) -> CartPoleState {
        self.state = CartPoleState {
            x: rng.uniform_in(-0.05, 0.05),
            x_dot: rng.uniform_in(-0.05, 0.05),
            theta: rng.uniform_in(-0.05, 0.05),
            theta_dot: rng.uniform_in(-0.05, 0.05),
        };
        self.steps = 0;
        self.finished = false;
        self.state
    }

    /// Advance one step. Stepping a finished episode is an error.
    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.finished {
            return Err(Error::EpisodeOver);
        }
        let reward = match &self.reward_mode {
            RewardMode::UnitPerStep => 1.0,
            RewardMode::Quadratic { q, r } => quadratic_reward(&self.state, action, q, *r),
        };
        self.state = euler_step(&self.state, action);
        self.steps += 1;
        let terminated = self.state.is_failure();
        let truncated = !terminated && self.steps >= self.horizon;
        self.finished = terminated || truncated;
        Ok(StepResult {
            state: self.state,
            reward,
            terminated,
            truncated,
        })
    }

    /// Like [`CartPole::step`] but with additive Gaussian process noise
    /// `w ~ N(0, sigma_w^2 I)` on the post-integration state. A hook for
    /// plant-disturbance experiments; `sigma_w = 0` reduces to `step` and
    /// draws nothing. The benchmark runs never use it.
    pub fn step_with_process_noise(
        &mut self,
        action: usize,
        sigma_w: f64,
        rng: &mut StreamRng,
    ) -> Result<StepResult> {
        if !sigma_w.is_finite() || sigma_w < 0.0 {
            return Err(Error::Config(alloc::format!(
                "process noise sigma must be finite and >= 0, got {sigma_w}"
            )));
        }
        let mut result = self.step(action)?;
        if sigma_w > 0.0 {
            self.state.x += sigma_w * rng.normal();
            self.state.x_dot += sigma_w * rng.normal();
            self.state.theta += sigma_w * rng.normal();
            self.state.theta_dot += sigma_w * rng.normal();
            // Disturbance can push the state over a limit.
            let terminated = self.state.is_failure();
            self.finished = self.finished || terminated;
            result.state = self.state;
            result.terminated = result.terminated || terminated;
        }
        Ok(result)
    }
}

/// Replays an action sequence from a reset state; used by tests that need
/// full-trajectory reproducibility.
pub fn replay(
    env: &mut CartPole,
    rng: &mut StreamRng,
    actions: &[usize],
) -> Result<Vec<CartPoleState>> {
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(env.reset(rng));
    for &a in actions {
        let result = env.step(a)?;
        states.push(result.state);
        if result.terminated || result.truncated {
            break;
        }
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_range_and_determinism() {
        let mut env = CartPole::standard();
        for seed in 0..50u64 {
            let mut rng = StreamRng::new(seed);
            let state = env.reset(&mut rng);
            for v in state.as_array() {
                assert!((-0.05..=0.05).contains(&v));
            }
        }
        let mut a = StreamRng::new(9);
        let mut b = StreamRng::new(9);
        assert_eq!(env.reset(&mut a), env.reset(&mut b));
        let mut c = StreamRng::new(10);
        assert_ne!(env.reset(&mut a), env.reset(&mut c));
    }

    #[test]
    fn single_step_hand_derived_values() {
        let zero = CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
        };
        let next = euler_step(&zero, 1);
        assert!((next.x_dot - 0.19512).abs() < 1e-5, "x_dot {}", next.x_dot);
        assert!(
            (next.theta_dot - (-0.29268)).abs() < 1e-5,
            "theta_dot {}",
            next.theta_dot
        );
        assert_eq!(next.x, 0.0);
        assert_eq!(next.theta, 0.0);

        // Pushing the other way mirrors exactly.
        let mirror = euler_step(&zero, 0);
        assert_eq!(mirror.x_dot, -next.x_dot);
        assert_eq!(mirror.theta_dot, -next.theta_dot);
    }

    #[test]
    fn mirror_symmetry_of_dynamics() {
        let mut rng = StreamRng::new(21);
        for _ in 0..1000 {
            let state = CartPoleState {
                x: rng.uniform_in(-2.4, 2.4),
                x_dot: rng.uniform_in(-3.0, 3.0),
                theta: rng.uniform_in(-0.2, 0.2),
                theta_dot: rng.uniform_in(-3.0, 3.0),
            };
            let negated = CartPoleState {
                x: -state.x,
                x_dot: -state.x_dot,
                theta: -state.theta,
                theta_dot: -state.theta_dot,
            };
            let forward = euler_step(&state, 1);
            let mirrored = euler_step(&negated, 0);
            assert!((forward.x + mirrored.x).abs() < 1e-12);
            assert!((forward.x_dot + mirrored.x_dot).abs() < 1e-12);
            assert!((forward.theta + mirrored.theta).abs() < 1e-12);
            assert!((forward.theta_dot + mirrored.theta_dot).abs() < 1e-12);
        }
    }

    #[test]
    fn termination_on_angle() {
        let mut env = CartPole::standard();
        let mut rng = StreamRng::new(1);
        env.reset(&mut rng);
        env.state.theta = 0.29;
        env.state.theta_dot = 3.0;
        let result = env.step(1).unwrap();
        assert!(result.state.theta.abs() > THETA_LIMIT);
        assert!(result.terminated);
        assert!(!result.truncated);
        assert_eq!(env.step(0), Err(Error::EpisodeOver));
    }

    #[test]
    fn no_false_terminations() {
        let mut env = CartPole::standard();
        let mut rng = StreamRng::new(77);
        for _ in 0..200 {
            env.reset(&mut rng);
            loop {
                let action = (rng.next_u64() % 2) as usize;
                let result = env.step(action).unwrap();
                if !result.terminated {
                    assert!(result.state.x.abs() <= X_LIMIT);
                    assert!(result.state.theta.abs() <= THETA_LIMIT);
                }
                if result.terminated || result.truncated {
                    break;
                }
            }
        }
    }

    #[test]
    fn truncates_exactly_at_horizon() {
        // A short horizon and a balanced start keep the pole up long enough.
        let mut env = CartPole::new(RewardMode::UnitPerStep, 20).unwrap();
        let mut rng = StreamRng::new(3);
        env.reset(&mut rng);
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            // Bang-bang balance: push against the lean.
            let action = usize::from(env.state().theta > 0.0);
            let result = env.step(action).unwrap();
            total += result.reward;
            steps += 1;
            if result.terminated {
                panic!("balance controller fell over in {steps} steps");
            }
            if result.truncated {
                break;
            }
        }
        assert_eq!(steps, 20);
        assert_eq!(total, 20.0); // unit reward: return equals length
    }

    #[test]
    fn process_noise_hook_defaults_to_pure_dynamics() {
        let mut plain = CartPole::standard();
        let mut hooked = CartPole::standard();
        let mut rng_a = StreamRng::new(4);
        let mut rng_b = StreamRng::new(4);
        plain.reset(&mut rng_a);
        hooked.reset(&mut rng_b);
        let mut noise_rng = StreamRng::new(5);
        for i in 0..30 {
            let action = (i % 2) as usize;
            let a = plain.step(action).unwrap();
            let b = hooked
                .step_with_process_noise(action, 0.0, &mut noise_rng)
                .unwrap();
            assert_eq!(a, b);
            if a.terminated || a.truncated {
                break;
            }
        }

        // A nonzero disturbance actually moves the state.
        let mut disturbed = CartPole::standard();
        let mut rng_c = StreamRng::new(4);
        disturbed.reset(&mut rng_c);
        let result = disturbed
            .step_with_process_noise(0, 0.05, &mut noise_rng)
            .unwrap();
        let clean = {
            let mut env = CartPole::standard();
            let mut rng = StreamRng::new(4);
            env.reset(&mut rng);
            env.step(0).unwrap()
        };
        assert_ne!(result.state, clean.state);
        assert!(disturbed
            .step_with_process_noise(0, -1.0, &mut noise_rng)
            .is_err());
    }

    #[test]
    fn trajectories_replay_deterministically() {
        let actions: Vec<usize> = (0..60).map(|i| (i % 3 == 0) as usize).collect();
        let mut env_a = CartPole::standard();
        let mut env_b = CartPole::standard();
        let mut rng_a = StreamRng::new(5);
        let mut rng_b = StreamRng::new(5);
        let path_a = replay(&mut env_a, &mut rng_a, &actions).unwrap();
        let path_b = replay(&mut env_b, &mut rng_b, &actions).unwrap();
        assert_eq!(path_a, path_b);
    }

    #[test]
    fn observation_noise_statistics_and_scoping() {
        let state = CartPoleState {
            x: 0.3,
            x_dot: -0.1,
            theta: 0.02,
            theta_dot: 0.5,
        };
        let mut rng = StreamRng::new(6);

        let exact = observe(&state, &ObservationNoiseSpec::none(), &mut rng);
        assert_eq!(exact, state.as_array());

        let noise = ObservationNoiseSpec::new(0.05).unwrap();
        let n = 100_000;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(observe(&state, &noise, &mut rng)[0]);
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        assert!((std - 0.05).abs() / 0.05 < 0.02, "std {std}");
        // The physics state itself is untouched.
        assert_eq!(state.x, 0.3);
    }

    #[test]
    fn quadratic_reward_cases() {
        let zero = CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
        };
        let identity = {
            let mut q = [[0.0; 4]; 4];
            for (i, row) in q.iter_mut().enumerate() {
                row[i] = 1.0;
            }
            q
        };
        // Pure control cost: u^2 = 100.
        assert!((quadratic_reward(&zero, 1, &identity, 0.001) - (-0.1)).abs() < 1e-15);

        let zeros = [[0.0; 4]; 4];
        assert_eq!(quadratic_reward(&zero, 0, &zeros, 0.0), 0.0);

        let unit_x = CartPoleState {
            x: 1.0,
            x_dot: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
        };
        let mut q = [[0.0; 4]; 4];
        q[0][0] = 1.0;
        assert_eq!(quadratic_reward(&unit_x, 0, &q, 0.0), -1.0);
    }

    #[test]
    fn quadratic_mode_validates_q_and_r() {
        assert!(RewardMode::quadratic_default().validate().is_ok());

        let mut negative = [[0.0; 4]; 4];
        negative[2][2] = -1.0;
        assert!(matches!(
            (RewardMode::Quadratic {
                q: negative,
                r: 0.001
            })
            .validate(),
            Err(Error::Config(_))
        ));

        let mut asymmetric = [[0.0; 4]; 4];
        asymmetric[0][1] = 1.0;
        assert!(matches!(
            (RewardMode::Quadratic {
                q: asymmetric,
                r: 0.001
            })
            .validate(),
            Err(Error::Config(_))
        ));

        let q = [[0.0; 4]; 4];
        assert!(matches!(
            (RewardMode::Quadratic { q, r: 0.0 }).validate(),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn jacobi_eigenvalues_sanity() {
        // diag(1, 0.1, 10, 0.1) with a small symmetric perturbation.
        let mut q = [[0.0; 4]; 4];
        q[0][0] = 1.0;
        q[1][1] = 0.1;
        q[2][2] = 10.0;
        q[3][3] = 0.1;
        q[0][2] = 0.5;
        q[2][0] = 0.5;
        let mut eigs = symmetric_eigenvalues_4x4(&q);
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let trace: f64 = eigs.iter().sum();
        assert!((trace - 11.2).abs() < 1e-9, "trace {trace}");
        // Largest eigenvalue shifted slightly above 10 by the coupling.
        assert!(eigs[3] > 10.0 && eigs[3] < 10.1);
    }
}

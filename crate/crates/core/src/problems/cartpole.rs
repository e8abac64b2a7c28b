use super::{expect_outputs, Act, Problem};
use crate::error::{Error, Result};
use crate::inference::Activation;
use crate::rng::RngKey;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
/// Half the pole length.
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const FORCE_MAG: f64 = 10.0;
pub const DT: f64 = 0.02;
pub const X_LIMIT: f64 = 2.4;
pub const THETA_LIMIT: f64 = 12.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
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

    pub fn is_terminal(&self) -> bool {
        self.x.abs() > X_LIMIT || self.theta.abs() > THETA_LIMIT
    }
}

/// One explicit Euler step of the classic cart-pole equations. `force` is
/// clipped to ±10 N.
pub fn cartpole_step(s: CartPoleState, force: f64) -> Result<CartPoleState> {
    if !s.as_array().iter().all(|v| v.is_finite()) || !force.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let force = force.clamp(-FORCE_MAG, FORCE_MAG);
    let total_mass = CART_MASS + POLE_MASS;
    let pole_ml = POLE_MASS * POLE_HALF_LENGTH;
    let (sin, cos) = s.theta.sin_cos();
    let temp = (force + pole_ml * s.theta_dot * s.theta_dot * sin) / total_mass;
    let theta_acc = (GRAVITY * sin - cos * temp) / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
    let x_acc = temp - pole_ml * theta_acc * cos / total_mass;
    Ok(CartPoleState {
        x: s.x + DT * s.x_dot,
        x_dot: s.x_dot + DT * x_acc,
        theta: s.theta + DT * s.theta_dot,
        theta_dot: s.theta_dot + DT * theta_acc,
    })
}

/// Steps survived from `init`; the policy's single output in [-1, 1] is
/// scaled to a force.
pub fn run_episode(act: &mut Act<'_>, init: CartPoleState, max_steps: usize) -> Result<f64> {
    let mut s = init;
    for step in 0..max_steps {
        let out = act(&s.as_array())?;
        expect_outputs(&out, 1)?;
        s = cartpole_step(s, FORCE_MAG * out[0].clamp(-1.0, 1.0))?;
        if s.is_terminal() {
            return Ok((step + 1) as f64);
        }
    }
    Ok(max_steps as f64)
}

/// Episode from a uniform ±`perturbation` start drawn from `key`.
pub fn eval_cartpole(act: &mut Act<'_>, key: RngKey, max_steps: usize, perturbation: f64) -> Result<f64> {
    let mut r = key.stream();
    let mut draw = || (2.0 * r.uniform() - 1.0) * perturbation;
    let init = CartPoleState { x: draw(), x_dot: draw(), theta: draw(), theta_dot: draw() };
    run_episode(act, init, max_steps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPole {
    pub max_steps: usize,
    pub perturbation: f64,
}

impl Default for CartPole {
    fn default() -> Self {
        CartPole { max_steps: 500, perturbation: 0.05 }
    }
}

impl Problem for CartPole {
    fn name(&self) -> &str {
        "cartpole"
    }

    fn input_shape(&self) -> usize {
        4
    }

    fn output_shape(&self) -> usize {
        1
    }

    fn output_activation(&self) -> Activation {
        Activation::Tanh
    }

    fn evaluate(&self, key: RngKey, act: &mut Act<'_>) -> Result<f64> {
        eval_cartpole(act, key, self.max_steps, self.perturbation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium() {
        let s = cartpole_step(CartPoleState::default(), 0.0).unwrap();
        assert_eq!(s, CartPoleState::default());
        let mut idle = |_: &[f64]| Ok(vec![0.0]);
        assert_eq!(run_episode(&mut idle, CartPoleState::default(), 500).unwrap(), 500.0);
    }

    #[test]
    fn mirror_symmetry() {
        let s = CartPoleState { x: 0.1, x_dot: -0.2, theta: 0.05, theta_dot: 0.3 };
        let m = CartPoleState { x: -0.1, x_dot: 0.2, theta: -0.05, theta_dot: -0.3 };
        let a = cartpole_step(s, 3.0).unwrap();
        let b = cartpole_step(m, -3.0).unwrap();
        for (p, q) in a.as_array().iter().zip(b.as_array()) {
            assert_eq!(*p, -q);
        }
    }

    #[test]
    fn saturated_policy_fails_fast() {
        let mut push = |_: &[f64]| Ok(vec![1.0]);
        let f = eval_cartpole(&mut push, RngKey::from_seed(0), 500, 0.05).unwrap();
        assert!(f < 100.0, "{f}");
        let tilted = CartPoleState { theta: 0.3, ..Default::default() };
        assert!(tilted.is_terminal());
        assert_eq!(cartpole_step(CartPoleState { x: f64::NAN, ..Default::default() }, 0.0), Err(Error::NonFiniteState));
    }
}

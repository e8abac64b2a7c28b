//! Evaluation problems.
//!
//! A problem declares its input/output widths and the activation its output
//! nodes use, and scores one network through a forward closure.

mod cartpole;
mod func_fit;
mod xor;

pub use cartpole::{cartpole_step, eval_cartpole, CartPole, CartPoleState};
pub use func_fit::{eval_func_fit, FuncFit};
pub use xor::{eval_xor, Xor};

use crate::error::Result;
use crate::inference::Activation;
use crate::rng::RngKey;

/// Forward closure for one network: inputs to outputs.
pub type Act<'a> = dyn FnMut(&[f64]) -> Result<Vec<f64>> + 'a;

pub trait Problem: Send + Sync {
    fn name(&self) -> &str;
    fn input_shape(&self) -> usize;
    fn output_shape(&self) -> usize;
    fn output_activation(&self) -> Activation;
    /// Deterministic given `(key, network)`.
    fn is_pure(&self) -> bool {
        true
    }
    fn evaluate(&self, key: RngKey, act: &mut Act<'_>) -> Result<f64>;
}

pub(crate) fn expect_outputs(out: &[f64], n: usize) -> Result<()> {
    if out.len() != n {
        return Err(crate::Error::ShapeMismatch(format!("expected {n} outputs, got {}", out.len())));
    }
    Ok(())
}

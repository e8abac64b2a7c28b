use super::{expect_outputs, Act, Problem};
use crate::error::Result;
use crate::inference::Activation;
use crate::rng::RngKey;

/// `(x1, x2, bias) -> target`; the third input is a constant 1.0.
pub const XOR_CASES: [([f64; 3], f64); 4] = [
    ([0.0, 0.0, 1.0], 0.0),
    ([0.0, 1.0, 1.0], 1.0),
    ([1.0, 0.0, 1.0], 1.0),
    ([1.0, 1.0, 1.0], 0.0),
];

/// `4 - sum of squared errors`, outputs clamped to [0, 1].
pub fn eval_xor(act: &mut Act<'_>) -> Result<f64> {
    let mut err = 0.0;
    for (x, t) in XOR_CASES {
        let out = act(&x)?;
        expect_outputs(&out, 1)?;
        let o = out[0].clamp(0.0, 1.0);
        err += (t - o) * (t - o);
    }
    Ok(4.0 - err)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Xor;

impl Problem for Xor {
    fn name(&self) -> &str {
        "xor"
    }

    fn input_shape(&self) -> usize {
        3
    }

    fn output_shape(&self) -> usize {
        1
    }

    fn output_activation(&self) -> Activation {
        Activation::Sigmoid
    }

    fn evaluate(&self, _key: RngKey, act: &mut Act<'_>) -> Result<f64> {
        eval_xor(act)
    }
}

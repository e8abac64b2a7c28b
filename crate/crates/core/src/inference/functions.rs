use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Sum,
    Product,
    Max,
    Mean,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Identity,
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::Relu,
        Activation::Sin,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Relu => x.max(0.0),
            Activation::Sin => x.sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Sin => "sin",
        }
    }
}

impl Aggregation {
    pub const ALL: [Aggregation; 4] = [Aggregation::Sum, Aggregation::Product, Aggregation::Max, Aggregation::Mean];

    /// Reduces `xs` left to right. The empty input yields the reduction's
    /// identity (sum 0, product 1, mean 0); `max` of nothing is an error.
    pub fn apply(self, xs: &[f64]) -> Result<f64> {
        Ok(match self {
            Aggregation::Sum => xs.iter().fold(0.0, |acc, x| acc + x),
            Aggregation::Product => xs.iter().fold(1.0, |acc, x| acc * x),
            Aggregation::Max => {
                let (first, rest) = xs.split_first().ok_or(Error::EmptyAggregation)?;
                rest.iter().fold(*first, |acc, x| acc.max(*x))
            }
            Aggregation::Mean => {
                if xs.is_empty() {
                    0.0
                } else {
                    xs.iter().fold(0.0, |acc, x| acc + x) / xs.len() as f64
                }
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Sum => "sum",
            Aggregation::Product => "product",
            Aggregation::Max => "max",
            Aggregation::Mean => "mean",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Aggregation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

/// Applies the activation registered under `id` in `registry`.
pub fn apply_activation(registry: &[Activation], id: usize, x: f64) -> Result<f64> {
    registry
        .get(id)
        .map(|a| a.apply(x))
        .ok_or_else(|| Error::UnknownFunction(format!("activation id {id}")))
}

/// Applies the aggregation registered under `id` in `registry`.
pub fn apply_aggregation(registry: &[Aggregation], id: usize, xs: &[f64]) -> Result<f64> {
    registry
        .get(id)
        .ok_or_else(|| Error::UnknownFunction(format!("aggregation id {id}")))?
        .apply(xs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activation_values() {
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        assert_eq!(Activation::Relu.apply(-2.0), 0.0);
        assert_eq!(Activation::Relu.apply(2.0), 2.0);
        assert_eq!(Activation::Identity.apply(-3.5), -3.5);
        assert_eq!(Activation::Sin.apply(0.0), 0.0);
    }

    #[test]
    fn empty_aggregations() {
        assert_eq!(Aggregation::Sum.apply(&[]).unwrap(), 0.0);
        assert_eq!(Aggregation::Product.apply(&[]).unwrap(), 1.0);
        assert_eq!(Aggregation::Mean.apply(&[]).unwrap(), 0.0);
        assert_eq!(Aggregation::Max.apply(&[]), Err(Error::EmptyAggregation));
    }

    #[test]
    fn aggregation_values() {
        let xs = [1.0, -2.0, 4.0];
        assert_eq!(Aggregation::Sum.apply(&xs).unwrap(), 3.0);
        assert_eq!(Aggregation::Product.apply(&xs).unwrap(), -8.0);
        assert_eq!(Aggregation::Max.apply(&xs).unwrap(), 4.0);
        assert_eq!(Aggregation::Mean.apply(&xs).unwrap(), 1.0);
    }

    #[test]
    fn registry_lookup() {
        let acts = [Activation::Identity, Activation::Tanh];
        assert_eq!(apply_activation(&acts, 1, 0.0).unwrap(), 0.0);
        assert!(matches!(apply_activation(&acts, 2, 0.0), Err(Error::UnknownFunction(_))));
        assert!(matches!(apply_aggregation(&[Aggregation::Sum], 3, &[]), Err(Error::UnknownFunction(_))));
        assert_eq!("relu".parse::<Activation>().unwrap(), Activation::Relu);
        assert!("gauss".parse::<Activation>().is_err());
    }
}

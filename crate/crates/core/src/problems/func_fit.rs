use std::io::Read;
use std::path::Path;

use super::{expect_outputs, Act, Problem};
use crate::error::{Error, Result};
use crate::inference::Activation;
use crate::rng::RngKey;

/// `-mean squared error` over every sample and output column.
pub fn eval_func_fit(act: &mut Act<'_>, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!("{} input rows, {} target rows", inputs.len(), targets.len())));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, y) in inputs.iter().zip(targets) {
        let out = act(x)?;
        expect_outputs(&out, y.len())?;
        for (o, t) in out.iter().zip(y) {
            sum += (o - t) * (o - t);
            count += 1;
        }
    }
    Ok(-sum / count.max(1) as f64)
}

/// Regression against a fixed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncFit {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub output_activation: Activation,
}

impl FuncFit {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (ni, no) = (inputs[0].len(), targets.first().map_or(0, Vec::len));
        if inputs.len() != targets.len() || inputs.iter().any(|r| r.len() != ni) || targets.iter().any(|r| r.len() != no) {
            return Err(Error::ShapeMismatch("ragged dataset".into()));
        }
        Ok(FuncFit { inputs, targets, output_activation: Activation::Identity })
    }

    /// Comma-separated text with a header row; the last `num_outputs`
    /// columns are targets.
    pub fn from_csv_reader(reader: impl Read, num_outputs: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { line: i + 2, column: 0, message: e.to_string() })?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    v.parse::<f64>()
                        .map_err(|e| Error::Parse { line: i + 2, column: c + 1, message: format!("`{v}`: {e}") })
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() <= num_outputs {
                return Err(Error::ShapeMismatch(format!("row {} has {} columns", i + 2, row.len())));
            }
            let split = row.len() - num_outputs;
            inputs.push(row[..split].to_vec());
            targets.push(row[split..].to_vec());
        }
        FuncFit::new(inputs, targets)
    }

    pub fn from_csv(path: &Path, num_outputs: usize) -> Result<Self> {
        FuncFit::from_csv_reader(std::fs::File::open(path)?, num_outputs)
    }
}

impl Problem for FuncFit {
    fn name(&self) -> &str {
        "func_fit"
    }

    fn input_shape(&self) -> usize {
        self.inputs[0].len()
    }

    fn output_shape(&self) -> usize {
        self.targets[0].len()
    }

    fn output_activation(&self) -> Activation {
        self.output_activation
    }

    fn evaluate(&self, _key: RngKey, act: &mut Act<'_>) -> Result<f64> {
        eval_func_fit(act, &self.inputs, &self.targets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_predictor() {
        let xs = vec![vec![0.0], vec![1.0]];
        let ys = vec![vec![0.0], vec![2.0]];
        // -((c)^2 + (c-2)^2)/2 over a grid; minimum -1 at c = 1
        let mut best = f64::NEG_INFINITY;
        for i in 0..=200 {
            let c = i as f64 / 100.0;
            let f = eval_func_fit(&mut |_: &[f64]| Ok(vec![c]), &xs, &ys).unwrap();
            assert!((f + (c * c + (c - 2.0) * (c - 2.0)) / 2.0).abs() < 1e-12);
            best = best.max(f);
        }
        assert_eq!(best, -1.0);
    }

    #[test]
    fn self_fit_and_errors() {
        let xs = vec![vec![0.5], vec![-1.0]];
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] * 3.0]).collect();
        let f = eval_func_fit(&mut |x: &[f64]| Ok(vec![x[0] * 3.0]), &xs, &ys).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(eval_func_fit(&mut |_: &[f64]| Ok(vec![0.0]), &[], &[]), Err(Error::EmptyDataset));
        assert_eq!(FuncFit::new(vec![], vec![]), Err(Error::EmptyDataset));
    }

    #[test]
    fn csv_loading() {
        let text = "x1,x2,y\n0,1,1\n1,1,0\n";
        let p = FuncFit::from_csv_reader(text.as_bytes(), 1).unwrap();
        assert_eq!(p.inputs, vec![vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(p.targets, vec![vec![1.0], vec![0.0]]);
        assert_eq!(FuncFit::from_csv_reader("x,y\n".as_bytes(), 1), Err(Error::EmptyDataset));
        assert!(matches!(FuncFit::from_csv_reader("x,y\n1,abc\n".as_bytes(), 1), Err(Error::Parse { line: 2, column: 2, .. })));
    }
}

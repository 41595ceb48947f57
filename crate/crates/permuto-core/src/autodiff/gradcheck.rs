//! Central finite-difference gradient checking.
//!
//! The harness rebuilds the computation from scratch for every probe, so the
//! numerical estimate is independent of the tape's backward rules.

use super::{Tape, Var};
use crate::error::Result;
use crate::tensor::Tensor;

/// Outcome of one gradient check.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Compares tape gradients of a scalar-valued function against central
/// finite differences with step `h`, probing every entry of every input.
///
/// The relative error per entry is `|a - n| / max(1, |a|, |n|)`, so tiny
/// gradients are compared absolutely.
pub fn max_rel_error<F>(inputs: &[Tensor<f64>], f: F, h: f64) -> Result<GradCheckReport>
where
    F: Fn(&Tape<f64>, &[Var<f64>]) -> Result<Var<f64>>,
{
    // analytic gradients
    let tape = Tape::<f64>::new();
    let vars: Vec<Var<f64>> = inputs.iter().map(|t| tape.leaf(t.clone(), true)).collect();
    let loss = f(&tape, &vars)?;
    tape.backward(&loss)?;
    let analytic: Vec<Tensor<f64>> = vars
        .iter()
        .zip(inputs.iter())
        .map(|(v, t)| v.grad().unwrap_or_else(|| Tensor::zeros(t.rows(), t.cols())))
        .collect();

    let eval = |perturbed: &[Tensor<f64>]| -> Result<f64> {
        let tape = Tape::<f64>::new();
        let vars: Vec<Var<f64>> = perturbed.iter().map(|t| tape.leaf(t.clone(), false)).collect();
        Ok(f(&tape, &vars)?.value().item())
    };

    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    for i in 0..inputs.len() {
        for j in 0..inputs[i].len() {
            let orig = work[i].data()[j];
            work[i].data_mut()[j] = orig + h;
            let plus = eval(&work)?;
            work[i].data_mut()[j] = orig - h;
            let minus = eval(&work)?;
            work[i].data_mut()[j] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[i].data()[j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            if rel > max_rel {
                max_rel = rel;
            }
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        checked,
    })
}

//! Barycentric scatter/gather between points and lattice vertices.
//!
//! `splat` and `slice` are exact adjoints of each other as linear maps;
//! `gather` keeps the weighted per-vertex contributions separate instead of
//! summing them.

use crate::autodiff::Var;
use crate::error::{Error, Result};
use crate::lattice::SimplexAssignment;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::sync::Arc;

/// x_v = sum over contributing points of b_pv * f_p. Accumulation runs in
/// ascending point order for reproducibility.
pub(crate) fn splat_kernel<T: Scalar>(
    features: &Tensor<T>,
    assignment: &SimplexAssignment,
    num_vertices: usize,
) -> Tensor<T> {
    let cols = features.cols();
    let mut out = Tensor::zeros(num_vertices, cols);
    for p in 0..assignment.len() {
        let idx = assignment.vertex_indices(p);
        let wts = assignment.weights(p);
        let row = features.row(p);
        for (&v, &w) in idx.iter().zip(wts.iter()) {
            let w = T::of_f64(w);
            let dst = out.row_mut(v as usize);
            for (d, &s) in dst.iter_mut().zip(row.iter()) {
                *d += w * s;
            }
        }
    }
    out
}

/// f_p = sum over enclosing vertices of b_pv * x_v.
pub(crate) fn slice_kernel<T: Scalar>(
    values: &Tensor<T>,
    assignment: &SimplexAssignment,
) -> Tensor<T> {
    let cols = values.cols();
    let mut out = Tensor::zeros(assignment.len(), cols);
    for p in 0..assignment.len() {
        let idx = assignment.vertex_indices(p);
        let wts = assignment.weights(p);
        let dst = out.row_mut(p);
        for (&v, &w) in idx.iter().zip(wts.iter()) {
            let w = T::of_f64(w);
            let src = values.row(v as usize);
            for (d, &s) in dst.iter_mut().zip(src.iter()) {
                *d += w * s;
            }
        }
    }
    out
}

fn check_assignment<T: Scalar>(
    op: &'static str,
    input: &Var<T>,
    expected_rows: usize,
) -> Result<()> {
    if input.rows() != expected_rows {
        return Err(Error::ShapeMismatch {
            op,
            expected: format!("({}, _)", expected_rows),
            got: format!("{:?}", input.shape()),
        });
    }
    Ok(())
}

/// Interpolates point features onto the enclosing simplex vertices with
/// barycentric weights. Backward is `slice` with the same weights.
pub fn splat<T: Scalar>(
    features: &Var<T>,
    assignment: &Arc<SimplexAssignment>,
    num_vertices: usize,
) -> Result<Var<T>> {
    if features.cols() == 0 {
        return Err(Error::EmptyFeatures);
    }
    check_assignment("splat", features, assignment.len())?;
    let out = features.with_value(|f| splat_kernel(f, assignment, num_vertices));
    let id = features.id();
    let asg = Arc::clone(assignment);
    features.tape().record("splat", &[features], out, move |g, inner| {
        if inner.needs_grad(id) {
            let d = slice_kernel(g, &asg);
            inner.accumulate(id, d);
        }
    })
}

/// Interpolates vertex values back onto points with the splatting weights.
/// Backward is `splat` with the same weights.
pub fn slice<T: Scalar>(
    values: &Var<T>,
    assignment: &Arc<SimplexAssignment>,
    num_vertices: usize,
) -> Result<Var<T>> {
    check_assignment("slice", values, num_vertices)?;
    let out = values.with_value(|x| slice_kernel(x, assignment));
    let id = values.id();
    let asg = Arc::clone(assignment);
    let n = num_vertices;
    values.tape().record("slice", &[values], out, move |g, inner| {
        if inner.needs_grad(id) {
            let d = splat_kernel(g, &asg, n);
            inner.accumulate(id, d);
        }
    })
}

/// Per point, concatenates the weighted value blocks b_pv * x_v of the d+1
/// enclosing vertices in simplex enumeration order -> m × (d+1)·v_d.
pub fn gather<T: Scalar>(
    values: &Var<T>,
    assignment: &Arc<SimplexAssignment>,
    num_vertices: usize,
) -> Result<Var<T>> {
    check_assignment("gather", values, num_vertices)?;
    let vd = values.cols();
    let k = assignment.dim() + 1;
    let m = assignment.len();
    let out = values.with_value(|x| {
        let mut out = Tensor::zeros(m, k * vd);
        for p in 0..m {
            let idx = assignment.vertex_indices(p);
            let wts = assignment.weights(p);
            let dst = out.row_mut(p);
            for (slot, (&v, &w)) in idx.iter().zip(wts.iter()).enumerate() {
                let w = T::of_f64(w);
                let src = x.row(v as usize);
                for (c, &s) in src.iter().enumerate() {
                    dst[slot * vd + c] = w * s;
                }
            }
        }
        out
    });
    let id = values.id();
    let asg = Arc::clone(assignment);
    let n = num_vertices;
    values.tape().record("gather", &[values], out, move |g, inner| {
        if !inner.needs_grad(id) {
            return;
        }
        let mut d = Tensor::zeros(n, vd);
        for p in 0..m {
            let idx = asg.vertex_indices(p);
            let wts = asg.weights(p);
            let grow = g.row(p);
            for (slot, (&v, &w)) in idx.iter().zip(wts.iter()).enumerate() {
                let w = T::of_f64(w);
                let dst = d.row_mut(v as usize);
                for (c, dv) in dst.iter_mut().enumerate() {
                    *dv += w * grow[slot * vd + c];
                }
            }
        }
        inner.accumulate(id, d);
    })
}

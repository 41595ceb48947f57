//! The primitive op set: standard dense kernels with their backward rules.

use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::rc::Rc;

fn shape_err(op: &'static str, expected: String, got: String) -> Error {
    Error::ShapeMismatch { op, expected, got }
}

/// `a @ b`.
pub fn matmul<T: Scalar>(a: &Var<T>, b: &Var<T>) -> Result<Var<T>> {
    let out = a.with_value(|av| b.with_value(|bv| av.matmul(bv)))?;
    let (aid, bid) = (a.id(), b.id());
    a.tape().record("matmul", &[a, b], out, move |g, inner| {
        if inner.needs_grad(aid) {
            let db = g.matmul_nt(inner.value(bid)).expect("matmul backward a");
            inner.accumulate(aid, db);
        }
        if inner.needs_grad(bid) {
            let da = inner.value(aid).matmul_tn(g).expect("matmul backward b");
            inner.accumulate(bid, da);
        }
    })
}

/// Element-wise sum of two same-shape tensors.
pub fn add<T: Scalar>(a: &Var<T>, b: &Var<T>) -> Result<Var<T>> {
    let out = a.with_value(|av| b.with_value(|bv| av.add(bv)))?;
    let (aid, bid) = (a.id(), b.id());
    a.tape().record("add", &[a, b], out, move |g, inner| {
        inner.accumulate(aid, g.clone());
        inner.accumulate(bid, g.clone());
    })
}

/// Element-wise product of two same-shape tensors.
pub fn mul_elementwise<T: Scalar>(a: &Var<T>, b: &Var<T>) -> Result<Var<T>> {
    if a.shape() != b.shape() {
        return Err(shape_err(
            "mul_elementwise",
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    let out = a.with_value(|av| {
        b.with_value(|bv| {
            let mut o = av.clone();
            for (x, y) in o.data_mut().iter_mut().zip(bv.data()) {
                *x *= *y;
            }
            o
        })
    });
    let (aid, bid) = (a.id(), b.id());
    a.tape().record("mul_elementwise", &[a, b], out, move |g, inner| {
        if inner.needs_grad(aid) {
            let mut d = g.clone();
            for (x, y) in d.data_mut().iter_mut().zip(inner.value(bid).data()) {
                *x *= *y;
            }
            inner.accumulate(aid, d);
        }
        if inner.needs_grad(bid) {
            let mut d = g.clone();
            for (x, y) in d.data_mut().iter_mut().zip(inner.value(aid).data()) {
                *x *= *y;
            }
            inner.accumulate(bid, d);
        }
    })
}

/// Multiplies by a fixed scalar.
pub fn scale<T: Scalar>(x: &Var<T>, s: T) -> Result<Var<T>> {
    let out = x.with_value(|v| v.scale(s));
    let id = x.id();
    x.tape().record("scale", &[x], out, move |g, inner| {
        inner.accumulate(id, g.scale(s));
    })
}

/// Adds a 1×C bias row to every row of x.
pub fn add_row_broadcast<T: Scalar>(x: &Var<T>, bias: &Var<T>) -> Result<Var<T>> {
    let (rows, cols) = x.shape();
    if bias.shape() != (1, cols) {
        return Err(shape_err(
            "add_row_broadcast",
            format!("(1, {})", cols),
            format!("{:?}", bias.shape()),
        ));
    }
    let out = x.with_value(|xv| {
        bias.with_value(|bv| {
            let mut o = xv.clone();
            for r in 0..rows {
                for (v, b) in o.row_mut(r).iter_mut().zip(bv.data()) {
                    *v += *b;
                }
            }
            o
        })
    });
    let (xid, bid) = (x.id(), bias.id());
    x.tape().record("add_row_broadcast", &[x, bias], out, move |g, inner| {
        inner.accumulate(xid, g.clone());
        if inner.needs_grad(bid) {
            inner.accumulate(bid, g.sum_rows());
        }
    })
}

/// `x @ w + bias`.
pub fn linear<T: Scalar>(x: &Var<T>, w: &Var<T>, bias: &Var<T>) -> Result<Var<T>> {
    add_row_broadcast(&matmul(x, w)?, bias)
}

/// Rectified linear unit. The subgradient at exactly zero is zero.
pub fn relu<T: Scalar>(x: &Var<T>) -> Result<Var<T>> {
    let out = x.with_value(|v| v.map(|a| if a > T::zero() { a } else { T::zero() }));
    let id = x.id();
    x.tape().record("relu", &[x], out, move |g, inner| {
        if !inner.needs_grad(id) {
            return;
        }
        let mut d = g.clone();
        for (dv, &xv) in d.data_mut().iter_mut().zip(inner.value(id).data()) {
            if xv <= T::zero() {
                *dv = T::zero();
            }
        }
        inner.accumulate(id, d);
    })
}

/// Concatenates tensors along columns; all must share the row count.
pub fn concat_cols<T: Scalar>(parts: &[&Var<T>]) -> Result<Var<T>> {
    assert!(!parts.is_empty(), "concat_cols needs at least one input");
    let rows = parts[0].rows();
    let mut total = 0;
    for p in parts {
        if p.rows() != rows {
            return Err(shape_err(
                "concat_cols",
                format!("({}, _)", rows),
                format!("{:?}", p.shape()),
            ));
        }
        total += p.cols();
    }
    let mut out = Tensor::zeros(rows, total);
    let mut offset = 0;
    let mut spans = Vec::with_capacity(parts.len());
    for p in parts {
        let c = p.cols();
        p.with_value(|v| {
            for r in 0..rows {
                out.row_mut(r)[offset..offset + c].copy_from_slice(v.row(r));
            }
        });
        spans.push((p.id(), offset, c));
        offset += c;
    }
    parts[0]
        .tape()
        .record("concat_cols", parts, out, move |g, inner| {
            for &(id, off, c) in &spans {
                if !inner.needs_grad(id) {
                    continue;
                }
                let mut d = Tensor::zeros(rows, c);
                for r in 0..rows {
                    d.row_mut(r).copy_from_slice(&g.row(r)[off..off + c]);
                }
                inner.accumulate(id, d);
            }
        })
}

/// Sum of all entries -> 1×1.
pub fn sum<T: Scalar>(x: &Var<T>) -> Result<Var<T>> {
    let (rows, cols) = x.shape();
    let out = Tensor::scalar(x.with_value(|v| v.sum()));
    let id = x.id();
    x.tape().record("sum", &[x], out, move |g, inner| {
        let go = g.item();
        inner.accumulate(id, Tensor::from_vec(rows, cols, vec![go; rows * cols]));
    })
}

/// Fixed-weight contraction `sum(x * weights)` -> 1×1; the projection used
/// to reduce matrix-valued ops to a scalar in gradient checks.
pub fn weighted_sum<T: Scalar>(x: &Var<T>, weights: &Tensor<T>) -> Result<Var<T>> {
    if x.shape() != weights.shape() {
        return Err(shape_err(
            "weighted_sum",
            format!("{:?}", x.shape()),
            format!("{:?}", weights.shape()),
        ));
    }
    let total = x.with_value(|v| {
        v.data()
            .iter()
            .zip(weights.data())
            .fold(T::zero(), |acc, (&a, &w)| acc + a * w)
    });
    let id = x.id();
    let w = weights.clone();
    x.tape().record("weighted_sum", &[x], Tensor::scalar(total), move |g, inner| {
        inner.accumulate(id, w.scale(g.item()));
    })
}

/// Column-wise max over all rows -> 1×C. Gradient flows only to the argmax
/// row per column; ties go to the lowest row index.
pub fn max_over_rows<T: Scalar>(x: &Var<T>) -> Result<Var<T>> {
    let (rows, cols) = x.shape();
    assert!(rows > 0, "max_over_rows on empty tensor");
    let mut out = Tensor::zeros(1, cols);
    let mut argmax = vec![0u32; cols];
    x.with_value(|v| {
        for c in 0..cols {
            let mut best = v.get(0, c);
            let mut best_r = 0u32;
            for r in 1..rows {
                let val = v.get(r, c);
                if val > best {
                    best = val;
                    best_r = r as u32;
                }
            }
            out.set(0, c, best);
            argmax[c] = best_r;
        }
    });
    let id = x.id();
    x.tape().record("max_over_rows", &[x], out, move |g, inner| {
        let mut d = Tensor::zeros(rows, cols);
        for c in 0..cols {
            d.set(argmax[c] as usize, c, g.get(0, c));
        }
        inner.accumulate(id, d);
    })
}

/// Column-wise max within contiguous row segments -> (#segments)×C.
/// `offsets` has one more entry than segments; every segment must be
/// non-empty. Ties go to the lowest row index.
pub fn segment_max<T: Scalar>(x: &Var<T>, offsets: Rc<Vec<u32>>) -> Result<Var<T>> {
    let (rows, cols) = x.shape();
    let n = offsets.len() - 1;
    if offsets[n] as usize != rows {
        return Err(shape_err(
            "segment_max",
            format!("({}, _)", offsets[n]),
            format!("({}, {})", rows, cols),
        ));
    }
    let mut out = Tensor::zeros(n, cols);
    let mut argmax = vec![0u32; n * cols];
    x.with_value(|v| {
        for s in 0..n {
            let (lo, hi) = (offsets[s] as usize, offsets[s + 1] as usize);
            assert!(lo < hi, "empty segment {} in segment_max", s);
            for c in 0..cols {
                let mut best = v.get(lo, c);
                let mut best_r = lo as u32;
                for r in (lo + 1)..hi {
                    let val = v.get(r, c);
                    if val > best {
                        best = val;
                        best_r = r as u32;
                    }
                }
                out.set(s, c, best);
                argmax[s * cols + c] = best_r;
            }
        }
    });
    let id = x.id();
    x.tape().record("segment_max", &[x], out, move |g, inner| {
        let mut d = Tensor::zeros(rows, cols);
        for s in 0..n {
            for c in 0..cols {
                let r = argmax[s * cols + c] as usize;
                let cur = d.get(r, c);
                d.set(r, c, cur + g.get(s, c));
            }
        }
        inner.accumulate(id, d);
    })
}

/// Mean softmax cross-entropy over rows whose label is not the ignore
/// sentinel (-1). Labels must lie in [0, num_classes).
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Var<T>,
    labels: Rc<Vec<i32>>,
    num_classes: usize,
) -> Result<Var<T>> {
    let (rows, cols) = logits.shape();
    if cols != num_classes || labels.len() != rows {
        return Err(shape_err(
            "softmax_cross_entropy",
            format!("({}, {})", labels.len(), num_classes),
            format!("({}, {})", rows, cols),
        ));
    }
    let mut counted = 0usize;
    let mut total = 0.0f64;
    let mut probs = Tensor::zeros(rows, cols);
    logits.with_value(|v| -> Result<()> {
        for r in 0..rows {
            let label = labels[r];
            let row = v.row(r);
            let maxv = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
            let mut z = T::zero();
            for &x in row {
                z += (x - maxv).exp();
            }
            let logz = z.ln() + maxv;
            for c in 0..cols {
                probs.set(r, c, (row[c] - logz).exp());
            }
            if label < 0 {
                continue;
            }
            if label as usize >= num_classes {
                return Err(Error::InvalidSpec(format!(
                    "label {} out of range for {} classes",
                    label, num_classes
                )));
            }
            counted += 1;
            total += (logz - row[label as usize]).as_f64();
        }
        Ok(())
    })?;
    if counted == 0 {
        return Err(Error::AllIgnored);
    }
    let mean = T::of_f64(total / counted as f64);
    let id = logits.id();
    let probs = Rc::new(probs);
    let inv = T::of_f64(1.0 / counted as f64);
    logits
        .tape()
        .record("softmax_cross_entropy", &[logits], Tensor::scalar(mean), move |g, inner| {
            let go = g.item() * inv;
            let mut d = Tensor::zeros(rows, cols);
            for r in 0..rows {
                let label = labels[r];
                if label < 0 {
                    continue;
                }
                for c in 0..cols {
                    let p = probs.get(r, c);
                    let y = if c == label as usize { T::one() } else { T::zero() };
                    d.set(r, c, go * (p - y));
                }
            }
            inner.accumulate(id, d);
        })
}

/// Group normalization over the vertex axis: channels are split into
/// `groups` equal blocks, each standardized over all rows and its block of
/// channels, then scaled and shifted per channel.
pub fn group_norm<T: Scalar>(
    x: &Var<T>,
    groups: usize,
    gamma: &Var<T>,
    beta: &Var<T>,
    eps: f64,
) -> Result<Var<T>> {
    let (rows, cols) = x.shape();
    if groups == 0 || cols % groups != 0 {
        return Err(shape_err(
            "group_norm",
            format!("channels divisible by {} groups", groups),
            format!("({}, {})", rows, cols),
        ));
    }
    if gamma.shape() != (1, cols) || beta.shape() != (1, cols) {
        return Err(shape_err(
            "group_norm",
            format!("(1, {}) affine params", cols),
            format!("{:?} / {:?}", gamma.shape(), beta.shape()),
        ));
    }
    let gs = cols / groups;
    let count = T::of_f64((rows * gs) as f64);
    let epsilon = T::of_f64(eps);
    let mut xhat = Tensor::zeros(rows, cols);
    let mut inv_std = vec![T::zero(); groups];
    x.with_value(|v| {
        for g in 0..groups {
            let (c0, c1) = (g * gs, (g + 1) * gs);
            let mut mean = T::zero();
            for r in 0..rows {
                for c in c0..c1 {
                    mean += v.get(r, c);
                }
            }
            mean /= count;
            let mut var = T::zero();
            for r in 0..rows {
                for c in c0..c1 {
                    let d = v.get(r, c) - mean;
                    var += d * d;
                }
            }
            var /= count;
            let s = (var + epsilon).sqrt().recip();
            inv_std[g] = s;
            for r in 0..rows {
                for c in c0..c1 {
                    xhat.set(r, c, (v.get(r, c) - mean) * s);
                }
            }
        }
    });
    let mut out = Tensor::zeros(rows, cols);
    gamma.with_value(|gv| {
        beta.with_value(|bv| {
            for r in 0..rows {
                for c in 0..cols {
                    out.set(r, c, xhat.get(r, c) * gv.get(0, c) + bv.get(0, c));
                }
            }
        })
    });
    let (xid, gid, bid) = (x.id(), gamma.id(), beta.id());
    let xhat = Rc::new(xhat);
    let inv_std = Rc::new(inv_std);
    x.tape().record("group_norm", &[x, gamma, beta], out, move |g, inner| {
        if inner.needs_grad(gid) {
            let mut dg = Tensor::zeros(1, cols);
            for r in 0..rows {
                for c in 0..cols {
                    let cur = dg.get(0, c);
                    dg.set(0, c, cur + g.get(r, c) * xhat.get(r, c));
                }
            }
            inner.accumulate(gid, dg);
        }
        if inner.needs_grad(bid) {
            inner.accumulate(bid, g.sum_rows());
        }
        if inner.needs_grad(xid) {
            let gv = inner.value(gid).clone();
            let mut dx = Tensor::zeros(rows, cols);
            for grp in 0..groups {
                let (c0, c1) = (grp * gs, (grp + 1) * gs);
                // h = dL/dxhat; dx = s * (h - mean(h) - xhat * mean(h*xhat))
                let mut mean_h = T::zero();
                let mut mean_hx = T::zero();
                for r in 0..rows {
                    for c in c0..c1 {
                        let h = g.get(r, c) * gv.get(0, c);
                        mean_h += h;
                        mean_hx += h * xhat.get(r, c);
                    }
                }
                mean_h /= count;
                mean_hx /= count;
                let s = inv_std[grp];
                for r in 0..rows {
                    for c in c0..c1 {
                        let h = g.get(r, c) * gv.get(0, c);
                        dx.set(r, c, s * (h - mean_h - xhat.get(r, c) * mean_hx));
                    }
                }
            }
            inner.accumulate(xid, dx);
        }
    })
}

/// Convenience: a fresh tape plus a leaf per tensor, all requiring grad.
pub fn leaves<T: Scalar>(tape: &Tape<T>, tensors: &[Tensor<T>]) -> Vec<Var<T>> {
    tensors.iter().map(|t| tape.leaf(t.clone(), true)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_records_output_shape() {
        let tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::zeros(2, 3), true);
        let b = tape.leaf(Tensor::zeros(3, 4), true);
        assert_eq!(matmul(&a, &b).unwrap().shape(), (2, 4));
        let c = tape.leaf(Tensor::zeros(2, 2), true);
        assert!(matches!(
            matmul(&a, &c),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn relu_subgradient_at_kink_is_zero() {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::from_vec(1, 3, vec![-2.0, 0.0, 3.0]), true);
        let y = relu(&x).unwrap();
        let loss = sum(&y).unwrap();
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn uniform_logits_loss_is_ln_k() {
        let tape = Tape::<f64>::new();
        let k = 5;
        let logits = tape.leaf(Tensor::zeros(3, k), true);
        let labels = Rc::new(vec![0, 2, 4]);
        let loss = softmax_cross_entropy(&logits, labels, k).unwrap();
        assert!((loss.value().item() - (k as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_ignores_sentinel_and_errors_when_all_ignored() {
        let tape = Tape::<f64>::new();
        let logits = tape.leaf(Tensor::zeros(2, 3), true);
        let loss =
            softmax_cross_entropy(&logits, Rc::new(vec![-1, 1]), 3).unwrap();
        assert!((loss.value().item() - 3.0f64.ln()).abs() < 1e-12);
        let logits2 = tape.leaf(Tensor::zeros(2, 3), true);
        assert!(matches!(
            softmax_cross_entropy(&logits2, Rc::new(vec![-1, -1]), 3),
            Err(Error::AllIgnored)
        ));
    }

    #[test]
    fn max_over_rows_routes_gradient_to_argmax() {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(
            Tensor::from_vec(3, 2, vec![1.0, 5.0, 4.0, 5.0, 2.0, 0.0]),
            true,
        );
        let m = max_over_rows(&x).unwrap();
        assert_eq!(m.value().data(), &[4.0, 5.0]);
        let loss = sum(&m).unwrap();
        tape.backward(&loss).unwrap();
        // ties in column 1 go to the lowest row
        assert_eq!(
            x.grad().unwrap().data(),
            &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn segment_max_is_permutation_invariant_within_segments() {
        let tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::from_vec(4, 2, vec![1.0, 9.0, 7.0, 2.0, 3.0, 4.0, 5.0, 0.0]));
        let offsets = Rc::new(vec![0u32, 2, 4]);
        let a = segment_max(&x, offsets.clone()).unwrap().value();
        let shuffled = tape.constant(Tensor::from_vec(
            4,
            2,
            vec![7.0, 2.0, 1.0, 9.0, 5.0, 0.0, 3.0, 4.0],
        ));
        let b = segment_max(&shuffled, offsets).unwrap().value();
        assert_eq!(a, b);
    }

    #[test]
    fn group_norm_standardizes_single_group() {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(
            Tensor::from_fn(4, 6, |r, c| (r * 6 + c) as f64 * 0.7 - 2.0),
            true,
        );
        let gamma = tape.leaf(Tensor::from_vec(1, 6, vec![1.0; 6]), true);
        let beta = tape.leaf(Tensor::zeros(1, 6), true);
        let y = group_norm(&x, 1, &gamma, &beta, 1e-5).unwrap().value();
        let mean: f64 = y.data().iter().sum::<f64>() / 24.0;
        let var: f64 = y.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 24.0;
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    fn group_norm_constant_input_returns_bias() {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::from_vec(3, 4, vec![2.5; 12]), true);
        let gamma = tape.leaf(Tensor::from_vec(1, 4, vec![1.0; 4]), true);
        let beta = tape.leaf(Tensor::from_vec(1, 4, vec![0.3; 4]), true);
        let y = group_norm(&x, 2, &gamma, &beta, 1e-5).unwrap().value();
        for &v in y.data() {
            assert!((v - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_is_linear_for_linear_ops() {
        // grad of (alpha f + beta g) equals alpha grad f + beta grad g
        let weights = Tensor::from_vec(2, 2, vec![0.5, -1.0, 2.0, 0.25]);
        let x0 = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let (alpha, beta) = (1.7, -0.4);

        let grad_of = |wa: f64, wb: f64| -> Tensor<f64> {
            let tape = Tape::<f64>::new();
            let x = tape.leaf(x0.clone(), true);
            let w = tape.constant(weights.clone());
            let f = sum(&matmul(&x, &w).unwrap()).unwrap();
            let g = sum(&x).unwrap();
            let fa = scale(&f, wa).unwrap();
            let gb = scale(&g, wb).unwrap();
            let loss = add(&fa, &gb).unwrap();
            tape.backward(&loss).unwrap();
            x.grad().unwrap()
        };

        let combined = grad_of(alpha, beta);
        let f_only = grad_of(1.0, 0.0);
        let g_only = grad_of(0.0, 1.0);
        for i in 0..4 {
            let expect = alpha * f_only.data()[i] + beta * g_only.data()[i];
            assert!((combined.data()[i] - expect).abs() < 1e-12);
        }
    }
}

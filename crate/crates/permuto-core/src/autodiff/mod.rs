//! Reverse-mode differentiation on a linear tape.
//!
//! Each operator records its output together with a hand-written backward
//! closure; `backward` walks the tape in reverse and accumulates gradients
//! into every node that requires them. There is no graph optimization — the
//! op set is small and every rule is auditable.

mod gradcheck;
mod primitives;

pub use gradcheck::{max_rel_error, GradCheckReport};
pub use primitives::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::cell::RefCell;
use std::rc::Rc;

/// Recording tape. Cloning the handle shares the underlying storage;
/// recording is single-threaded by construction.
pub struct Tape<T: Scalar> {
    inner: Rc<RefCell<TapeInner<T>>>,
}

impl<T: Scalar> Clone for Tape<T> {
    fn clone(&self) -> Self {
        Tape {
            inner: Rc::clone(&self.inner),
        }
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

pub struct TapeInner<T: Scalar> {
    nodes: Vec<Node<T>>,
    ops: Vec<OpRecord<T>>,
    done: bool,
    nan_check: bool,
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    grad: Option<Tensor<T>>,
    requires_grad: bool,
}

struct OpRecord<T: Scalar> {
    #[allow(dead_code)]
    name: &'static str,
    out: usize,
    backward: Box<dyn Fn(&Tensor<T>, &mut TapeInner<T>)>,
}

/// Handle to one tensor on the tape.
pub struct Var<T: Scalar> {
    tape: Tape<T>,
    id: usize,
}

impl<T: Scalar> Clone for Var<T> {
    fn clone(&self) -> Self {
        Var {
            tape: self.tape.clone(),
            id: self.id,
        }
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            inner: Rc::new(RefCell::new(TapeInner {
                nodes: Vec::new(),
                ops: Vec::new(),
                done: false,
                nan_check: false,
            })),
        }
    }

    /// Enables finiteness checks on every recorded output.
    pub fn set_nan_check(&self, on: bool) {
        self.inner.borrow_mut().nan_check = on;
    }

    /// Creates a leaf node (parameter or input data).
    pub fn leaf(&self, value: Tensor<T>, requires_grad: bool) -> Var<T> {
        let mut inner = self.inner.borrow_mut();
        let id = inner.nodes.len();
        inner.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
        });
        Var {
            tape: self.clone(),
            id,
        }
    }

    /// Leaf that never receives gradient.
    pub fn constant(&self, value: Tensor<T>) -> Var<T> {
        self.leaf(value, false)
    }

    /// Records one operator application: stores the output and, when any
    /// input requires gradient, the backward closure.
    pub fn record(
        &self,
        name: &'static str,
        inputs: &[&Var<T>],
        output: Tensor<T>,
        backward: impl Fn(&Tensor<T>, &mut TapeInner<T>) + 'static,
    ) -> Result<Var<T>> {
        let mut inner = self.inner.borrow_mut();
        if inner.nan_check && !output.all_finite() {
            return Err(Error::NonFinite { op: name });
        }
        let requires = inputs.iter().any(|v| inner.nodes[v.id].requires_grad);
        let id = inner.nodes.len();
        inner.nodes.push(Node {
            value: output,
            grad: None,
            requires_grad: requires,
        });
        if requires {
            inner.ops.push(OpRecord {
                name,
                out: id,
                backward: Box::new(backward),
            });
        }
        Ok(Var {
            tape: self.clone(),
            id,
        })
    }

    /// Propagates gradients from a scalar loss through the recorded ops.
    pub fn backward(&self, loss: &Var<T>) -> Result<()> {
        let mut inner = self.inner.borrow_mut();
        let (rows, cols) = inner.nodes[loss.id].value.shape();
        if (rows, cols) != (1, 1) {
            return Err(Error::NonScalarLoss { rows, cols });
        }
        if inner.done {
            return Err(Error::BackwardTwice);
        }
        inner.done = true;
        inner.nodes[loss.id].grad = Some(Tensor::scalar(T::one()));
        let ops = std::mem::take(&mut inner.ops);
        for op in ops.iter().rev() {
            let grad = match &inner.nodes[op.out].grad {
                Some(g) => g.clone(),
                None => continue,
            };
            (op.backward)(&grad, &mut inner);
        }
        inner.ops = ops;
        Ok(())
    }

    /// Clears gradients and re-arms the tape for another backward pass.
    pub fn zero_grad(&self) {
        let mut inner = self.inner.borrow_mut();
        inner.done = false;
        for node in inner.nodes.iter_mut() {
            node.grad = None;
        }
    }

    /// Number of recorded operator applications.
    pub fn op_count(&self) -> usize {
        self.inner.borrow().ops.len()
    }
}

impl<T: Scalar> TapeInner<T> {
    pub fn value(&self, id: usize) -> &Tensor<T> {
        &self.nodes[id].value
    }

    pub fn needs_grad(&self, id: usize) -> bool {
        self.nodes[id].requires_grad
    }

    /// Adds `delta` into the gradient buffer of node `id` (no-op when the
    /// node does not require gradient).
    pub fn accumulate(&mut self, id: usize, delta: Tensor<T>) {
        let node = &mut self.nodes[id];
        if !node.requires_grad {
            return;
        }
        match &mut node.grad {
            Some(g) => g.add_assign(&delta),
            None => node.grad = Some(delta),
        }
    }
}

impl<T: Scalar> Var<T> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &Tape<T> {
        &self.tape
    }

    pub fn value(&self) -> Tensor<T> {
        self.tape.inner.borrow().nodes[self.id].value.clone()
    }

    /// Zero-copy access to the stored value.
    pub fn with_value<R>(&self, f: impl FnOnce(&Tensor<T>) -> R) -> R {
        f(&self.tape.inner.borrow().nodes[self.id].value)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.inner.borrow().nodes[self.id].value.shape()
    }

    pub fn rows(&self) -> usize {
        self.shape().0
    }

    pub fn cols(&self) -> usize {
        self.shape().1
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.inner.borrow().nodes[self.id].requires_grad
    }

    pub fn grad(&self) -> Option<Tensor<T>> {
        self.tape.inner.borrow().nodes[self.id].grad.clone()
    }
}

//! Dense row-major matrix used for lattice values, activations and parameters.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A rows x cols matrix with contiguous row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data length mismatch");
        Tensor { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Tensor { rows, cols, data }
    }

    pub fn scalar(v: T) -> Self {
        Tensor {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn item(&self) -> T {
        assert_eq!(self.data.len(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn add_assign(&mut self, other: &Tensor<T>) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op: "add",
                expected: format!("{:?}", self.shape()),
                got: format!("{:?}", other.shape()),
            });
        }
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    /// `self @ other`, self m×k, other k×n.
    pub fn matmul(&self, other: &Tensor<T>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                expected: format!("({}, k) x (k, n)", self.rows),
                got: format!("({}, {}) x ({}, {})", self.rows, self.cols, other.rows, other.cols),
            });
        }
        let mut out = Tensor::zeros(self.rows, other.cols);
        T::gemm(
            self.rows,
            self.cols,
            other.cols,
            T::one(),
            &self.data,
            &other.data,
            T::zero(),
            &mut out.data,
        );
        Ok(out)
    }

    /// `self^T @ other`, self k×m, other k×n -> m×n.
    pub fn matmul_tn(&self, other: &Tensor<T>) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul_tn",
                expected: format!("(k, {}) x (k, n)", self.cols),
                got: format!("({}, {}) x ({}, {})", self.rows, self.cols, other.rows, other.cols),
            });
        }
        Ok(self.transpose().matmul(other).expect("shape checked"))
    }

    /// `self @ other^T`, self m×k, other n×k -> m×n.
    pub fn matmul_nt(&self, other: &Tensor<T>) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                op: "matmul_nt",
                expected: format!("({}, k) x (n, k)", self.rows),
                got: format!("({}, {}) x ({}, {})", self.rows, self.cols, other.rows, other.cols),
            });
        }
        Ok(self.matmul(&other.transpose()).expect("shape checked"))
    }

    pub fn transpose(&self) -> Self {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Sum of all entries.
    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Column-wise sum -> 1×cols.
    pub fn sum_rows(&self) -> Self {
        let mut out = Tensor::zeros(1, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c] += self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Convert element-wise through f64.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::of_f64(v.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_hand_product() {
        let a = Tensor::from_vec(2, 3, vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Tensor::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_shape_error() {
        let a = Tensor::<f64>::zeros(2, 3);
        let b = Tensor::<f64>::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn transpose_round_trip() {
        let a = Tensor::from_fn(3, 4, |r, c| (r * 4 + c) as f32);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn tn_and_nt_agree_with_explicit_transpose() {
        let a = Tensor::from_fn(4, 3, |r, c| (r + 2 * c) as f64);
        let b = Tensor::from_fn(4, 2, |r, c| (r * c) as f64 + 1.0);
        assert_eq!(a.matmul_tn(&b).unwrap(), a.transpose().matmul(&b).unwrap());
        let c = Tensor::from_fn(5, 3, |r, c| (r * 3 + c) as f64);
        assert_eq!(a.matmul_nt(&c).unwrap(), a.matmul(&c.transpose()).unwrap());
    }
}

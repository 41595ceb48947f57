//! Differentiable sparse permutohedral lattice library.
//!
//! A point cloud is embedded into a sparse permutohedral lattice where
//! convolutions run efficiently, and features are interpolated back onto the
//! points. Every lattice operator carries a hand-written backward rule on a
//! reverse-mode tape, so the whole segmentation network is trainable end to
//! end on the CPU.

pub mod autodiff;
pub mod cloud;
pub mod error;
pub mod io;
pub mod lattice;
pub mod model;
pub mod ops;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use lattice::{LatticeCoord, SimplexAssignment, SparseLattice};
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Single-precision tensor, the default for training.
pub type Tensor32 = Tensor<f32>;
/// Double-precision tensor, used for gradient checking.
pub type Tensor64 = Tensor<f64>;
/// Single-precision tape.
pub type Tape32 = autodiff::Tape<f32>;
/// Double-precision tape.
pub type Tape64 = autodiff::Tape<f64>;

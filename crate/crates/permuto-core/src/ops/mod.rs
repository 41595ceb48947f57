//! Differentiable lattice operators.


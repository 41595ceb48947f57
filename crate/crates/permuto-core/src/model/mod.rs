//! Network assembly.


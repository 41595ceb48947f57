//! Training loop and metrics.


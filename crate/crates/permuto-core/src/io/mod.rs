//! File formats and dataset generation.


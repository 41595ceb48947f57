//! Point clouds: positions, optional per-point features and labels.

use crate::error::{Error, Result};

/// Label value marking points excluded from loss and metrics.
pub const IGNORE_LABEL: i32 = -1;

/// A point cloud with m points in d dimensions.
///
/// Positions are kept in f64; all lattice geometry runs in double precision.
/// `sigma` is the per-axis lattice scale: lattice operations act on the
/// scaled positions `G / sigma`.
#[derive(Clone, Debug)]
pub struct PointCloud {
    dim: usize,
    feature_dim: usize,
    /// m×d row-major positions.
    positions: Vec<f64>,
    /// m×feature_dim row-major features. May be empty (feature_dim = 0).
    features: Vec<f64>,
    labels: Option<Vec<i32>>,
    sigma: Vec<f64>,
    /// Feature column layout; rgb columns come before normal columns.
    pub has_rgb: bool,
    pub has_normals: bool,
}

impl PointCloud {
    pub fn new(
        dim: usize,
        positions: Vec<f64>,
        feature_dim: usize,
        features: Vec<f64>,
        labels: Option<Vec<i32>>,
        sigma: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCloud("dimension must be positive".into()));
        }
        if positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::InvalidCloud(format!(
                "positions length {} is not a positive multiple of dim {}",
                positions.len(),
                dim
            )));
        }
        let m = positions.len() / dim;
        if features.len() != m * feature_dim {
            return Err(Error::InvalidCloud(format!(
                "features length {} does not match {} points x {} columns",
                features.len(),
                m,
                feature_dim
            )));
        }
        if let Some(l) = &labels {
            if l.len() != m {
                return Err(Error::InvalidCloud(format!(
                    "labels length {} does not match {} points",
                    l.len(),
                    m
                )));
            }
        }
        if sigma.len() != dim || sigma.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "sigma must be {} positive finite values, got {:?}",
                dim, sigma
            )));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCloud("non-finite position".into()));
        }
        Ok(PointCloud {
            dim,
            feature_dim,
            positions,
            features,
            labels,
            sigma,
            has_rgb: false,
            has_normals: false,
        })
    }

    /// Positions only, unit sigma.
    pub fn from_positions(dim: usize, positions: Vec<f64>) -> Result<Self> {
        let sigma = vec![1.0; dim];
        PointCloud::new(dim, positions, 0, Vec::new(), None, sigma)
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // m >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn position(&self, p: usize) -> &[f64] {
        &self.positions[p * self.dim..(p + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub fn feature(&self, p: usize) -> &[f64] {
        &self.features[p * self.feature_dim..(p + 1) * self.feature_dim]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn features_mut(&mut self) -> &mut [f64] {
        &mut self.features
    }

    pub fn labels(&self) -> Option<&[i32]> {
        self.labels.as_deref()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn set_sigma(&mut self, sigma: Vec<f64>) -> Result<()> {
        if sigma.len() != self.dim || sigma.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "sigma must be {} positive finite values, got {:?}",
                self.dim, sigma
            )));
        }
        self.sigma = sigma;
        Ok(())
    }

    /// Scaled position `g_p / sigma` of point p.
    pub fn scaled_position(&self, p: usize, out: &mut [f64]) {
        let g = self.position(p);
        for i in 0..self.dim {
            out[i] = g[i] / self.sigma[i];
        }
    }

    /// All scaled positions, m×d row-major.
    pub fn scaled_positions(&self) -> Vec<f64> {
        let m = self.len();
        let mut out = vec![0.0; m * self.dim];
        for p in 0..m {
            for i in 0..self.dim {
                out[p * self.dim + i] = self.positions[p * self.dim + i] / self.sigma[i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_cloud() {
        assert!(PointCloud::from_positions(3, vec![]).is_err());
    }

    #[test]
    fn rejects_bad_sigma() {
        let err = PointCloud::new(2, vec![0.0, 0.0], 0, vec![], None, vec![1.0, 0.0]);
        assert!(err.is_err());
    }

    #[test]
    fn scaled_positions_divide_by_sigma() {
        let cloud =
            PointCloud::new(2, vec![2.0, 3.0], 0, vec![], None, vec![2.0, 1.5]).unwrap();
        assert_eq!(cloud.scaled_positions(), vec![1.0, 2.0]);
    }
}

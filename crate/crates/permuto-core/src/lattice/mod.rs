//! Sparse permutohedral lattice: vertex storage, enclosing-simplex
//! assignment of points, and the coarse/fine level hierarchy.

mod coord;
mod simplex;

pub use coord::{
    coarse_neighbors_of_fine, coord_is_congruent, coord_is_valid, fine_neighbors_of_coarse, neighbor_coord,
    neighbor_offset, CoarseCandidates, LatticeCoord, NeighborOffsets,
};
pub use simplex::{
    elevate, elevate_vec, elevation_factors, elevation_scale, find_enclosing_simplex, unelevate,
    EnclosingSimplex,
};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hash, Hasher};
use std::sync::{Arc, OnceLock};

/// Row index a tap table stores when a neighbor is not allocated.
pub const NO_VERTEX: i64 = -1;

/// Multiplicative 64-bit hash over coordinate components. The map resolves
/// collisions by full-key comparison.
#[derive(Default)]
pub struct CoordHasher(u64);

impl Hasher for CoordHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        }
    }

    fn write_i32(&mut self, v: i32) {
        self.0 = (self.0 ^ v as u32 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
}

/// Hash key over the first d coordinates; the last is determined by the
/// zero-sum invariant. Equality still compares the full key.
#[derive(PartialEq, Eq, Clone)]
struct CoordKey(Box<[i32]>);

impl Hash for CoordKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for &c in &self.0[..self.0.len() - 1] {
            state.write_i32(c);
        }
    }
}

type CoordMap = HashMap<CoordKey, u32, BuildHasherDefault<CoordHasher>>;

/// Per-point simplex assignment: the d+1 enclosing vertex rows and their
/// barycentric weights, in the vertex enumeration order produced by
/// `find_enclosing_simplex`.
#[derive(Clone, Debug)]
pub struct SimplexAssignment {
    dim: usize,
    len: usize,
    indices: Vec<u32>,
    weights: Vec<f64>,
}

impl SimplexAssignment {
    /// Assembles an assignment from raw parts; lengths must be m·(d+1).
    pub fn from_parts(dim: usize, indices: Vec<u32>, weights: Vec<f64>) -> Result<Self> {
        let k = dim + 1;
        if indices.len() != weights.len() || indices.len() % k != 0 {
            return Err(Error::InvalidCloud(format!(
                "assignment parts must be m*{} long, got {} indices and {} weights",
                k,
                indices.len(),
                weights.len()
            )));
        }
        Ok(SimplexAssignment {
            dim,
            len: indices.len() / k,
            indices,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of assigned points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The d+1 vertex rows enclosing point p.
    pub fn vertex_indices(&self, p: usize) -> &[u32] {
        let k = self.dim + 1;
        &self.indices[p * k..(p + 1) * k]
    }

    /// Barycentric weights of point p, matching `vertex_indices` order.
    pub fn weights(&self, p: usize) -> &[f64] {
        let k = self.dim + 1;
        &self.weights[p * k..(p + 1) * k]
    }
}

/// Hash-keyed sparse vertex set of one lattice level.
///
/// Construction is single-threaded and assigns row indices in
/// first-encounter order while scanning points in input order, so builds are
/// reproducible. After construction the lattice is immutable and safe to
/// share across threads.
pub struct SparseLattice {
    dim: usize,
    level: u32,
    coords: Vec<i32>,
    index: CoordMap,
    /// J_v: contributing point indices per vertex, ascending.
    points: Vec<Vec<u32>>,
    conv_taps: OnceLock<Arc<Vec<i64>>>,
}

impl SparseLattice {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of allocated vertices.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Filter tap count for this dimension: center plus 2(d+1) neighbors.
    pub fn tap_count(&self) -> usize {
        2 * (self.dim + 1) + 1
    }

    pub fn vertex_coord(&self, row: usize) -> &[i32] {
        let k = self.dim + 1;
        &self.coords[row * k..(row + 1) * k]
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords
    }

    pub fn lookup(&self, coord: &[i32]) -> Option<u32> {
        self.index.get(&CoordKey(coord.into())).copied()
    }

    /// J_v: the points contributing to vertex `row`.
    pub fn contributing_points(&self, row: usize) -> &[u32] {
        &self.points[row]
    }

    /// Neighbor row table for same-level convolution, one row per vertex in
    /// tap order (center, +axis 0..d, -axis 0..d); `NO_VERTEX` marks
    /// unallocated neighbors. Built lazily and cached.
    pub fn conv_taps(&self) -> Arc<Vec<i64>> {
        self.conv_taps
            .get_or_init(|| {
                let k = self.tap_count();
                let n = self.len();
                let mut taps = vec![NO_VERTEX; n * k];
                let mut nbr = vec![0i32; self.dim + 1];
                for r in 0..n {
                    taps[r * k] = r as i64;
                    let c = self.vertex_coord(r);
                    for (t, (sign, axis)) in tap_directions(self.dim).enumerate() {
                        write_neighbor(c, axis, sign, &mut nbr);
                        taps[r * k + 1 + t] =
                            self.lookup(&nbr).map_or(NO_VERTEX, |row| row as i64);
                    }
                }
                Arc::new(taps)
            })
            .clone()
    }

    fn with_capacity(dim: usize, level: u32) -> Self {
        SparseLattice {
            dim,
            level,
            coords: Vec::new(),
            index: CoordMap::default(),
            points: Vec::new(),
            conv_taps: OnceLock::new(),
        }
    }

    fn insert(&mut self, coord: &LatticeCoord) -> Result<u32> {
        let key = CoordKey(coord.components().into());
        if let Some(&row) = self.index.get(&key) {
            return Ok(row);
        }
        let row = self.points.len();
        if row >= u32::MAX as usize {
            return Err(Error::CapacityOverflow {
                what: "vertex count",
                size: row,
            });
        }
        self.index.insert(key, row as u32);
        self.coords.extend_from_slice(coord.components());
        self.points.push(Vec::new());
        Ok(row as u32)
    }
}

/// Tap directions after the center slot: +axis 0..=d then -axis 0..=d.
pub fn tap_directions(dim: usize) -> impl Iterator<Item = (i32, usize)> {
    [1i32, -1]
        .into_iter()
        .flat_map(move |sign| (0..=dim).map(move |axis| (sign, axis)))
}

fn write_neighbor(coord: &[i32], axis: usize, sign: i32, out: &mut [i32]) {
    for (o, &c) in out.iter_mut().zip(coord.iter()) {
        *o = c - sign;
    }
    out[axis] = coord[axis] + sign * coord.len() as i32 - sign;
}

/// Builds the finest-level lattice from a point cloud: allocates exactly the
/// simplices containing points, and records each point's enclosing vertices
/// and barycentric weights.
pub fn build_lattice(cloud: &PointCloud) -> Result<(SparseLattice, SimplexAssignment)> {
    build_lattice_at_level(cloud, 0)
}

/// Builds the lattice at a coarsening level: positions are divided by
/// 2^level before allocation.
pub fn build_lattice_at_level(
    cloud: &PointCloud,
    level: u32,
) -> Result<(SparseLattice, SimplexAssignment)> {
    let dim = cloud.dim();
    let m = cloud.len();
    let k = dim + 1;
    if m.checked_mul(k).is_none() {
        return Err(Error::CapacityOverflow {
            what: "assignment size",
            size: m,
        });
    }
    let inv_scale = 1.0 / (1u64 << level) as f64;
    let mut lattice = SparseLattice::with_capacity(dim, level);
    let mut assignment = SimplexAssignment {
        dim,
        len: m,
        indices: Vec::with_capacity(m * k),
        weights: Vec::with_capacity(m * k),
    };
    let mut scaled = vec![0.0; dim];
    let mut elevated = vec![0.0; k];
    for p in 0..m {
        cloud.scaled_position(p, &mut scaled);
        for v in scaled.iter_mut() {
            *v *= inv_scale;
        }
        elevate(&scaled, &mut elevated);
        let simplex = find_enclosing_simplex(&elevated);
        for (vertex, &w) in simplex.vertices.iter().zip(simplex.weights.iter()) {
            let row = lattice.insert(vertex)?;
            assignment.indices.push(row);
            assignment.weights.push(w);
        }
    }
    // J_v inverse mapping, ascending point order by construction
    for p in 0..m {
        for &row in assignment.vertex_indices(p) {
            lattice.points[row as usize].push(p as u32);
        }
    }
    Ok((lattice, assignment))
}

/// Creates the next-coarser lattice by halving the (already level-scaled)
/// point positions once more.
pub fn coarsen_coords(fine: &SparseLattice, cloud: &PointCloud) -> Result<SparseLattice> {
    if fine.dim() != cloud.dim() {
        return Err(Error::InvalidCloud(format!(
            "cloud dim {} does not match lattice dim {}",
            cloud.dim(),
            fine.dim()
        )));
    }
    let (lattice, _) = build_lattice_at_level(cloud, fine.level() + 1)?;
    Ok(lattice)
}

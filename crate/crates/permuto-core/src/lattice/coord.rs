//! Integer lattice coordinates, neighbor offsets and the embedding between
//! consecutive lattice levels.
//!
//! A vertex of the d-dimensional lattice is a (d+1)-vector of integers that
//! sums to zero and whose components all share the same residue mod d+1.

/// Coordinates of one lattice vertex.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LatticeCoord(Vec<i32>);

impl LatticeCoord {
    /// Wraps a coordinate vector, checking the zero-sum and congruence
    /// invariants.
    pub fn new(c: Vec<i32>) -> Option<Self> {
        if c.len() < 2 || !coord_is_valid(&c) {
            return None;
        }
        Some(LatticeCoord(c))
    }

    /// Wraps without validation; callers must uphold the invariants.
    pub(crate) fn from_raw(c: Vec<i32>) -> Self {
        debug_assert!(coord_is_valid(&c));
        LatticeCoord(c)
    }

    pub fn components(&self) -> &[i32] {
        &self.0
    }

    /// Spatial dimension d (one less than the component count).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn into_vec(self) -> Vec<i32> {
        self.0
    }
}

/// True iff the components sum to zero.
pub fn coord_is_valid(c: &[i32]) -> bool {
    c.iter().map(|&v| v as i64).sum::<i64>() == 0
}

/// True iff the coordinate additionally satisfies the scaling convention of
/// the rounding algorithm: all components congruent to the same residue
/// mod d+1. Every coordinate produced by rounding satisfies this.
pub fn coord_is_congruent(c: &[i32]) -> bool {
    let modulus = c.len() as i64;
    let r0 = (c[0] as i64).rem_euclid(modulus);
    coord_is_valid(c) && c.iter().all(|&v| (v as i64).rem_euclid(modulus) == r0)
}

/// The 2(d+1) offsets ±[-1, …, -1, d, -1, …, -1] to the immediate neighbors.
#[derive(Clone, Debug)]
pub struct NeighborOffsets {
    dim: usize,
    offsets: Vec<Vec<i32>>,
}

impl NeighborOffsets {
    pub fn new(dim: usize) -> Self {
        let mut offsets = Vec::with_capacity(2 * (dim + 1));
        for sign in [1i32, -1] {
            for axis in 0..=dim {
                offsets.push(neighbor_offset(dim, axis, sign));
            }
        }
        NeighborOffsets { dim, offsets }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i32]> {
        self.offsets.iter().map(|o| o.as_slice())
    }
}

/// The single offset toward the neighbor on `axis` with the given sign:
/// all components -1 except `d` at `axis`, negated for sign = -1.
pub fn neighbor_offset(dim: usize, axis: usize, sign: i32) -> Vec<i32> {
    assert!(axis <= dim, "axis {} out of range for dim {}", axis, dim);
    assert!(sign == 1 || sign == -1);
    let mut o = vec![-sign; dim + 1];
    o[axis] = sign * dim as i32;
    o
}

/// Coordinate of the neighbor of `coord` on `axis` with the given sign.
pub fn neighbor_coord(coord: &LatticeCoord, axis: usize, sign: i32) -> LatticeCoord {
    let offset = neighbor_offset(coord.dim(), axis, sign);
    let c = coord
        .components()
        .iter()
        .zip(offset.iter())
        .map(|(&a, &b)| a + b)
        .collect();
    LatticeCoord::from_raw(c)
}

/// Embeds a coarse vertex in the next finer lattice: the center is the
/// coarse coordinate scaled by 2, and its 2(d+1) fine neighbors are one
/// standard offset away from that center.
pub fn fine_neighbors_of_coarse(coarse: &LatticeCoord) -> (LatticeCoord, Vec<LatticeCoord>) {
    let center: Vec<i32> = coarse.components().iter().map(|&v| v * 2).collect();
    let center = LatticeCoord::from_raw(center);
    let neighbors = NeighborOffsets::new(coarse.dim())
        .iter()
        .map(|o| {
            LatticeCoord::from_raw(
                center
                    .components()
                    .iter()
                    .zip(o.iter())
                    .map(|(&a, &b)| a + b)
                    .collect(),
            )
        })
        .collect();
    (center, neighbors)
}

/// One candidate position when embedding a fine vertex in the next coarser
/// lattice. Candidates whose halved coordinates have a fractional component
/// carry `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoarseCandidates {
    /// fine_coord / 2 when integral.
    pub center: Option<Vec<i32>>,
    /// center ± half-offset per axis, in the (+axis 0..d, -axis 0..d) order;
    /// `None` where any component is fractional.
    pub neighbors: Vec<Option<Vec<i32>>>,
}

/// Embeds a fine vertex in the next coarser lattice via division by 2.
/// The candidate set is the center fine/2 plus the half-offset neighbors
/// ±[-0.5, …, d/2, …, -0.5]; fractional candidates are dropped (`None`).
/// An integral candidate may still be absent from the coarse lattice —
/// the hash lookup decides allocation.
pub fn coarse_neighbors_of_fine(fine: &LatticeCoord) -> CoarseCandidates {
    let dim = fine.dim();
    let center = halve_if_even(fine.components());
    let mut neighbors = Vec::with_capacity(2 * (dim + 1));
    for sign in [1i32, -1] {
        for axis in 0..=dim {
            // doubled candidate = fine + standard offset, halved when even
            let offset = neighbor_offset(dim, axis, sign);
            let doubled: Vec<i32> = fine
                .components()
                .iter()
                .zip(offset.iter())
                .map(|(&a, &b)| a + b)
                .collect();
            neighbors.push(halve_if_even(&doubled));
        }
    }
    CoarseCandidates { center, neighbors }
}

fn halve_if_even(c: &[i32]) -> Option<Vec<i32>> {
    if c.iter().all(|&v| v % 2 == 0) {
        Some(c.iter().map(|&v| v / 2).collect())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_matches_stated_form() {
        assert_eq!(neighbor_offset(3, 0, 1), vec![3, -1, -1, -1]);
        assert_eq!(neighbor_offset(3, 2, -1), vec![1, 1, -3, 1]);
    }

    #[test]
    fn offsets_sum_to_zero_and_pair_up() {
        for dim in 1..=4 {
            let offs = NeighborOffsets::new(dim);
            assert_eq!(offs.len(), 2 * (dim + 1));
            for o in offs.iter() {
                assert_eq!(o.iter().sum::<i32>(), 0);
                let neg: Vec<i32> = o.iter().map(|&v| -v).collect();
                assert!(offs.iter().any(|p| p == neg.as_slice()));
            }
        }
    }

    #[test]
    fn neighbor_of_origin() {
        let origin = LatticeCoord::new(vec![0, 0, 0, 0]).unwrap();
        let n = neighbor_coord(&origin, 0, 1);
        assert_eq!(n.components(), &[3, -1, -1, -1]);
    }

    #[test]
    fn plus_then_minus_is_identity() {
        let c = LatticeCoord::new(vec![3, -1, -1, -1]).unwrap();
        for axis in 0..=3 {
            let back = neighbor_coord(&neighbor_coord(&c, axis, 1), axis, -1);
            assert_eq!(back, c);
        }
    }

    #[test]
    fn all_neighbors_of_origin_distinct_and_zero_sum() {
        let origin = LatticeCoord::new(vec![0, 0, 0, 0]).unwrap();
        let mut seen = std::collections::HashSet::new();
        for sign in [1, -1] {
            for axis in 0..=3 {
                let n = neighbor_coord(&origin, axis, sign);
                assert_eq!(n.components().iter().sum::<i32>(), 0);
                assert!(seen.insert(n.components().to_vec()));
            }
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn neighbors_are_equidistant() {
        let c = LatticeCoord::new(vec![4, -4, 4, -4]).unwrap();
        let dist = |a: &[i32], b: &[i32]| -> i64 {
            a.iter()
                .zip(b.iter())
                .map(|(&x, &y)| ((x - y) as i64).pow(2))
                .sum()
        };
        let mut dists = Vec::new();
        for sign in [1, -1] {
            for axis in 0..=3 {
                let n = neighbor_coord(&c, axis, sign);
                dists.push(dist(c.components(), n.components()));
            }
        }
        assert!(dists.iter().all(|&d| d == dists[0]));
    }

    #[test]
    fn coarse_embedding_scales_by_two() {
        let coarse = LatticeCoord::new(vec![0, 0, 0, 0]).unwrap();
        let (center, neighbors) = fine_neighbors_of_coarse(&coarse);
        assert_eq!(center.components(), &[0, 0, 0, 0]);
        assert!(neighbors
            .iter()
            .any(|n| n.components() == [3, -1, -1, -1]));
        assert_eq!(neighbors.len(), 8);
    }

    #[test]
    fn fine_center_halves_back_to_coarse() {
        let coarse = LatticeCoord::new(vec![4, -8, 4, 0]).unwrap();
        let (center, _) = fine_neighbors_of_coarse(&coarse);
        let halved: Vec<i32> = center.components().iter().map(|v| v / 2).collect();
        assert_eq!(halved, coarse.components());
    }

    #[test]
    fn fractional_candidates_dropped_at_origin() {
        let fine = LatticeCoord::new(vec![0, 0, 0, 0]).unwrap();
        let cands = coarse_neighbors_of_fine(&fine);
        assert_eq!(cands.center, Some(vec![0, 0, 0, 0]));
        // every half-offset like [1.5, -0.5, -0.5, -0.5] is fractional
        assert!(cands.neighbors.iter().all(|n| n.is_none()));
    }

    #[test]
    fn even_coords_halve_cleanly() {
        let fine = LatticeCoord::new(vec![2, -2, 0, 0]).unwrap();
        let cands = coarse_neighbors_of_fine(&fine);
        assert_eq!(cands.center, Some(vec![1, -1, 0, 0]));
    }

    #[test]
    fn integral_candidates_match_divisibility_oracle_d2() {
        // exhaustive over zero-sum congruent coords with components in [-4, 4]
        for a in -4i32..=4 {
            for b in -4i32..=4 {
                let c = -(a + b);
                if !(-4..=4).contains(&c) {
                    continue;
                }
                let Some(fine) = LatticeCoord::new(vec![a, b, c]) else {
                    continue;
                };
                let cands = coarse_neighbors_of_fine(&fine);
                // oracle: candidate = (fine ± offset) / 2 in exact fractions
                let mut k = 0;
                for sign in [1, -1] {
                    for axis in 0..=2 {
                        let off = neighbor_offset(2, axis, sign);
                        let doubled: Vec<i32> = fine
                            .components()
                            .iter()
                            .zip(off.iter())
                            .map(|(&x, &o)| x + o)
                            .collect();
                        let integral = doubled.iter().all(|v| v % 2 == 0);
                        assert_eq!(cands.neighbors[k].is_some(), integral);
                        if let Some(half) = &cands.neighbors[k] {
                            let back: Vec<i32> = half.iter().map(|&v| v * 2).collect();
                            assert_eq!(back, doubled);
                        }
                        k += 1;
                    }
                }
            }
        }
    }
}

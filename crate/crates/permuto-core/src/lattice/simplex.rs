//! Embedding of d-dimensional positions into the zero-sum hyperplane and the
//! rounding algorithm that finds the enclosing simplex with barycentric
//! weights.

use super::coord::LatticeCoord;

/// Global scale of the elevation: a unit step in input space moves
/// `(d+1) * sqrt(2/3)` inside the hyperplane, which is roughly one lattice
/// edge. This keeps the meaning of `sigma` aligned with the classic sparse
/// lattice filtering constructions.
pub fn elevation_scale(dim: usize) -> f64 {
    (dim as f64 + 1.0) * (2.0f64 / 3.0).sqrt()
}

/// Per-axis scale factors of the elevation basis: `alpha / sqrt(j*(j+1))`.
pub fn elevation_factors(dim: usize) -> Vec<f64> {
    let alpha = elevation_scale(dim);
    (1..=dim)
        .map(|j| alpha / ((j * (j + 1)) as f64).sqrt())
        .collect()
}

/// Maps a d-vector onto the zero-sum hyperplane in d+1 coordinates.
///
/// The basis is upper-triangular: column j is `[1, …, 1, -j, 0, …, 0]`
/// scaled by `elevation_factors()[j-1]`. Columns are mutually orthogonal
/// with equal norms, so the map is an isometry up to the global scale.
pub fn elevate(position: &[f64], out: &mut [f64]) {
    let dim = position.len();
    debug_assert_eq!(out.len(), dim + 1);
    let factors = elevation_factors(dim);
    let mut sum = 0.0;
    for j in (1..=dim).rev() {
        let cf = position[j - 1] * factors[j - 1];
        out[j] = sum - j as f64 * cf;
        sum += cf;
    }
    out[0] = sum;
}

/// Convenience wrapper allocating the output.
pub fn elevate_vec(position: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; position.len() + 1];
    elevate(position, &mut out);
    out
}

/// Inverts the elevation for points on the hyperplane: since the basis
/// columns are orthogonal with norm `alpha`, the pseudo-inverse is
/// `B^T / alpha^2`.
pub fn unelevate(elevated: &[f64]) -> Vec<f64> {
    let dim = elevated.len() - 1;
    let factors = elevation_factors(dim);
    let alpha2 = elevation_scale(dim).powi(2);
    let mut out = vec![0.0; dim];
    for (j, item) in out.iter_mut().enumerate() {
        // column j+1 of the basis: ones in rows 0..=j, then -(j+1)
        let head: f64 = elevated[..=j].iter().sum();
        let dot = head - (j as f64 + 1.0) * elevated[j + 1];
        *item = dot * factors[j] / alpha2;
    }
    out
}

/// The d+1 vertices of the simplex enclosing an elevated point, with their
/// barycentric weights.
#[derive(Clone, Debug)]
pub struct EnclosingSimplex {
    /// (d+1) vertex coordinates, each of length d+1.
    pub vertices: Vec<LatticeCoord>,
    /// Nonnegative weights summing to one.
    pub weights: Vec<f64>,
}

/// Finds the enclosing simplex of a point on the zero-sum hyperplane.
///
/// Rounds to the nearest remainder-0 vertex, ranks the residuals to identify
/// the simplex, repairs the rounding if it left the hyperplane, and reads the
/// barycentric weights off the sorted residual differences.
pub fn find_enclosing_simplex(elevated: &[f64]) -> EnclosingSimplex {
    let dp1 = elevated.len();
    let dim = dp1 - 1;
    let down_factor = 1.0 / dp1 as f64;

    // nearest multiple of d+1 per coordinate
    let mut rem0 = vec![0i64; dp1];
    let mut rank = vec![0i32; dp1];
    let mut sum: i64 = 0;
    for i in 0..dp1 {
        let v = elevated[i] * down_factor;
        let up = v.ceil() * dp1 as f64;
        let dn = v.floor() * dp1 as f64;
        rem0[i] = if up - elevated[i] < elevated[i] - dn { up } else { dn } as i64;
        sum += rem0[i];
    }
    sum /= dp1 as i64;

    // rank[i] = how many coordinates have a larger residual
    for i in 0..dim {
        let di = elevated[i] - rem0[i] as f64;
        for j in (i + 1)..dp1 {
            if di < elevated[j] - rem0[j] as f64 {
                rank[i] += 1;
            } else {
                rank[j] += 1;
            }
        }
    }

    // if the rounded point left the hyperplane, shift the offending coords
    for i in 0..dp1 {
        rank[i] += sum as i32;
        if rank[i] < 0 {
            rank[i] += dp1 as i32;
            rem0[i] += dp1 as i64;
        } else if rank[i] > dim as i32 {
            rank[i] -= dp1 as i32;
            rem0[i] -= dp1 as i64;
        }
    }

    // barycentric weights from sorted residual differences
    let mut bary = vec![0.0f64; dp1 + 1];
    for i in 0..dp1 {
        let delta = (elevated[i] - rem0[i] as f64) * down_factor;
        bary[(dim as i32 - rank[i]) as usize] += delta;
        bary[(dim as i32 - rank[i] + 1) as usize] -= delta;
    }
    bary[0] += 1.0 + bary[dp1];
    bary.truncate(dp1);
    for w in bary.iter_mut() {
        // round-off can leave ~-1e-16 on simplex boundaries
        if *w < 0.0 {
            debug_assert!(*w > -1e-9, "barycentric weight {} below tolerance", *w);
            *w = 0.0;
        }
    }

    // vertex k has coordinates rem0 + k, shifted down by d+1 where the rank
    // exceeds d - k
    let mut vertices = Vec::with_capacity(dp1);
    for k in 0..dp1 {
        let mut coord = Vec::with_capacity(dp1);
        for i in 0..dp1 {
            let mut v = rem0[i] + k as i64;
            if rank[i] > (dim - k) as i32 {
                v -= dp1 as i64;
            }
            coord.push(v as i32);
        }
        vertices.push(LatticeCoord::from_raw(coord));
    }

    EnclosingSimplex {
        vertices,
        weights: bary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elevate_zero_is_zero() {
        for dim in 1..=4 {
            let out = elevate_vec(&vec![0.0; dim]);
            assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn elevate_is_linear() {
        let x = [0.3, -1.7, 2.5];
        let y = [1.1, 0.4, -0.9];
        let xy: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| a + b).collect();
        let ex = elevate_vec(&x);
        let ey = elevate_vec(&y);
        let exy = elevate_vec(&xy);
        for i in 0..4 {
            assert!((ex[i] + ey[i] - exy[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn elevation_gram_matrix_is_scaled_identity() {
        // brute-force Gram matrix of the elevation basis columns
        for dim in 1..=4 {
            let alpha2 = elevation_scale(dim).powi(2);
            let mut basis = Vec::new();
            for j in 0..dim {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                basis.push(elevate_vec(&e));
            }
            for a in 0..dim {
                for b in 0..dim {
                    let dot: f64 = basis[a].iter().zip(basis[b].iter()).map(|(x, y)| x * y).sum();
                    let expect = if a == b { alpha2 } else { 0.0 };
                    assert!(
                        (dot - expect).abs() < 1e-9,
                        "gram[{},{}] = {} expected {}",
                        a,
                        b,
                        dot,
                        expect
                    );
                }
            }
        }
    }

    #[test]
    fn elevated_points_sum_to_zero() {
        let out = elevate_vec(&[1.25, -3.5, 0.75]);
        assert!(out.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn unit_vectors_map_to_equal_lengths() {
        let dim = 3;
        let alpha = elevation_scale(dim);
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            let out = elevate_vec(&e);
            let norm: f64 = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - alpha).abs() < 1e-9);
        }
    }

    #[test]
    fn unelevate_inverts_elevate() {
        let x = [0.7, -2.3, 1.9, 0.2];
        let back = unelevate(&elevate_vec(&x));
        for (a, b) in x.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn vertex_coincident_point_gets_weight_one() {
        // (1, -1) is a lattice vertex for d = 1
        let simplex = find_enclosing_simplex(&[1.0, -1.0]);
        let mut found = false;
        for (v, &w) in simplex.vertices.iter().zip(simplex.weights.iter()) {
            if v.components() == [1, -1] {
                assert!((w - 1.0).abs() < 1e-12);
                found = true;
            } else {
                assert!(w.abs() < 1e-12);
            }
        }
        assert!(found);
    }

    #[test]
    fn edge_midpoint_splits_evenly() {
        // midpoint of the edge between (0,0) and (1,-1)
        let simplex = find_enclosing_simplex(&[0.5, -0.5]);
        let mut weights = std::collections::HashMap::new();
        for (v, &w) in simplex.vertices.iter().zip(simplex.weights.iter()) {
            weights.insert(v.components().to_vec(), w);
        }
        assert!((weights[&vec![0, 0]] - 0.5).abs() < 1e-12);
        assert!((weights[&vec![1, -1]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_solve_affine_system_d3() {
        // oracle: solve the (d+1)x(d+1) system A b = [elevated; 1] directly
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let pos: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let elevated = elevate_vec(&pos);
            let simplex = find_enclosing_simplex(&elevated);
            let n = 4usize;
            // rows 0..d: vertex coordinate equations; row d: sum-to-one
            let mut a = vec![0.0f64; (n + 1) * n];
            let mut rhs = vec![0.0f64; n + 1];
            for eq in 0..n {
                for (col, v) in simplex.vertices.iter().enumerate() {
                    a[eq * n + col] = v.components()[eq] as f64;
                }
                rhs[eq] = elevated[eq];
            }
            for col in 0..n {
                a[n * n + col] = 1.0;
            }
            rhs[n] = 1.0;
            let solved = solve_least_squares(&a, &rhs, n + 1, n);
            for (w, s) in simplex.weights.iter().zip(solved.iter()) {
                assert!(
                    (w - s).abs() < 1e-8,
                    "weight {} vs oracle {}",
                    w,
                    s
                );
            }
        }
    }

    // dense normal-equations solve, small systems only
    fn solve_least_squares(a: &[f64], rhs: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut ata = vec![0.0; cols * cols];
        let mut atb = vec![0.0; cols];
        for i in 0..cols {
            for j in 0..cols {
                let mut s = 0.0;
                for r in 0..rows {
                    s += a[r * cols + i] * a[r * cols + j];
                }
                ata[i * cols + j] = s;
            }
            let mut s = 0.0;
            for r in 0..rows {
                s += a[r * cols + i] * rhs[r];
            }
            atb[i] = s;
        }
        // gaussian elimination with partial pivoting
        let n = cols;
        let mut m = ata;
        let mut b = atb;
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if m[r * n + col].abs() > m[piv * n + col].abs() {
                    piv = r;
                }
            }
            if piv != col {
                for c in 0..n {
                    m.swap(col * n + c, piv * n + c);
                }
                b.swap(col, piv);
            }
            let diag = m[col * n + col];
            for r in (col + 1)..n {
                let f = m[r * n + col] / diag;
                for c in col..n {
                    m[r * n + c] -= f * m[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let mut s = b[r];
            for c in (r + 1)..n {
                s -= m[r * n + c] * x[c];
            }
            x[r] = s / m[r * n + r];
        }
        x
    }

    #[test]
    fn weights_nonnegative_and_reconstruct() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for dim in 1..=3usize {
            for _ in 0..500 {
                let pos: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let elevated = elevate_vec(&pos);
                let simplex = find_enclosing_simplex(&elevated);
                let sum: f64 = simplex.weights.iter().sum();
                assert!((sum - 1.0).abs() < 1e-6);
                assert!(simplex.weights.iter().all(|&w| w >= 0.0));
                // affine reconstruction
                let scale: f64 = elevated.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                for i in 0..=dim {
                    let rec: f64 = simplex
                        .vertices
                        .iter()
                        .zip(simplex.weights.iter())
                        .map(|(v, &w)| w * v.components()[i] as f64)
                        .sum();
                    assert!(
                        (rec - elevated[i]).abs() / scale < 1e-5,
                        "reconstruction off: {} vs {}",
                        rec,
                        elevated[i]
                    );
                }
            }
        }
    }
}

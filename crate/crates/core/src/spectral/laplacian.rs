use faer::Mat;

use crate::error::{check_len, Result};
use crate::geometry::{MetricField, TorusGrid, WeightedMeasure};
use crate::linalg::CsrMatrix;

/// Divergence-form discretization of `−Δ_g` on the torus.
///
/// The operator is stored as `A = W⁻¹ B` where `W = diag(w)` holds the volume weights and
/// `B` is the symmetric stiffness matrix of the discrete Dirichlet form
///
/// ```text
/// ⟨Au, v⟩_w = h^n Σ_i Σ_jk (D⁺_j v)_i a_jk (D⁺_k u)_i,     a = √|g| g⁻¹,
/// ```
///
/// with the diagonal coefficients sampled at edge midpoints and the mixed coefficient at
/// cell centres paired with cell-averaged differences. Both choices keep the stencil
/// second-order accurate for variable coefficients, and the form is symmetric by construction.
#[derive(Clone, Debug)]
pub struct DiscreteLaplaceBeltrami {
    grid: TorusGrid,
    stiffness: CsrMatrix,
    measure: WeightedMeasure,
}

impl DiscreteLaplaceBeltrami {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn measure(&self) -> &WeightedMeasure {
        &self.measure
    }

    /// The symmetric matrix `B = W A`.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.grid.node_count(), u.len())?;
        let mut y = self.stiffness.mul(u);
        for (yi, w) in y.iter_mut().zip(self.measure.weights()) {
            *yi /= w;
        }
        Ok(y)
    }

    /// Dense `A` acting on nodal vectors.
    pub fn dense_operator(&self) -> Mat<f64> {
        let b = self.stiffness.to_dense();
        let w = self.measure.weights();
        Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] / w[i])
    }

    /// `tr A = Σ_i B_ii / w_i`.
    pub fn weighted_trace(&self) -> f64 {
        self.stiffness
            .diagonal()
            .iter()
            .zip(self.measure.weights())
            .map(|(b, w)| b / w)
            .sum()
    }
}

pub fn assemble_laplacian(metric: &MetricField) -> DiscreteLaplaceBeltrami {
    let grid = *metric.grid();
    let n = grid.node_count();
    let h = grid.spacing();
    let dim = grid.dim();
    // h^dim cell volume over h² from the two difference quotients
    let edge_scale = h.powi(dim as i32 - 2);
    let mut trip = Vec::with_capacity(n * 9 * dim);

    for axis in 0..dim {
        for (i, g) in metric.edge_samples(axis).iter().enumerate() {
            let coeff = g.det().sqrt() * g.inverse().entry(axis, axis) * edge_scale;
            let k = grid.shifted(i, axis, 1);
            trip.push((i, i, coeff));
            trip.push((k, k, coeff));
            trip.push((i, k, -coeff));
            trip.push((k, i, -coeff));
        }
    }

    if dim == 2 {
        for (i, g) in metric.cell_samples().iter().enumerate() {
            let a12 = g.det().sqrt() * g.inverse().xy;
            if a12 == 0.0 {
                continue;
            }
            let p10 = grid.shifted(i, 0, 1);
            let p01 = grid.shifted(i, 1, 1);
            let p11 = grid.shifted(p10, 1, 1);
            let corners = [i, p10, p01, p11];
            // cell-averaged difference quotients (without the 1/h factors)
            let d1 = [-0.5, 0.5, -0.5, 0.5];
            let d2 = [-0.5, -0.5, 0.5, 0.5];
            let scale = a12 * edge_scale;
            for a in 0..4 {
                for b in 0..4 {
                    let v = scale * (d1[a] * d2[b] + d2[a] * d1[b]);
                    if v != 0.0 {
                        trip.push((corners[a], corners[b], v));
                    }
                }
            }
        }
    }

    DiscreteLaplaceBeltrami {
        grid,
        stiffness: CsrMatrix::from_triplets(n, n, trip),
        measure: metric.measure(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_metric, weighted_inner, MetricProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circulant_stencil_1d() {
        let grid = TorusGrid::new(1, 4.0, 4).unwrap();
        let metric = make_metric(&grid, &MetricProfile::Identity).unwrap();
        let a = assemble_laplacian(&metric).dense_operator();
        let expected = [
            [2.0, -1.0, 0.0, -1.0],
            [-1.0, 2.0, -1.0, 0.0],
            [0.0, -1.0, 2.0, -1.0],
            [-1.0, 0.0, -1.0, 2.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a[(i, j)], expected[i][j]);
            }
        }
    }

    #[test]
    fn five_point_stencil_2d() {
        let grid = TorusGrid::new(2, 8.0, 8).unwrap();
        let metric = make_metric(&grid, &MetricProfile::Identity).unwrap();
        let lap = assemble_laplacian(&metric);
        let a = lap.dense_operator();
        let i = grid.node_at([3, 4]);
        assert_eq!(a[(i, i)], 4.0);
        assert_eq!(a[(i, grid.node_at([2, 4]))], -1.0);
        assert_eq!(a[(i, grid.node_at([3, 5]))], -1.0);
        assert_eq!(a[(i, grid.node_at([4, 5]))], 0.0);
        assert!((lap.weighted_trace() - 4.0 * 64.0).abs() < 1e-12);
    }

    fn profiles() -> Vec<MetricProfile> {
        vec![
            MetricProfile::Identity,
            MetricProfile::ConformalBump {
                beta: 0.5,
                sigma: 0.4,
                center: None,
                r0: 0.8,
            },
            MetricProfile::AnisotropicBump {
                beta: 0.7,
                sigma: 0.5,
                center: None,
                r0: 0.9,
            },
        ]
    }

    #[test]
    fn constants_are_harmonic() {
        for dim in [1, 2] {
            let grid = TorusGrid::new(dim, 3.0, 12).unwrap();
            for p in profiles() {
                let lap = assemble_laplacian(&make_metric(&grid, &p).unwrap());
                let au = lap.apply(&vec![2.5; grid.node_count()]).unwrap();
                assert!(au.iter().all(|v| v.abs() < 1e-12), "{p:?}");
            }
        }
    }

    #[test]
    fn weighted_self_adjoint_and_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        for dim in [1, 2] {
            let grid = TorusGrid::new(dim, 3.0, 12).unwrap();
            for p in profiles() {
                let lap = assemble_laplacian(&make_metric(&grid, &p).unwrap());
                let m = lap.measure();
                let dense = lap.dense_operator();
                let norm_a = (0..dense.nrows())
                    .map(|i| (0..dense.ncols()).map(|j| dense[(i, j)].abs()).sum::<f64>())
                    .fold(0.0, f64::max);
                for _ in 0..100 {
                    let u: Vec<f64> = (0..grid.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let v: Vec<f64> = (0..grid.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let au = lap.apply(&u).unwrap();
                    let av = lap.apply(&v).unwrap();
                    let lhs = weighted_inner(&au, &v, m).unwrap();
                    let rhs = weighted_inner(&u, &av, m).unwrap();
                    let scale = norm_a * m.norm(&u).unwrap() * m.norm(&v).unwrap();
                    assert!((lhs - rhs).abs() < 1e-12 * scale);
                    assert!(weighted_inner(&au, &u, m).unwrap() >= -1e-12 * scale);
                }
            }
        }
    }
}

//! Periodic computational domain, metric fields and the Riemannian volume weights.
//!
//! The domain is the flat torus `[0, L)^dim` sampled on a uniform grid with `N` points
//! per side. Metrics are given by closed-form profiles that coincide with the Euclidean
//! metric outside a ball of radius `R0`, so the torus acts as a localization of the
//! whole-space problem.

use crate::error::{check_len, Error, Result};

/// Uniform periodic grid on `[0, L)^dim`, `dim` in {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    side_length: f64,
    points_per_side: usize,
    spacing: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, side_length: f64, points_per_side: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(side_length > 0.0) || !side_length.is_finite() {
            return Err(Error::InvalidGrid(format!("side length must be positive, got {side_length}")));
        }
        if points_per_side < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 points per side, got {points_per_side}"
            )));
        }
        if points_per_side % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per side must be even, got odd N = {points_per_side}"
            )));
        }
        Ok(Self {
            dim,
            side_length,
            points_per_side,
            spacing: side_length / points_per_side as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn points_per_side(&self) -> usize {
        self.points_per_side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `h^dim`, the Euclidean cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn total_volume(&self) -> f64 {
        self.side_length.powi(self.dim as i32)
    }

    pub fn node_count(&self) -> usize {
        self.points_per_side.pow(self.dim as u32)
    }

    /// Per-axis integer coordinates of a node. The second entry is 0 in 1D.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        let n = self.points_per_side;
        [node % n, node / n]
    }

    pub fn node_at(&self, index: [usize; 2]) -> usize {
        let n = self.points_per_side;
        match self.dim {
            1 => index[0] % n,
            _ => (index[0] % n) + n * (index[1] % n),
        }
    }

    /// Neighbour of `node` shifted by `offset` cells along `axis`, with wrap-around.
    pub fn shifted(&self, node: usize, axis: usize, offset: isize) -> usize {
        let n = self.points_per_side as isize;
        let mut idx = self.multi_index(node);
        let moved = (idx[axis] as isize + offset).rem_euclid(n);
        idx[axis] = moved as usize;
        self.node_at(idx)
    }

    pub fn coordinates(&self, node: usize) -> [f64; 2] {
        let idx = self.multi_index(node);
        let x = idx[0] as f64 * self.spacing;
        let y = if self.dim == 2 { idx[1] as f64 * self.spacing } else { 0.0 };
        [x, y]
    }

    /// Shortest signed displacement `b - a` on the torus, per axis.
    pub fn displacement(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let l = self.side_length;
        let wrap = |d: f64| d - l * (d / l).round();
        if self.dim == 1 {
            [wrap(b[0] - a[0]), 0.0]
        } else {
            [wrap(b[0] - a[0]), wrap(b[1] - a[1])]
        }
    }

    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = self.displacement(a, b);
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }

    pub fn node_distance(&self, i: usize, j: usize) -> f64 {
        self.distance(self.coordinates(i), self.coordinates(j))
    }

    /// Geometric centre of the box, the default location of metric bumps and of Ω.
    pub fn center(&self) -> [f64; 2] {
        let c = 0.5 * self.side_length;
        if self.dim == 1 {
            [c, 0.0]
        } else {
            [c, c]
        }
    }
}

/// Symmetric tensor stored by its upper triangle. In 1D only `xx` is meaningful and
/// `xy = 0`, `yy = 1` so that determinants and inverses need no special-casing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor {
    pub const IDENTITY: SymTensor = SymTensor { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn scalar(s: f64) -> Self {
        Self { xx: s, xy: 0.0, yy: s }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn inverse(&self) -> SymTensor {
        let d = self.det();
        SymTensor {
            xx: self.yy / d,
            xy: -self.xy / d,
            yy: self.xx / d,
        }
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let diff = 0.5 * (self.xx - self.yy);
        let r = (diff * diff + self.xy * self.xy).sqrt();
        (mean - r, mean + r)
    }

    pub fn scale(&self, s: f64) -> SymTensor {
        SymTensor {
            xx: self.xx * s,
            xy: self.xy * s,
            yy: self.yy * s,
        }
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        match (j, k) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            _ => self.xy,
        }
    }

    /// `Jᵀ · self · J` for a general 2×2 matrix `J` (row-major).
    pub fn congruence(&self, jac: [[f64; 2]; 2]) -> SymTensor {
        let g = [[self.xx, self.xy], [self.xy, self.yy]];
        let mut out = [[0.0; 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for p in 0..2 {
                    for q in 0..2 {
                        s += jac[p][a] * g[p][q] * jac[q][b];
                    }
                }
                *cell = s;
            }
        }
        SymTensor {
            xx: out[0][0],
            xy: 0.5 * (out[0][1] + out[1][0]),
            yy: out[1][1],
        }
    }

    pub fn max_abs_diff(&self, other: &SymTensor) -> f64 {
        (self.xx - other.xx)
            .abs()
            .max((self.xy - other.xy).abs())
            .max((self.yy - other.yy).abs())
    }
}

/// C^∞ cutoff `exp(1 - 1/(1 - ρ²))` for `ρ < 1`, exactly zero for `ρ ≥ 1`; equals 1 at `ρ = 0`.
pub fn smooth_cutoff(rho: f64) -> f64 {
    let q = rho * rho;
    if q >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - q)).exp()
    }
}

/// Derivative of [`smooth_cutoff`] with respect to `ρ`.
pub fn smooth_cutoff_derivative(rho: f64) -> f64 {
    let q = rho * rho;
    if q >= 1.0 {
        0.0
    } else {
        let one_minus = 1.0 - q;
        smooth_cutoff(rho) * (-2.0 * rho / (one_minus * one_minus))
    }
}

/// Anything that can be evaluated as a metric tensor at a point of the torus.
pub trait MetricSource {
    fn tensor_at(&self, grid: &TorusGrid, x: [f64; 2]) -> SymTensor;

    /// Radius outside of which the tensor is exactly the identity.
    fn support_radius(&self) -> f64;

    fn support_center(&self, grid: &TorusGrid) -> [f64; 2];
}

/// Direction of the rank-one perturbation used by the anisotropic bump (30° from the x-axis).
const ANISOTROPY_ANGLE: f64 = std::f64::consts::PI / 6.0;

/// Built-in closed-form metric families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricProfile {
    Identity,
    /// `g = (1 + β b(x)) I`.
    ConformalBump {
        beta: f64,
        sigma: f64,
        center: Option<[f64; 2]>,
        r0: f64,
    },
    /// `g = I + β b(x) e eᵀ` with `e` a fixed unit direction; `g = 1 + β b` in 1D.
    AnisotropicBump {
        beta: f64,
        sigma: f64,
        center: Option<[f64; 2]>,
        r0: f64,
    },
}

impl MetricProfile {
    fn bump_params(&self) -> Option<(f64, f64, Option<[f64; 2]>, f64)> {
        match *self {
            MetricProfile::Identity => None,
            MetricProfile::ConformalBump { beta, sigma, center, r0 }
            | MetricProfile::AnisotropicBump { beta, sigma, center, r0 } => Some((beta, sigma, center, r0)),
        }
    }

    /// Bump amplitude `b(x) = cutoff(r/R0)·exp(-r²/2σ²)`, equal to 1 at the centre.
    fn bump(&self, grid: &TorusGrid, x: [f64; 2]) -> f64 {
        match self.bump_params() {
            None => 0.0,
            Some((_, sigma, _, r0)) => {
                let r = grid.distance(self.support_center(grid), x);
                if r >= r0 {
                    return 0.0;
                }
                smooth_cutoff(r / r0) * (-(r * r) / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        if let Some((beta, sigma, _, r0)) = self.bump_params() {
            if !(beta > -1.0) || !beta.is_finite() {
                return Err(Error::InvalidMetric(format!(
                    "beta = {beta} violates ellipticity (need beta > -1)"
                )));
            }
            if !(sigma > 0.0) {
                return Err(Error::InvalidMetric(format!("sigma must be positive, got {sigma}")));
            }
            if !(r0 > 0.0) {
                return Err(Error::InvalidMetric(format!("r0 must be positive, got {r0}")));
            }
            if r0 >= 0.5 * grid.side_length() {
                return Err(Error::InvalidMetric(format!(
                    "support radius r0 = {r0} must be below L/2 = {}",
                    0.5 * grid.side_length()
                )));
            }
        }
        Ok(())
    }
}

impl MetricSource for MetricProfile {
    fn tensor_at(&self, grid: &TorusGrid, x: [f64; 2]) -> SymTensor {
        match *self {
            MetricProfile::Identity => SymTensor::IDENTITY,
            MetricProfile::ConformalBump { beta, .. } => {
                let s = 1.0 + beta * self.bump(grid, x);
                if grid.dim() == 1 {
                    SymTensor::new(s, 0.0, 1.0)
                } else {
                    SymTensor::scalar(s)
                }
            }
            MetricProfile::AnisotropicBump { beta, .. } => {
                let b = beta * self.bump(grid, x);
                if grid.dim() == 1 {
                    SymTensor::new(1.0 + b, 0.0, 1.0)
                } else {
                    let (s, c) = ANISOTROPY_ANGLE.sin_cos();
                    SymTensor::new(1.0 + b * c * c, b * c * s, 1.0 + b * s * s)
                }
            }
        }
    }

    fn support_radius(&self) -> f64 {
        self.bump_params().map_or(0.0, |p| p.3)
    }

    fn support_center(&self, grid: &TorusGrid) -> [f64; 2] {
        self.bump_params()
            .and_then(|p| p.2)
            .unwrap_or_else(|| grid.center())
    }
}

/// Metric tensor sampled at nodes, at edge midpoints and at cell centres.
///
/// The staggered samples feed the divergence-form stencil; the nodal samples define the
/// volume weights.
#[derive(Clone, Debug)]
pub struct MetricField {
    grid: TorusGrid,
    tensor: Vec<SymTensor>,
    inverse_tensor: Vec<SymTensor>,
    det_sqrt: Vec<f64>,
    /// `edge[axis][i]` is sampled at `x_i + h/2 e_axis`.
    edge: [Vec<SymTensor>; 2],
    /// `cell[i]` is sampled at `x_i + h/2 (e_1 + e_2)` (2D only).
    cell: Vec<SymTensor>,
    support_radius: f64,
    support_center: [f64; 2],
}

impl MetricField {
    /// Samples any metric source, checking uniform ellipticity at every sample point.
    pub fn sample<S: MetricSource + ?Sized>(grid: &TorusGrid, source: &S) -> Result<Self> {
        let n_nodes = grid.node_count();
        let h = grid.spacing();
        let half = 0.5 * h;
        let at = |node: usize, dx: f64, dy: f64| {
            let x = grid.coordinates(node);
            source.tensor_at(grid, [x[0] + dx, x[1] + dy])
        };

        let tensor: Vec<SymTensor> = (0..n_nodes).map(|i| at(i, 0.0, 0.0)).collect();
        let edge_x: Vec<SymTensor> = (0..n_nodes).map(|i| at(i, half, 0.0)).collect();
        let (edge_y, cell) = if grid.dim() == 2 {
            (
                (0..n_nodes).map(|i| at(i, 0.0, half)).collect(),
                (0..n_nodes).map(|i| at(i, half, half)).collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };

        for (label, samples) in [("node", &tensor), ("edge", &edge_x), ("edge", &edge_y), ("cell", &cell)] {
            for (i, g) in samples.iter().enumerate() {
                let (lo, _) = g.eigenvalues();
                if !(lo > 0.0) || !lo.is_finite() {
                    return Err(Error::InvalidMetric(format!(
                        "metric not positive definite at {label} sample {i} (smallest eigenvalue {lo})"
                    )));
                }
            }
        }

        let inverse_tensor = tensor.iter().map(SymTensor::inverse).collect();
        let det_sqrt = tensor.iter().map(|g| g.det().sqrt()).collect();
        Ok(Self {
            grid: *grid,
            tensor,
            inverse_tensor,
            det_sqrt,
            edge: [edge_x, edge_y],
            cell,
            support_radius: source.support_radius(),
            support_center: source.support_center(grid),
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn tensor(&self) -> &[SymTensor] {
        &self.tensor
    }

    pub fn inverse_tensor(&self) -> &[SymTensor] {
        &self.inverse_tensor
    }

    pub fn det_sqrt(&self) -> &[f64] {
        &self.det_sqrt
    }

    pub fn edge_samples(&self, axis: usize) -> &[SymTensor] {
        &self.edge[axis]
    }

    pub fn cell_samples(&self) -> &[SymTensor] {
        &self.cell
    }

    pub fn compact_support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn support_center(&self) -> [f64; 2] {
        self.support_center
    }

    /// Smallest and largest eigenvalue of `g` over all nodes.
    pub fn ellipticity_bounds(&self) -> (f64, f64) {
        self.tensor.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), g| {
            let (a, b) = g.eigenvalues();
            (lo.min(a), hi.max(b))
        })
    }

    pub fn measure(&self) -> WeightedMeasure {
        let cell = self.grid.cell_volume();
        WeightedMeasure {
            weights: self.det_sqrt.iter().map(|d| d * cell).collect(),
        }
    }
}

/// Builds a metric field from one of the built-in profiles.
pub fn make_metric(grid: &TorusGrid, profile: &MetricProfile) -> Result<MetricField> {
    profile.validate(grid)?;
    MetricField::sample(grid, profile)
}

/// Discrete Riemannian volume `w_i = √|g(x_i)| h^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMeasure {
    weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidParameter(format!("non-positive node weight {w}")));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn norm(&self, u: &[f64]) -> Result<f64> {
        Ok(weighted_inner(u, u, self)?.sqrt())
    }

    /// Weighted mean `Σ u_i w_i / Σ w_i`.
    pub fn mean(&self, u: &[f64]) -> Result<f64> {
        check_len(self.weights.len(), u.len())?;
        Ok(u.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() / self.total())
    }
}

/// `Σ_i u_i v_i w_i`.
pub fn weighted_inner(u: &[f64], v: &[f64], measure: &WeightedMeasure) -> Result<f64> {
    check_len(measure.len(), u.len())?;
    check_len(measure.len(), v.len())?;
    Ok(u.iter()
        .zip(v)
        .zip(measure.weights())
        .map(|((a, b), w)| a * b * w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(beta: f64) -> MetricProfile {
        MetricProfile::ConformalBump {
            beta,
            sigma: 0.4,
            center: None,
            r0: 0.8,
        }
    }

    #[test]
    fn grid_examples() {
        let g = TorusGrid::new(1, 4.0, 4).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.spacing(), 1.0);
        let xs: Vec<f64> = (0..4).map(|i| g.coordinates(i)[0]).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0]);

        let g = TorusGrid::new(2, 2.0, 8).unwrap();
        assert_eq!(g.node_count(), 64);
        assert_eq!(g.spacing(), 0.25);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(TorusGrid::new(1, 4.0, 5), Err(Error::InvalidGrid(_))));
        assert!(TorusGrid::new(3, 4.0, 8).is_err());
        assert!(TorusGrid::new(1, -1.0, 8).is_err());
        assert!(TorusGrid::new(1, 1.0, 2).is_err());
    }

    #[test]
    fn wrap_around_adjacency() {
        let g = TorusGrid::new(2, 1.0, 4).unwrap();
        assert_eq!(g.shifted(0, 0, -1), 3);
        assert_eq!(g.shifted(3, 0, 1), 0);
        assert_eq!(g.shifted(0, 1, -1), 12);
        assert!((g.node_distance(0, 3) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identity_metric() {
        let g = TorusGrid::new(2, 2.0, 8).unwrap();
        let m = make_metric(&g, &MetricProfile::Identity).unwrap();
        assert!(m.det_sqrt().iter().all(|&d| d == 1.0));
        assert!(m.tensor().iter().all(|t| *t == SymTensor::IDENTITY));
        assert!(m.measure().weights().iter().all(|&w| w == g.cell_volume()));
    }

    #[test]
    fn conformal_bump_peak() {
        for dim in [1usize, 2] {
            let g = TorusGrid::new(dim, 4.0, 16).unwrap();
            let m = make_metric(&g, &bump(0.5)).unwrap();
            let center = g.node_at([8, 8]);
            let t = m.tensor()[center];
            assert!((t.xx - 1.5).abs() < 1e-15);
            if dim == 2 {
                assert!((t.yy - 1.5).abs() < 1e-15);
            }
            assert!((m.det_sqrt()[center] - 1.5f64.powf(dim as f64 / 2.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn bump_is_identity_outside_support() {
        let g = TorusGrid::new(2, 4.0, 24).unwrap();
        let profile = MetricProfile::AnisotropicBump {
            beta: 0.8,
            sigma: 0.5,
            center: None,
            r0: 0.9,
        };
        let m = make_metric(&g, &profile).unwrap();
        for i in 0..g.node_count() {
            let r = g.distance(g.center(), g.coordinates(i));
            if r > 0.9 {
                assert_eq!(m.tensor()[i], SymTensor::IDENTITY);
            }
            let inv = m.inverse_tensor()[i];
            let t = m.tensor()[i];
            assert!((t.xx * inv.xx + t.xy * inv.xy - 1.0).abs() < 1e-14);
            assert!((t.xx * inv.xy + t.xy * inv.yy).abs() < 1e-14);
            assert!((m.det_sqrt()[i] - t.det().sqrt()).abs() < 1e-15);
        }
        let (lo, hi) = m.ellipticity_bounds();
        assert!(lo > 0.0 && hi <= 1.8 + 1e-12);
    }

    #[test]
    fn metric_contract_errors() {
        let g = TorusGrid::new(1, 4.0, 16).unwrap();
        assert!(matches!(make_metric(&g, &bump(-1.5)), Err(Error::InvalidMetric(_))));
        assert!(make_metric(&g, &bump(-1.0)).is_err());
        let wide = MetricProfile::ConformalBump {
            beta: 0.5,
            sigma: 0.4,
            center: None,
            r0: 2.0,
        };
        assert!(make_metric(&g, &wide).is_err());
    }

    #[test]
    fn weighted_inner_examples() {
        let g = TorusGrid::new(1, 4.0, 4).unwrap();
        let m = make_metric(&g, &MetricProfile::Identity).unwrap().measure();
        let ones = vec![1.0; 4];
        assert_eq!(weighted_inner(&ones, &ones, &m).unwrap(), 4.0);
        let delta = vec![1.0, 0.0, 0.0, 0.0];
        assert_eq!(weighted_inner(&delta, &ones, &m).unwrap(), m.weights()[0]);
        assert!(matches!(
            weighted_inner(&ones[..3], &ones, &m),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn smooth_cutoff_values() {
        assert_eq!(smooth_cutoff(0.0), 1.0);
        assert_eq!(smooth_cutoff(1.0), 0.0);
        assert_eq!(smooth_cutoff(1.5), 0.0);
        let r = 0.37;
        let eps = 1e-6;
        let fd = (smooth_cutoff(r + eps) - smooth_cutoff(r - eps)) / (2.0 * eps);
        assert!((fd - smooth_cutoff_derivative(r)).abs() < 1e-8);
    }
}

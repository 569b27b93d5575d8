use faer::{Mat, Side};

use crate::error::{check_len, Error, Result};
use crate::geometry::WeightedMeasure;
use crate::linalg::{mat_t_vec, mat_vec};

use super::laplacian::DiscreteLaplaceBeltrami;

/// Default cap on the number of nodes handed to the dense eigensolver.
pub const DEFAULT_NODE_CAP: usize = 4096;

/// Eigenpairs of the discrete `−Δ_g`, orthonormal in the weighted inner product.
///
/// Every function of the operator is evaluated through this decomposition:
/// `f(A) u = Σ_k f(λ_k) ⟨φ_k, u⟩_w φ_k`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Column `k` is `φ_k` sampled at the nodes.
    vectors: Mat<f64>,
    measure: WeightedMeasure,
}

/// Dense symmetric eigendecomposition of `W^{1/2} A W^{-1/2}`.
pub fn decompose(op: &DiscreteLaplaceBeltrami) -> Result<SpectralDecomposition> {
    decompose_with_cap(op, DEFAULT_NODE_CAP)
}

pub fn decompose_with_cap(op: &DiscreteLaplaceBeltrami, cap: usize) -> Result<SpectralDecomposition> {
    let n = op.grid().node_count();
    if n > cap {
        return Err(Error::SizeCap { nodes: n, cap });
    }
    let w = op.measure().weights();
    let inv_sqrt: Vec<f64> = w.iter().map(|x| 1.0 / x.sqrt()).collect();
    let mut sym = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, b) in op.stiffness().row(i) {
            sym[(i, j)] = b * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let lambda_max = s[order[n - 1]].abs();

    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = Mat::<f64>::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut lam = s[src];
        if lam < 0.0 {
            if lam < -1e-10 * lambda_max {
                return Err(Error::Eigen(format!(
                    "operator is not positive semidefinite: eigenvalue {lam:e}"
                )));
            }
            lam = 0.0;
        }
        if k == 0 && lam.abs() <= 1e-10 * lambda_max {
            lam = 0.0;
        }
        eigenvalues.push(lam);
        // fix the sign so that the largest-magnitude entry is positive
        let col = u.col(src);
        let mut pivot = 0;
        for i in 0..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, k)] = sign * col[i] * inv_sqrt[i];
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
        measure: op.measure().clone(),
    })
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Mat<f64> {
        &self.vectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        let col = self.vectors.col(k);
        (0..self.len()).map(|i| col[i]).collect()
    }

    pub fn measure(&self) -> &WeightedMeasure {
        &self.measure
    }

    /// Smallest nonzero eigenvalue.
    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalues.iter().copied().find(|&l| l > 0.0).unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap_or(&0.0)
    }

    /// `c_k = ⟨φ_k, u⟩_w`.
    pub fn coefficients(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), u.len())?;
        let wu: Vec<f64> = u.iter().zip(self.measure.weights()).map(|(a, w)| a * w).collect();
        Ok(mat_t_vec(&self.vectors, &wu))
    }

    /// `Σ_k c_k φ_k`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), coeffs.len())?;
        Ok(mat_vec(&self.vectors, coeffs))
    }

    /// `f(A) u` for a spectral multiplier `f`.
    pub fn apply_fn<F: Fn(f64) -> f64>(&self, f: F, u: &[f64]) -> Result<Vec<f64>> {
        let mut c = self.coefficients(u)?;
        for (ck, &lam) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= f(lam);
        }
        self.synthesize(&c)
    }

    /// Kernel of `f(A)` with respect to the weighted measure: `Σ_k f(λ_k) φ_k(x_i) φ_k(x_j)`,
    /// so that `(f(A)u)_i = Σ_j K_ij u_j w_j`.
    pub fn kernel_matrix<F: Fn(f64) -> f64>(&self, f: F) -> Mat<f64> {
        let n = self.len();
        let scaled = Mat::<f64>::from_fn(n, n, |i, k| self.vectors[(i, k)] * f(self.eigenvalues[k]));
        let mut out = &scaled * self.vectors.transpose();
        // symmetrize away round-off
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    /// Matrix of `f(A)` acting on nodal vectors: `kernel_matrix(f) · W`.
    pub fn operator_matrix<F: Fn(f64) -> f64>(&self, f: F) -> Mat<f64> {
        let mut k = self.kernel_matrix(f);
        let w = self.measure.weights();
        for j in 0..self.len() {
            for i in 0..self.len() {
                k[(i, j)] *= w[j];
            }
        }
        k
    }

    /// `e^{tΔ_g} u`.
    pub fn heat_apply(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("heat time must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            check_len(self.len(), u.len())?;
            return Ok(u.to_vec());
        }
        self.apply_fn(|lam| (-lam * t).exp(), u)
    }

    /// `(e^{tΔ_g} − 1) u`, formed mode-wise with `expm1` so that small `t` keeps full
    /// relative precision.
    pub fn heat_increment(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("heat time must be nonnegative, got {t}")));
        }
        self.apply_fn(|lam| (-lam * t).exp_m1(), u)
    }

    /// Limit `t → ∞` of the heat flow: the weighted mean of `u`.
    pub fn heat_limit(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mean = self.measure.mean(u)?;
        Ok(vec![mean; self.len()])
    }

    /// Heat kernel `e^{tΔ_g}(x_i, x_j)` with respect to the Riemannian volume.
    pub fn heat_kernel(&self, t: f64, i: usize, j: usize) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("heat kernel needs t > 0, got {t}")));
        }
        let n = self.len();
        if i >= n || j >= n {
            return Err(Error::InvalidParameter(format!("node index out of range ({i}, {j}) for {n} nodes")));
        }
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let mut s = 0.0;
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            s += (-lam * t).exp() * self.vectors[(a, k)] * self.vectors[(b, k)];
        }
        Ok(s)
    }

    pub fn heat_kernel_matrix(&self, t: f64) -> Result<Mat<f64>> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("heat kernel needs t > 0, got {t}")));
        }
        Ok(self.kernel_matrix(|lam| (-lam * t).exp()))
    }

    /// `(−Δ_g)^α u` by functional calculus, with `0^α := 0`.
    pub fn frac_apply_spectral(&self, alpha: f64, u: &[f64]) -> Result<Vec<f64>> {
        check_alpha_closed(alpha)?;
        self.apply_fn(|lam| frac_power(lam, alpha), u)
    }

    /// Kernel matrix of `(−Δ_g)^α` (see [`Self::kernel_matrix`]).
    pub fn frac_kernel_matrix(&self, alpha: f64) -> Result<Mat<f64>> {
        check_alpha_closed(alpha)?;
        Ok(self.kernel_matrix(|lam| frac_power(lam, alpha)))
    }

    pub fn frac_operator_matrix(&self, alpha: f64) -> Result<Mat<f64>> {
        check_alpha_closed(alpha)?;
        Ok(self.operator_matrix(|lam| frac_power(lam, alpha)))
    }
}

pub(crate) fn frac_power(lam: f64, alpha: f64) -> f64 {
    if lam <= 0.0 {
        0.0
    } else {
        lam.powf(alpha)
    }
}

fn check_alpha_closed(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha outside (0,1]: {alpha}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_metric, weighted_inner, MetricProfile, TorusGrid};
    use crate::spectral::assemble_laplacian;

    fn bump() -> MetricProfile {
        MetricProfile::ConformalBump {
            beta: 0.5,
            sigma: 0.4,
            center: None,
            r0: 0.8,
        }
    }

    fn setup(dim: usize, n: usize, p: MetricProfile) -> (DiscreteLaplaceBeltrami, SpectralDecomposition) {
        let grid = TorusGrid::new(dim, 3.0, n).unwrap();
        let lap = assemble_laplacian(&make_metric(&grid, &p).unwrap());
        let dec = decompose(&lap).unwrap();
        (lap, dec)
    }

    #[test]
    fn circulant_eigenvalues() {
        let grid = TorusGrid::new(1, 4.0, 4).unwrap();
        let lap = assemble_laplacian(&make_metric(&grid, &MetricProfile::Identity).unwrap());
        let dec = decompose(&lap).unwrap();
        let expected = [0.0, 2.0, 2.0, 4.0];
        for (a, b) in dec.eigenvalues().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        // closed form 2 - 2cos(2πk/N) for a larger circulant
        let grid = TorusGrid::new(1, 16.0, 16).unwrap();
        let lap = assemble_laplacian(&make_metric(&grid, &MetricProfile::Identity).unwrap());
        let dec = decompose(&lap).unwrap();
        let mut closed: Vec<f64> = (0..16)
            .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / 16.0).cos())
            .collect();
        closed.sort_by(f64::total_cmp);
        for (a, b) in dec.eigenvalues().iter().zip(&closed) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_invariants() {
        for dim in [1, 2] {
            let (lap, dec) = setup(dim, if dim == 1 { 24 } else { 10 }, bump());
            let m = dec.measure().clone();
            let n = dec.len();
            assert_eq!(dec.eigenvalues()[0], 0.0);
            let phi0 = dec.eigenvector(0);
            let mean = phi0.iter().sum::<f64>() / n as f64;
            assert!(phi0.iter().all(|v| (v - mean).abs() < 1e-10));
            for j in 0..n {
                let pj = dec.eigenvector(j);
                for k in 0..n {
                    let ip = weighted_inner(&pj, &dec.eigenvector(k), &m).unwrap();
                    let target = if j == k { 1.0 } else { 0.0 };
                    assert!((ip - target).abs() < 1e-10);
                }
            }
            let trace: f64 = dec.eigenvalues().iter().sum();
            assert!((trace - lap.weighted_trace()).abs() < 1e-10 * trace);
            let recon = dec.operator_matrix(|l| l);
            let a = lap.dense_operator();
            let scale = dec.lambda_max();
            for i in 0..n {
                for j in 0..n {
                    assert!((recon[(i, j)] - a[(i, j)]).abs() < 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn size_cap() {
        let grid = TorusGrid::new(2, 3.0, 8).unwrap();
        let lap = assemble_laplacian(&make_metric(&grid, &MetricProfile::Identity).unwrap());
        assert!(matches!(decompose_with_cap(&lap, 32), Err(Error::SizeCap { nodes: 64, cap: 32 })));
    }

    #[test]
    fn heat_apply_examples() {
        let (_, dec) = setup(1, 16, bump());
        let u: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin() + 0.3).collect();
        assert_eq!(dec.heat_apply(0.0, &u).unwrap(), u);
        let ones = vec![1.0; 16];
        for t in [0.01, 1.0, 100.0] {
            let h = dec.heat_apply(t, &ones).unwrap();
            assert!(h.iter().all(|v| (v - 1.0).abs() < 1e-12));
            let m = dec.measure();
            assert!(m.norm(&dec.heat_apply(t, &u).unwrap()).unwrap() <= m.norm(&u).unwrap() * (1.0 + 1e-14));
        }
        let late = dec.heat_apply(1e4, &u).unwrap();
        let limit = dec.heat_limit(&u).unwrap();
        for (a, b) in late.iter().zip(&limit) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(dec.heat_apply(-1.0, &u).is_err());
    }

    #[test]
    fn heat_kernel_symmetry_and_mass() {
        let (_, dec) = setup(2, 8, bump());
        let w = dec.measure().weights().to_vec();
        for t in [0.01, 0.1, 1.0, 10.0] {
            for i in [0, 17, 40] {
                let mass: f64 = (0..dec.len()).map(|j| dec.heat_kernel(t, i, j).unwrap() * w[j]).sum();
                assert!((mass - 1.0).abs() < 1e-10);
                for j in [3, 29] {
                    assert_eq!(dec.heat_kernel(t, i, j).unwrap(), dec.heat_kernel(t, j, i).unwrap());
                }
            }
        }
        assert!(dec.heat_kernel(0.0, 0, 1).is_err());
    }

    #[test]
    fn frac_spectral_examples() {
        let (lap, dec) = setup(1, 16, bump());
        let u: Vec<f64> = (0..16).map(|i| (i as f64).cos() * 0.5 + (i as f64 * 0.2)).collect();
        let a1 = dec.frac_apply_spectral(1.0, &u).unwrap();
        let au = lap.apply(&u).unwrap();
        for (a, b) in a1.iter().zip(&au) {
            assert!((a - b).abs() < 1e-10);
        }
        let phi = dec.eigenvector(5);
        let out = dec.frac_apply_spectral(0.3, &phi).unwrap();
        let lam = dec.eigenvalues()[5].powf(0.3);
        for (a, b) in out.iter().zip(&phi) {
            assert!((a - lam * b).abs() < 1e-12);
        }
        let ab = dec.frac_apply_spectral(0.25, &dec.frac_apply_spectral(0.5, &u).unwrap()).unwrap();
        let direct = dec.frac_apply_spectral(0.75, &u).unwrap();
        for (a, b) in ab.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(dec.frac_apply_spectral(0.0, &u).is_err());
        assert!(dec.frac_apply_spectral(1.5, &u).is_err());
    }
}

use faer::Mat;

use crate::error::{check_alpha_open, check_len, Error, Result};
use crate::geometry::{MetricField, TorusGrid};
use crate::quadrature::{LogQuadrature, TailModel};
use crate::special::gamma_neg;

use super::decomposition::SpectralDecomposition;

/// Multiplicative slack allowed when checking that the quadrature window brackets the spectrum.
pub const WINDOW_SLACK: f64 = 1.0;

/// `(−Δ_g)^α u = Γ(−α)⁻¹ ∫₀^∞ (e^{tΔ_g}u − u) t^{−1−α} dt`, evaluated with the
/// log-trapezoid rule through repeated heat-semigroup applications.
///
/// Outside the window `e^{tΔ}u − u` is linear in `t` near zero and constant for large `t`;
/// both tails are added in closed form.
pub fn frac_apply_balakrishnan(
    dec: &SpectralDecomposition,
    alpha: f64,
    u: &[f64],
    quad: &LogQuadrature,
) -> Result<Vec<f64>> {
    check_alpha_open(alpha)?;
    check_len(dec.len(), u.len())?;
    quad.validate()?;
    quad.check_covers(dec.spectral_gap(), dec.lambda_max(), WINDOW_SLACK)?;

    let pts = quad.points();
    let mut out = vec![0.0; u.len()];
    let mut failure = None;
    quad.integrate_rows(
        |q, row| match dec.heat_increment(pts[q].t, u) {
            Ok(d) => row.copy_from_slice(&d),
            Err(e) => failure = Some(e),
        },
        &mut out,
        -1.0 - alpha,
        TailModel::Power(1.0),
        TailModel::Power(0.0),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let g = gamma_neg(alpha);
    out.iter_mut().for_each(|v| *v /= g);
    Ok(out)
}

/// Singular jump kernel `K_g(x_i, x_j)` of the fractional Dirichlet form on a list of node pairs.
#[derive(Clone, Debug)]
pub struct FracKernel {
    pub alpha: f64,
    pub quad: LogQuadrature,
    pub pairs: Vec<(usize, usize)>,
    pub values: Vec<f64>,
}

fn kernel_prefactor(alpha: f64) -> f64 {
    1.0 / (2.0 * gamma_neg(alpha).abs())
}

/// `K_g(z,x) = (2|Γ(−α)|)⁻¹ √|g(x)| √|g(z)| ∫₀^∞ e^{tΔ_g}(z,x) t^{−1−α} dt` for each pair.
///
/// On the torus the heat kernel tends to `1/vol` as `t → ∞`, which is integrable against
/// `t^{−1−α}`; that constant tail beyond `t_max` is added in closed form.
pub fn jump_kernel(
    dec: &SpectralDecomposition,
    metric: &MetricField,
    alpha: f64,
    pairs: &[(usize, usize)],
    quad: &LogQuadrature,
) -> Result<FracKernel> {
    check_alpha_open(alpha)?;
    quad.validate()?;
    check_len(dec.len(), metric.grid().node_count())?;
    if let Some(&(i, _)) = pairs.iter().find(|(i, j)| i == j) {
        return Err(Error::InvalidParameter(format!(
            "jump kernel is singular on the diagonal (pair ({i}, {i}))"
        )));
    }
    let pts = quad.points();
    let sqrt_det = metric.det_sqrt();
    let pref = kernel_prefactor(alpha);
    let mut values = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        let samples: Vec<f64> = pts
            .iter()
            .map(|p| dec.heat_kernel(p.t, i, j))
            .collect::<Result<_>>()?;
        let integral = quad.integrate(&samples, -1.0 - alpha, TailModel::Power(1.0), TailModel::Power(0.0));
        values.push(pref * sqrt_det[i] * sqrt_det[j] * integral);
    }
    Ok(FracKernel {
        alpha,
        quad: *quad,
        pairs: pairs.to_vec(),
        values,
    })
}

/// The jump kernel on all pairs at once, with zero diagonal.
///
/// Off the diagonal `Σ_k φ_k(x_i)φ_k(x_j) = 0`, so the time integral of the heat kernel equals
/// `Σ_k φ_k(x_i)φ_k(x_j) ∫ (e^{−λ_k t} − 1) t^{−1−α} dt`; the per-mode integrals use the same
/// quadrature and tails as [`jump_kernel`].
#[derive(Clone, Debug)]
pub struct DenseJumpKernel {
    pub alpha: f64,
    pub matrix: Mat<f64>,
    pub cell_volume: f64,
}

pub fn jump_kernel_matrix(
    dec: &SpectralDecomposition,
    metric: &MetricField,
    alpha: f64,
    quad: &LogQuadrature,
) -> Result<DenseJumpKernel> {
    check_alpha_open(alpha)?;
    quad.validate()?;
    check_len(dec.len(), metric.grid().node_count())?;
    let pts = quad.points();
    let mode_integral = |lam: f64| {
        let samples: Vec<f64> = pts.iter().map(|p| (-lam * p.t).exp_m1()).collect();
        quad.integrate(&samples, -1.0 - alpha, TailModel::Power(1.0), TailModel::Power(0.0))
    };
    let mut m = dec.kernel_matrix(mode_integral);
    let sqrt_det = metric.det_sqrt();
    let pref = kernel_prefactor(alpha);
    let n = dec.len();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = if i == j { 0.0 } else { pref * sqrt_det[i] * sqrt_det[j] * m[(i, j)] };
        }
    }
    Ok(DenseJumpKernel {
        alpha,
        matrix: m,
        cell_volume: metric.grid().cell_volume(),
    })
}

/// Closed-form whole-space kernel `4^α Γ(n/2+α) / (2 π^{n/2} |Γ(−α)|) · r^{−n−2α}`.
pub fn euclidean_kernel(dim: usize, alpha: f64, r: f64) -> f64 {
    let n = dim as f64;
    let c = 4f64.powf(alpha) * crate::special::gamma(0.5 * n + alpha)
        / (2.0 * std::f64::consts::PI.powf(0.5 * n) * gamma_neg(alpha).abs());
    c * r.powf(-n - 2.0 * alpha)
}

impl FracKernel {
    /// Smallest `C ≥ 1` with `C⁻¹ r^{−n−2α} ≤ K ≤ C r^{−n−2α}` over the stored pairs,
    /// `r` the torus distance.
    pub fn sandwich_constant(&self, grid: &TorusGrid) -> f64 {
        let p = grid.dim() as f64 + 2.0 * self.alpha;
        self.pairs
            .iter()
            .zip(&self.values)
            .map(|(&(i, j), &k)| {
                let scaled = k * grid.node_distance(i, j).powf(p);
                scaled.max(1.0 / scaled)
            })
            .fold(1.0, f64::max)
    }
}

/// `h^{2n} Σ_{i≠j} K(i,j) (u_i − u_j)(v_i − v_j)`.
pub fn energy_form(kernel: &DenseJumpKernel, u: &[f64], v: &[f64]) -> Result<f64> {
    let n = kernel.matrix.nrows();
    check_len(n, u.len())?;
    check_len(n, v.len())?;
    let mut diag_part = 0.0;
    let mut cross = 0.0;
    for j in 0..n {
        let col = kernel.matrix.col(j);
        let mut row_sum = 0.0;
        let mut ku = 0.0;
        for i in 0..n {
            row_sum += col[i];
            ku += col[i] * u[i];
        }
        diag_part += row_sum * u[j] * v[j];
        cross += ku * v[j];
    }
    Ok(2.0 * kernel.cell_volume * kernel.cell_volume * (diag_part - cross))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_metric, weighted_inner, MetricProfile};
    use crate::spectral::{assemble_laplacian, decompose};

    fn setup(dim: usize, n: usize, l: f64, p: MetricProfile) -> (MetricField, SpectralDecomposition) {
        let grid = TorusGrid::new(dim, l, n).unwrap();
        let metric = make_metric(&grid, &p).unwrap();
        let dec = decompose(&assemble_laplacian(&metric)).unwrap();
        (metric, dec)
    }

    fn rel_err(a: &[f64], b: &[f64], dec: &SpectralDecomposition) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        dec.measure().norm(&d).unwrap() / dec.measure().norm(b).unwrap()
    }

    #[test]
    fn balakrishnan_matches_spectral_identity_1d() {
        let (_, dec) = setup(1, 16, 4.0, MetricProfile::Identity);
        let u: Vec<f64> = (0..16).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
        let q = LogQuadrature::default();
        let bal = frac_apply_balakrishnan(&dec, 0.5, &u, &q).unwrap();
        let spec = dec.frac_apply_spectral(0.5, &u).unwrap();
        assert!(rel_err(&bal, &spec, &dec) < 1e-6);
    }

    #[test]
    fn balakrishnan_on_bump_metric() {
        let p = MetricProfile::ConformalBump {
            beta: 0.5,
            sigma: 0.4,
            center: None,
            r0: 0.8,
        };
        let (_, dec) = setup(1, 24, 3.0, p);
        let u: Vec<f64> = (0..24).map(|i| (i as f64 * 0.9).cos() + 0.1 * i as f64).collect();
        for alpha in [0.25, 0.75] {
            let bal = frac_apply_balakrishnan(&dec, alpha, &u, &LogQuadrature::default()).unwrap();
            let spec = dec.frac_apply_spectral(alpha, &u).unwrap();
            let e = rel_err(&bal, &spec, &dec);
            assert!(e < 1e-5, "alpha {alpha}: {e}");
        }
        let c = vec![3.0; 24];
        let out = frac_apply_balakrishnan(&dec, 0.5, &c, &LogQuadrature::default()).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn balakrishnan_window_error() {
        let (_, dec) = setup(1, 16, 4.0, MetricProfile::Identity);
        let u = vec![0.0; 16];
        let narrow = LogQuadrature::new(1e-1, 1e4, 100).unwrap();
        assert!(matches!(
            frac_apply_balakrishnan(&dec, 0.5, &u, &narrow),
            Err(Error::QuadratureWindow(_))
        ));
    }

    #[test]
    fn pairwise_kernel_matches_dense_and_spectral() {
        let p = MetricProfile::ConformalBump {
            beta: 0.5,
            sigma: 0.4,
            center: None,
            r0: 0.8,
        };
        let (metric, dec) = setup(2, 8, 3.0, p);
        let q = LogQuadrature::default();
        let pairs = vec![(0, 1), (5, 40), (40, 5), (9, 27)];
        let k = jump_kernel(&dec, &metric, 0.5, &pairs, &q).unwrap();
        let dense = jump_kernel_matrix(&dec, &metric, 0.5, &q).unwrap();
        // exact: K = −½ √g_i √g_j (A^α kernel)_ij off the diagonal
        let frac = dec.frac_kernel_matrix(0.5).unwrap();
        for (&(i, j), &v) in k.pairs.iter().zip(&k.values) {
            let exact = -0.5 * metric.det_sqrt()[i] * metric.det_sqrt()[j] * frac[(i, j)];
            assert!((v - exact).abs() < 1e-7 * exact.abs(), "{v} vs {exact}");
            assert!((dense.matrix[(i, j)] - exact).abs() < 1e-7 * exact.abs());
            assert!(v > 0.0);
        }
        assert_eq!(k.values[1], k.values[2]);
        assert!(jump_kernel(&dec, &metric, 0.5, &[(3, 3)], &q).is_err());
    }

    #[test]
    fn energy_form_matches_fractional_pairing() {
        let (metric, dec) = setup(2, 8, 3.0, MetricProfile::Identity);
        let kernel = jump_kernel_matrix(&dec, &metric, 0.5, &LogQuadrature::default()).unwrap();
        let n = dec.len();
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.31).sin()).collect();
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        let e = energy_form(&kernel, &u, &v).unwrap();
        let direct = weighted_inner(&dec.frac_apply_spectral(0.5, &u).unwrap(), &v, dec.measure()).unwrap();
        assert!((e - direct).abs() < 1e-7 * direct.abs().max(1.0));
        assert!((energy_form(&kernel, &v, &u).unwrap() - e).abs() < 1e-12);
        assert!(energy_form(&kernel, &vec![1.0; n], &v).unwrap().abs() < 1e-12);
        assert!(energy_form(&kernel, &u, &u).unwrap() > 0.0);
    }

    #[test]
    fn euclidean_constant_at_unit_distance() {
        assert!((euclidean_kernel(2, 0.5, 1.0) - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
    }
}

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{check_len, Error, Result};
use crate::geometry::TorusGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    Fourier,
    DifferenceQuotient,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevNormEstimate {
    pub order: f64,
    pub value: f64,
    pub method: NormMethod,
}

/// Unnormalized DFT of nodal data (`U_k = Σ_j u_j e^{−2πi jk/N}` per axis).
pub fn fft_nodal(grid: &TorusGrid, u: &[f64]) -> Result<Vec<Complex64>> {
    check_len(grid.node_count(), u.len())?;
    let n = grid.points_per_side();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut data: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // rows: node index ix + N*iy, so contiguous chunks are lines along x
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    if grid.dim() == 2 {
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for ix in 0..n {
            for iy in 0..n {
                col[iy] = data[ix + n * iy];
            }
            fft.process(&mut col);
            for iy in 0..n {
                data[ix + n * iy] = col[iy];
            }
        }
    }
    Ok(data)
}

/// Physical frequency `2πk/L` of DFT index `k`, folded to `|k| ≤ N/2`.
pub fn frequency(grid: &TorusGrid, k: usize) -> f64 {
    let n = grid.points_per_side() as i64;
    let k = k as i64;
    let signed = if k > n / 2 { k - n } else { k };
    std::f64::consts::TAU * signed as f64 / grid.side_length()
}

/// `|ξ|²` for every DFT index in node order.
fn frequency_squares(grid: &TorusGrid) -> Vec<f64> {
    let n = grid.points_per_side();
    (0..grid.node_count())
        .map(|i| {
            let a = frequency(grid, i % n);
            if grid.dim() == 2 {
                let b = frequency(grid, i / n);
                a * a + b * b
            } else {
                a * a
            }
        })
        .collect()
}

/// `Σ_ξ m(|ξ|²) |û(ξ)|²` normalized so that `m ≡ 1` gives `Σ u_i² h^dim`.
fn weighted_energy<F: Fn(f64) -> f64>(grid: &TorusGrid, spectrum: &[Complex64], symbol: F) -> f64 {
    let scale = grid.cell_volume() / grid.node_count() as f64;
    frequency_squares(grid)
        .iter()
        .zip(spectrum)
        .map(|(&xi2, c)| symbol(xi2) * c.norm_sqr())
        .sum::<f64>()
        * scale
}

/// `(Σ_ξ (1+|ξ|²)^s |û(ξ)|²)^{1/2}` with the flat torus symbol.
pub fn sobolev_norm_fourier(grid: &TorusGrid, u: &[f64], s: f64) -> Result<SobolevNormEstimate> {
    let spec = fft_nodal(grid, u)?;
    let e = weighted_energy(grid, &spec, |xi2| (1.0 + xi2).powf(s));
    Ok(SobolevNormEstimate {
        order: s,
        value: e.max(0.0).sqrt(),
        method: NormMethod::Fourier,
    })
}

/// Homogeneous seminorm `(Σ_ξ |ξ|^{2s} |û(ξ)|²)^{1/2}`.
pub fn sobolev_seminorm_fourier(grid: &TorusGrid, u: &[f64], s: f64) -> Result<f64> {
    let spec = fft_nodal(grid, u)?;
    let e = weighted_energy(grid, &spec, |xi2| if xi2 == 0.0 { 0.0 } else { xi2.powf(s) });
    Ok(e.max(0.0).sqrt())
}

/// `sup_{h ∈ shifts} h^{−β} Σ_j ‖τ_{j,h}u − u‖_{H^μ}` with `h` given in grid steps.
pub fn diff_quotient_seminorm(grid: &TorusGrid, u: &[f64], mu: f64, beta: f64, shifts: &[usize]) -> Result<f64> {
    check_len(grid.node_count(), u.len())?;
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0,1], got {beta}")));
    }
    if shifts.is_empty() || shifts.iter().any(|&s| s == 0 || s >= grid.points_per_side()) {
        return Err(Error::InvalidParameter("shifts must be nonempty and within (0, N)".into()));
    }
    let mut best = 0.0f64;
    for &s in shifts {
        let h = s as f64 * grid.spacing();
        let mut total = 0.0;
        for axis in 0..grid.dim() {
            let d: Vec<f64> = (0..u.len())
                .map(|i| u[grid.shifted(i, axis, s as isize)] - u[i])
                .collect();
            total += sobolev_norm_fourier(grid, &d, mu)?.value;
        }
        best = best.max(total * h.powf(-beta));
    }
    Ok(best)
}

pub fn diff_quotient_estimate(grid: &TorusGrid, u: &[f64], mu: f64, beta: f64, shifts: &[usize]) -> Result<SobolevNormEstimate> {
    Ok(SobolevNormEstimate {
        order: mu + beta,
        value: diff_quotient_seminorm(grid, u, mu, beta, shifts)?,
        method: NormMethod::DifferenceQuotient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(grid: &TorusGrid, k: [f64; 2], amp: f64) -> Vec<f64> {
        let l = grid.side_length();
        (0..grid.node_count())
            .map(|i| {
                let x = grid.coordinates(i);
                amp * (std::f64::consts::TAU * (k[0] * x[0] + k[1] * x[1]) / l).cos()
            })
            .collect()
    }

    #[test]
    fn constants_and_parseval() {
        for dim in [1, 2] {
            let g = TorusGrid::new(dim, 6.0, 16).unwrap();
            let c = vec![-1.5; g.node_count()];
            for s in [-1.0, 0.0, 0.7, 3.0] {
                let v = sobolev_norm_fourier(&g, &c, s).unwrap().value;
                assert!((v - 1.5 * g.total_volume().sqrt()).abs() < 1e-12);
            }
            let u: Vec<f64> = (0..g.node_count()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            let l2 = (u.iter().map(|v| v * v).sum::<f64>() * g.cell_volume()).sqrt();
            assert!((sobolev_norm_fourier(&g, &u, 0.0).unwrap().value - l2).abs() < 1e-12 * l2);
        }
    }

    #[test]
    fn single_mode_symbol() {
        let g = TorusGrid::new(2, 6.0, 16).unwrap();
        let u = mode(&g, [2.0, 1.0], 0.8);
        let xi2 = (std::f64::consts::TAU / 6.0).powi(2) * 5.0;
        let l2 = 0.8 * (g.total_volume() / 2.0).sqrt();
        for s in [0.5, 1.3] {
            let v = sobolev_norm_fourier(&g, &u, s).unwrap().value;
            assert!((v - (1.0 + xi2).powf(s / 2.0) * l2).abs() < 1e-10 * v);
        }
    }

    #[test]
    fn difference_quotients() {
        let g = TorusGrid::new(1, 6.0, 64).unwrap();
        let c = vec![2.0; 64];
        assert_eq!(diff_quotient_seminorm(&g, &c, 0.0, 0.5, &[1, 2]).unwrap(), 0.0);
        // per-mode bound |e^{iξh} − 1| ≤ 2^{1−β} |ξh|^β
        let u = mode(&g, [3.0, 0.0], 1.0);
        for beta in [0.3, 0.7, 1.0] {
            let dq = diff_quotient_seminorm(&g, &u, 0.2, beta, &[1, 2, 4, 8]).unwrap();
            let bound = 2f64.powf(1.0 - beta) * sobolev_seminorm_fourier(&g, &u, beta).unwrap()
                * (1.0 + (std::f64::consts::TAU * 3.0 / 6.0).powi(2)).powf(0.1);
            assert!(dq <= bound * (1.0 + 1e-12), "beta {beta}: {dq} > {bound}");
        }
        // a sawtooth has no H^{1/2} regularity: the quotient grows with β
        let saw: Vec<f64> = (0..64).map(|i| (i % 16) as f64 / 16.0).collect();
        let shifts = [1, 2, 4];
        let lo = diff_quotient_seminorm(&g, &saw, 0.0, 0.3, &shifts).unwrap();
        let hi = diff_quotient_seminorm(&g, &saw, 0.0, 1.0, &shifts).unwrap();
        assert!(hi > 2.0 * lo);
        assert!(diff_quotient_seminorm(&g, &saw, 0.0, 1.5, &shifts).is_err());
    }
}

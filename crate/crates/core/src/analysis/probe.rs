use faer::Mat;

use crate::error::{check_alpha_open, Error, Result};
use crate::exterior::ExteriorConfig;
use crate::geometry::TorusGrid;
use crate::special::neumann_trace_constant;
use crate::spectral::SpectralDecomposition;

use super::sobolev::{sobolev_norm_fourier, sobolev_seminorm_fourier};

/// Ratio of last to first norm below which a sequence counts as bounded.
pub const BOUNDED_RATIO: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    pub n: usize,
    pub s: f64,
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub rows: Vec<ProbeRow>,
    pub ratio: f64,
    pub bounded: bool,
}

impl RegularityReport {
    pub fn verdict(&self) -> &'static str {
        if self.bounded {
            "BOUNDED"
        } else {
            "GROWING"
        }
    }
}

/// Flat `H^s` norms of solutions on a grid sequence.
pub fn regularity_probe(solutions: &[(TorusGrid, Vec<f64>)], s: f64) -> Result<RegularityReport> {
    if solutions.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "regularity probe needs at least 3 grids, got {}",
            solutions.len()
        )));
    }
    let rows = solutions
        .iter()
        .map(|(g, u)| {
            Ok(ProbeRow {
                n: g.points_per_side(),
                s,
                norm: sobolev_norm_fourier(g, u, s)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio = rows[rows.len() - 1].norm / rows[0].norm;
    Ok(RegularityReport {
        bounded: ratio < BOUNDED_RATIO,
        rows,
        ratio,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantReport {
    /// Best `C` in `‖u‖_{L²_w} ≤ C E(u,u)^{1/2}` over all Ω-supported `u`.
    pub poincare: f64,
    /// Largest `|u|²_{H^α} / E_ext(ũ)` over the test family, with `E_ext = d_α ⟨A^α u, u⟩_w`
    /// the weighted Dirichlet energy of the Bessel extension.
    pub trace: f64,
}

/// Poincaré constant of the nonlocal energy on Ω and trace constant of the extension.
pub fn constant_estimates(
    dec: &SpectralDecomposition,
    config: &ExteriorConfig,
    alpha: f64,
    family: &[Vec<f64>],
) -> Result<ConstantReport> {
    check_alpha_open(alpha)?;
    if family.is_empty() {
        return Err(Error::InvalidParameter("constant estimates need a nonempty test family".into()));
    }
    let k = dec.frac_kernel_matrix(alpha)?;
    let w = dec.measure().weights();
    let om = config.omega();
    // E(u,u) = uᵀ W K W u on Ω; with v = W^{1/2} u the Rayleigh quotient is vᵀ (W^{1/2} K W^{1/2}) v.
    let block = Mat::<f64>::from_fn(om.len(), om.len(), |a, b| {
        w[om[a]].sqrt() * k[(om[a], om[b])] * w[om[b]].sqrt()
    });
    let eig = block
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let mu_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(mu_min > 0.0) {
        return Err(Error::Eigen(format!("Ω block not positive definite (smallest eigenvalue {mu_min:e})")));
    }

    let d = neumann_trace_constant(alpha);
    let grid = config.grid();
    let mut trace = 0.0f64;
    for u in family {
        let au = dec.frac_apply_spectral(alpha, u)?;
        let energy: f64 = d * au.iter().zip(u).zip(w).map(|((a, b), w)| a * b * w).sum::<f64>();
        if energy > 0.0 {
            let semi = sobolev_seminorm_fourier(grid, u, alpha)?;
            trace = trace.max(semi * semi / energy);
        }
    }
    Ok(ConstantReport {
        poincare: 1.0 / mu_min.sqrt(),
        trace,
    })
}

use crate::error::{check_alpha_open, Error, Result};
use crate::special::neumann_trace_constant;
use crate::spectral::SpectralDecomposition;

use super::bessel::extension_profile;

/// Mode-wise Bessel extension of a nodal function `u` into the half-space `z ≥ 0`:
///
/// ```text
/// ũ(x, z) = Σ_k û_k ψ_α(√λ_k z) φ_k(x),     ψ_α(s) = s^α K_α(s) / (2^{α−1} Γ(α)).
/// ```
///
/// The zero mode extends constantly since `ψ_α(0) = 1`.
#[derive(Clone, Debug)]
pub struct ExtensionSolution<'a> {
    alpha: f64,
    dec: &'a SpectralDecomposition,
    coefficients: Vec<f64>,
}

pub fn extend_dirichlet<'a>(dec: &'a SpectralDecomposition, alpha: f64, u: &[f64]) -> Result<ExtensionSolution<'a>> {
    check_alpha_open(alpha)?;
    let coefficients = dec.coefficients(u)?;
    Ok(ExtensionSolution {
        alpha,
        dec,
        coefficients,
    })
}

impl<'a> ExtensionSolution<'a> {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn decomposition(&self) -> &'a SpectralDecomposition {
        self.dec
    }

    /// `û_k = ⟨φ_k, u⟩_w`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `ψ_α(√λ_k z)`.
    pub fn mode_profile(&self, k: usize, z: f64) -> Result<f64> {
        let lam = *self
            .dec
            .eigenvalues()
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("mode index {k} out of range")))?;
        if !(z >= 0.0) {
            return Err(Error::InvalidParameter(format!("extension height must be >= 0, got {z}")));
        }
        extension_profile(self.alpha, lam.sqrt() * z)
    }

    /// `ũ(·, z)` at every node.
    pub fn field_at(&self, z: f64) -> Result<Vec<f64>> {
        let mut c = self.coefficients.clone();
        for (k, ck) in c.iter_mut().enumerate() {
            *ck *= self.mode_profile(k, z)?;
        }
        self.dec.synthesize(&c)
    }

    pub fn evaluate(&self, x_index: usize, z: f64) -> Result<f64> {
        let v = self.dec.vectors();
        if x_index >= self.dec.len() {
            return Err(Error::InvalidParameter(format!("node index {x_index} out of range")));
        }
        let mut s = 0.0;
        for (k, ck) in self.coefficients.iter().enumerate() {
            s += ck * self.mode_profile(k, z)? * v[(x_index, k)];
        }
        Ok(s)
    }
}

/// Weighted Neumann trace `lim_{z→0} z^{1−2α} ∂_z ũ`, evaluated mode by mode from the
/// Bessel small-argument expansion: `−d_α λ_k^α û_k`.
pub fn neumann_trace(sol: &ExtensionSolution<'_>) -> Result<Vec<f64>> {
    let d = neumann_trace_constant(sol.alpha);
    let c: Vec<f64> = sol
        .coefficients
        .iter()
        .zip(sol.dec.eigenvalues())
        .map(|(ck, &lam)| if lam > 0.0 { -d * lam.powf(sol.alpha) * ck } else { 0.0 })
        .collect();
    sol.dec.synthesize(&c)
}

/// Extrapolates `q(z_m)`, `z_m = z_0 r^{−m}`, to `z → 0` assuming
/// `q(z) = Q + Σ_e c_e z^e` with the given exponents (used in order).
pub fn richardson(values: &[f64], ratio: f64, exponents: &[f64]) -> f64 {
    let mut v = values.to_vec();
    for &e in exponents.iter().take(values.len().saturating_sub(1)) {
        let f = ratio.powf(e);
        v = v.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
    }
    v[0]
}

/// Error exponents of `q(z) = 2α z^{−2α}(ũ(z) − ũ(0))` as `z → 0`: `2−2α, 2, 4−2α, 4, …`.
pub fn trace_exponents(alpha: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let j = (i / 2 + 1) as f64;
            if i % 2 == 0 {
                2.0 * j - 2.0 * alpha
            } else {
                2.0 * j
            }
        })
        .collect()
}

/// Settings for the numeric weighted Neumann trace.
#[derive(Clone, Copy, Debug)]
pub struct TraceExtrapolation {
    /// Largest height, in units of `1/√λ_max`.
    pub scaled_start: f64,
    pub ratio: f64,
    pub levels: usize,
}

impl Default for TraceExtrapolation {
    fn default() -> Self {
        Self {
            scaled_start: 0.5,
            ratio: 2.0,
            levels: 8,
        }
    }
}

impl TraceExtrapolation {
    fn heights(&self, lambda_max: f64) -> Vec<f64> {
        let z0 = self.scaled_start / lambda_max.sqrt();
        (0..self.levels).map(|m| z0 * self.ratio.powi(-(m as i32))).collect()
    }
}

/// Weighted Neumann trace from extension values on a common sequence of heights:
/// `q(z) = 2α z^{−2α} (ũ(x,z) − u(x))` extrapolated to `z = 0`.
pub fn numeric_neumann_trace(sol: &ExtensionSolution<'_>, opts: TraceExtrapolation) -> Result<Vec<f64>> {
    let alpha = sol.alpha;
    let base = sol.field_at(0.0)?;
    let heights = opts.heights(sol.dec.lambda_max());
    let mut samples = Vec::with_capacity(heights.len());
    for &z in &heights {
        let f = sol.field_at(z)?;
        let scale = 2.0 * alpha * z.powf(-2.0 * alpha);
        samples.push(f.iter().zip(&base).map(|(a, b)| scale * (a - b)).collect::<Vec<f64>>());
    }
    let exps = trace_exponents(alpha, heights.len());
    Ok((0..base.len())
        .map(|i| {
            let q: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            richardson(&q, opts.ratio, &exps)
        })
        .collect())
}

/// Per-mode ratio `trace_k / (λ_k^α û_k)` with the trace limit taken numerically on heights
/// shared by all modes. Entry `k` is `None` for the zero mode.
pub fn trace_ratios(dec: &SpectralDecomposition, alpha: f64, opts: TraceExtrapolation) -> Result<Vec<Option<f64>>> {
    check_alpha_open(alpha)?;
    let heights = opts.heights(dec.lambda_max());
    let exps = trace_exponents(alpha, heights.len());
    dec.eigenvalues()
        .iter()
        .map(|&lam| {
            if lam <= 0.0 {
                return Ok(None);
            }
            let mut q = Vec::with_capacity(heights.len());
            for &z in &heights {
                let psi = extension_profile(alpha, lam.sqrt() * z)?;
                q.push(2.0 * alpha * z.powf(-2.0 * alpha) * (psi - 1.0));
            }
            Ok(Some(richardson(&q, opts.ratio, &exps) / lam.powf(alpha)))
        })
        .collect()
}

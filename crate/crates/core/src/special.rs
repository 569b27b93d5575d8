//! Gamma-function helpers on top of `statrs`.

use statrs::function::gamma::gamma as statrs_gamma;

pub fn gamma(x: f64) -> f64 {
    statrs_gamma(x)
}

/// `Γ(-α)` for `α ∈ (0,1)` via the recursion `Γ(1-α) = -α Γ(-α)`.
pub fn gamma_neg(alpha: f64) -> f64 {
    statrs_gamma(1.0 - alpha) / (-alpha)
}

/// Constant relating the weighted Neumann trace of the normalized Bessel extension to the
/// fractional power: `d_α = 2^{1-2α} Γ(1-α) / Γ(α)`.
pub fn neumann_trace_constant(alpha: f64) -> f64 {
    2f64.powf(1.0 - 2.0 * alpha) * statrs_gamma(1.0 - alpha) / statrs_gamma(alpha)
}

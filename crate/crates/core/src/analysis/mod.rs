//! Discrete Sobolev norms on the flat torus and regularity diagnostics.

mod probe;
mod sobolev;

pub use probe::{constant_estimates, regularity_probe, ConstantReport, ProbeRow, RegularityReport, BOUNDED_RATIO};
pub use sobolev::{
    diff_quotient_estimate, diff_quotient_seminorm, fft_nodal, frequency, sobolev_norm_fourier,
    sobolev_seminorm_fourier, NormMethod, SobolevNormEstimate,
};

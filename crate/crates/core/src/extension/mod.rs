//! Degenerate elliptic extension.

mod bessel;
mod fem;
mod representation;
mod solution;

pub use bessel::{bessel_k, bessel_k_order, extension_profile, extension_profile_flux};
pub use fem::{
    default_cg_options, element_matrices, fd_extension_solve, ElementMatrices, ExtensionField,
    ExtensionMesh, MixedBoundary, DEFAULT_GRADING, DEFAULT_HEIGHT_SCALE, DEFAULT_LEVELS, MIN_HEIGHT_SCALE,
};
pub use representation::{Representation, SeriesCoefficients, MAX_SERIES_ORDER};
pub use solution::{
    extend_dirichlet, neumann_trace, numeric_neumann_trace, richardson, trace_exponents, trace_ratios,
    ExtensionSolution, TraceExtrapolation,
};

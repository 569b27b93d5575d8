//! Fractional Laplace–Beltrami operators `(−Δ_g)^α` on periodic grids.
//!
//! The crate realizes the fractional power of a variable-coefficient Laplace–Beltrami
//! operator in two independent ways (spectral calculus on a dense weighted eigendecomposition
//! and the heat-semigroup integral), builds its degenerate elliptic extension, solves exterior
//! Dirichlet problems, and evaluates the exterior Dirichlet-to-Neumann and source-to-solution
//! maps used in the inverse problem of recovering a metric from exterior data.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`geometry`] | torus grid, metric profiles, volume weights |
//! | [`spectral`] | discrete operator, eigendecomposition, heat semigroup, fractional powers, jump kernel |
//! | [`extension`] | Bessel extension, weighted Neumann trace, finite-element extension solver, representation formula |
//! | [`exterior`] | exterior Dirichlet problem, DtN maps, fractional Poisson problem |
//! | [`recovery`] | moments, heat-kernel comparison, gauge pullbacks |
//! | [`analysis`] | discrete Sobolev norms and regularity diagnostics |

pub mod analysis;
pub mod error;
pub mod extension;
pub mod exterior;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod recovery;
pub mod special;
pub mod spectral;
pub mod table;

pub use error::{Error, Result};

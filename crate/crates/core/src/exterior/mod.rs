//! Exterior Dirichlet problems, Dirichlet-to-Neumann maps and the source-to-solution map.

mod config;
mod solve;

pub use config::{set_distance, ExteriorConfig, Role, Shape};
pub use solve::{
    dtn_full, dtn_partial, laplacian_powers, poisson_solve, solve_exterior_dirichlet, source_to_solution_map,
    DtnRecord, ExteriorProblem, ExteriorSolution, SourceSolutionRecord, EXTERIOR_TOLERANCE,
};

//! Discrete Laplace–Beltrami operator, its weighted eigendecomposition, the heat semigroup,
//! and the two realizations of the fractional power (functional calculus and the
//! heat-semigroup integral), together with the singular jump kernel of the Dirichlet form.

mod decomposition;
mod kernel;
mod laplacian;
mod local_heat;

pub use decomposition::{decompose, decompose_with_cap, SpectralDecomposition, DEFAULT_NODE_CAP};
pub use kernel::{
    energy_form, euclidean_kernel, frac_apply_balakrishnan, jump_kernel, jump_kernel_matrix, DenseJumpKernel,
    FracKernel, WINDOW_SLACK,
};
pub use laplacian::{assemble_laplacian, DiscreteLaplaceBeltrami};
pub use local_heat::{LocalHeat, TAYLOR_LIMIT, TAYLOR_TERMS};

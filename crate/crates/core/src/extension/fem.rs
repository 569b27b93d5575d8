use crate::error::{check_alpha_open, check_len, Error, Result};
use crate::linalg::{conjugate_gradient, solve_tridiagonal, CgOptions};
use crate::spectral::DiscreteLaplaceBeltrami;

/// Heights `0 = z_0 < z_1 < … < z_P = H` of the extension variable.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionMesh {
    heights: Vec<f64>,
    grading: f64,
}

/// Number of intervals of the default mesh.
pub const DEFAULT_LEVELS: usize = 96;
/// Default truncation height in units of `1/√λ_1`.
pub const DEFAULT_HEIGHT_SCALE: f64 = 12.0;
/// Smallest admissible truncation height in units of `1/√λ_1`.
pub const MIN_HEIGHT_SCALE: f64 = 5.0;

/// Default grading exponent. The elements are linear in `y = z^{2α}/2α`, which absorbs the
/// boundary behaviour `1 + c z^{2α}`, so the grading only has to resolve the spread of decay
/// lengths `1/√λ_k` between `1/√λ_max` and `H`.
pub const DEFAULT_GRADING: f64 = 3.0;

impl ExtensionMesh {
    /// `z_p = H (p/P)^κ`.
    pub fn graded(height: f64, levels: usize, grading: f64) -> Result<Self> {
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::InvalidParameter(format!("extension height must be positive, got {height}")));
        }
        if levels < 2 {
            return Err(Error::InvalidParameter(format!("extension mesh needs at least 2 intervals, got {levels}")));
        }
        if !(grading >= 1.0) {
            return Err(Error::InvalidParameter(format!("grading exponent must be >= 1, got {grading}")));
        }
        let heights = (0..=levels)
            .map(|p| height * (p as f64 / levels as f64).powf(grading))
            .collect();
        Ok(Self { heights, grading })
    }

    /// Default mesh: `H = 12/√λ_1`, 96 intervals, default grading.
    pub fn standard(lambda1: f64) -> Result<Self> {
        if !(lambda1 > 0.0) {
            return Err(Error::InvalidParameter(format!("spectral gap must be positive, got {lambda1}")));
        }
        Self::graded(DEFAULT_HEIGHT_SCALE / lambda1.sqrt(), DEFAULT_LEVELS, DEFAULT_GRADING)
    }

    /// Same height and grading with twice the number of intervals.
    pub fn refined(&self) -> Self {
        Self::graded(self.height(), 2 * self.intervals(), self.grading).expect("refining a valid mesh")
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn height(&self) -> f64 {
        *self.heights.last().unwrap()
    }

    pub fn intervals(&self) -> usize {
        self.heights.len() - 1
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Errors unless `H ≥ 5/√λ_1`.
    pub fn check_truncation(&self, lambda1: f64) -> Result<()> {
        let need = MIN_HEIGHT_SCALE / lambda1.sqrt();
        if self.height() < need {
            return Err(Error::InvalidParameter(format!(
                "extension height {} below {need} = 5/sqrt(lambda_1)",
                self.height()
            )));
        }
        Ok(())
    }

    /// Tridiagonal stiffness and mass matrices of `∫ z^{1−2α} (u_z v_z + λ u v) dz` for
    /// elements linear in `y = z^{2α}/2α`, where the form reads
    /// `∫ (u_y v_y + λ (2αy)^β u v) dy` with `β = (1−2α)/α`.
    /// Returned as `(k_diag, k_off, m_diag, m_off)`.
    fn weighted_matrices(&self, alpha: f64) -> [Vec<f64>; 4] {
        let beta = (1.0 - 2.0 * alpha) / alpha;
        let c = (2.0 * alpha).powf(beta);
        let y: Vec<f64> = self.heights.iter().map(|z| z.powf(2.0 * alpha) / (2.0 * alpha)).collect();
        let n = y.len();
        let mut kd = vec![0.0; n];
        let mut ko = vec![0.0; n - 1];
        let mut md = vec![0.0; n];
        let mut mo = vec![0.0; n - 1];
        for e in 0..n - 1 {
            let k = 1.0 / (y[e + 1] - y[e]);
            let el = element_matrices(y[e], y[e + 1], beta);
            kd[e] += k;
            kd[e + 1] += k;
            ko[e] -= k;
            md[e] += c * el.mass[0];
            mo[e] += c * el.mass[1];
            md[e + 1] += c * el.mass[2];
        }
        [kd, ko, md, mo]
    }
}

/// Exact weighted P1 element integrals on `[a, b]` with weight `z^γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementMatrices {
    /// `∫ z^γ ℓ_a' ℓ_a'`; the element stiffness is this times `[[1,−1],[−1,1]]`.
    pub stiffness: f64,
    /// `[∫ z^γ ℓ_a², ∫ z^γ ℓ_a ℓ_b, ∫ z^γ ℓ_b²]`.
    pub mass: [f64; 3],
}

pub fn element_matrices(a: f64, b: f64, gamma: f64) -> ElementMatrices {
    let h = b - a;
    if a == 0.0 {
        let s = b.powf(gamma + 1.0);
        return ElementMatrices {
            stiffness: s / (gamma + 1.0) / (h * h),
            mass: [
                s * (1.0 / (gamma + 1.0) - 2.0 / (gamma + 2.0) + 1.0 / (gamma + 3.0)),
                s * (1.0 / (gamma + 2.0) - 1.0 / (gamma + 3.0)),
                s / (gamma + 3.0),
            ],
        };
    }
    // z = a(1+u), u ∈ [0, δ]
    let delta = h / a;
    let scale = a.powf(gamma + 1.0);
    let j = |p: u32, q: u32| shifted_beta_integral(p, q, delta, gamma);
    ElementMatrices {
        stiffness: scale * j(0, 0) / (h * h),
        mass: [
            scale * j(0, 2) / (delta * delta),
            scale * j(1, 1) / (delta * delta),
            scale * j(2, 0) / (delta * delta),
        ],
    }
}

/// `∫₀^δ u^p (δ−u)^q (1+u)^γ du` for `p + q ≤ 2`.
fn shifted_beta_integral(p: u32, q: u32, delta: f64, gamma: f64) -> f64 {
    if delta < 0.5 {
        // binomial series of (1+u)^γ, each term a Beta integral
        let mut binom = 1.0;
        let mut dpow = delta.powi((p + q + 1) as i32);
        let mut sum = 0.0;
        for m in 0..200u32 {
            let x = (p + m + 1) as f64;
            let beta = match q {
                0 => 1.0 / x,
                1 => 1.0 / (x * (x + 1.0)),
                _ => 2.0 / (x * (x + 1.0) * (x + 2.0)),
            };
            let term = binom * dpow * beta;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            binom *= (gamma - m as f64) / (m as f64 + 1.0);
            dpow *= delta;
        }
        sum
    } else {
        // expand u^p (δ−u)^q in powers of v = 1+u and integrate v^{γ+k} exactly
        let poly = expand_in_shifted(p, q, delta);
        let top = 1.0 + delta;
        poly.iter()
            .enumerate()
            .map(|(k, c)| {
                let e = gamma + k as f64 + 1.0;
                c * (top.powf(e) - 1.0) / e
            })
            .sum()
    }
}

/// Coefficients of `u^p (δ−u)^q` as a polynomial in `v = 1+u`.
fn expand_in_shifted(p: u32, q: u32, delta: f64) -> Vec<f64> {
    // u = v − 1, δ − u = (δ + 1) − v
    let mut poly = vec![1.0];
    let mul = |poly: &Vec<f64>, c0: f64, c1: f64| {
        let mut out = vec![0.0; poly.len() + 1];
        for (k, &a) in poly.iter().enumerate() {
            out[k] += a * c0;
            out[k + 1] += a * c1;
        }
        out
    };
    for _ in 0..p {
        poly = mul(&poly, -1.0, 1.0);
    }
    for _ in 0..q {
        poly = mul(&poly, delta + 1.0, -1.0);
    }
    poly
}

/// Discrete extension field on the mesh: `values[p·n + i] ≈ ũ(x_i, z_p)`.
#[derive(Clone, Debug)]
pub struct ExtensionField {
    pub heights: Vec<f64>,
    pub node_count: usize,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Quadratic energy of the reduced system after each conjugate-gradient step.
    pub energy_history: Vec<f64>,
}

impl ExtensionField {
    pub fn level(&self, p: usize) -> &[f64] {
        &self.values[p * self.node_count..(p + 1) * self.node_count]
    }

    /// Restriction to the boundary `z = 0`.
    pub fn trace(&self) -> &[f64] {
        self.level(0)
    }
}

/// Boundary data of the mixed problem at `z = 0`.
#[derive(Clone, Copy, Debug)]
pub struct MixedBoundary<'a> {
    pub dirichlet_nodes: &'a [usize],
    pub neumann_nodes: &'a [usize],
    /// Values on `dirichlet_nodes`, in the same order.
    pub dirichlet_values: &'a [f64],
    /// Prescribed `−lim z^{1−2α} ∂_z ũ` on `neumann_nodes`, in the same order.
    pub neumann_values: &'a [f64],
}

impl<'a> MixedBoundary<'a> {
    pub fn dirichlet(nodes: &'a [usize], values: &'a [f64]) -> Self {
        Self {
            dirichlet_nodes: nodes,
            neumann_nodes: &[],
            dirichlet_values: values,
            neumann_values: &[],
        }
    }
}

pub fn default_cg_options() -> CgOptions {
    CgOptions {
        rel_tol: 1e-10,
        max_iter: 50_000,
    }
}

/// Finite-element solve of the weighted extension problem
///
/// ```text
/// −div_{x,z}(z^{1−2α} ∇ũ) = 0  in  z > 0,   ũ = f_D  on D × {0},
/// −z^{1−2α}∂_z ũ → f_N  on N × {0},           ∂_z ũ = 0  at z = H,
/// ```
///
/// discretized with the operator's stiffness and weights in `x` and P1 elements in
/// `y = z^{2α}/2α` on the mesh heights. The symmetric system `K_z ⊗ W + M_z ⊗ B` is solved by conjugate gradients with an
/// exact tridiagonal solve along each vertical line as preconditioner.
pub fn fd_extension_solve(
    op: &DiscreteLaplaceBeltrami,
    alpha: f64,
    mesh: &ExtensionMesh,
    boundary: MixedBoundary<'_>,
    opts: CgOptions,
) -> Result<ExtensionField> {
    check_alpha_open(alpha)?;
    let n = op.grid().node_count();
    check_len(boundary.dirichlet_nodes.len(), boundary.dirichlet_values.len())?;
    check_len(boundary.neumann_nodes.len(), boundary.neumann_values.len())?;
    let mut role = vec![0u8; n];
    for &i in boundary.dirichlet_nodes.iter().chain(boundary.neumann_nodes) {
        if i >= n {
            return Err(Error::InvalidParameter(format!("boundary node {i} out of range")));
        }
        if role[i] != 0 {
            return Err(Error::InvalidParameter(format!("boundary node {i} listed twice")));
        }
        role[i] = 1;
    }
    if role.iter().any(|&r| r == 0) {
        return Err(Error::InvalidParameter(
            "dirichlet and neumann nodes must cover every node".into(),
        ));
    }
    let w = op.measure().weights();
    let pure_neumann = boundary.dirichlet_nodes.is_empty();
    if pure_neumann {
        let flux: f64 = boundary.neumann_nodes.iter().zip(boundary.neumann_values).map(|(&i, f)| w[i] * f).sum();
        let size: f64 = boundary
            .neumann_nodes
            .iter()
            .zip(boundary.neumann_values)
            .map(|(&i, f)| w[i] * f.abs())
            .sum();
        if flux.abs() > 1e-10 * size.max(f64::MIN_POSITIVE) {
            return Err(Error::IncompatibleData(format!(
                "pure Neumann data must have zero weighted mean, got net flux {flux:e}"
            )));
        }
    }

    let levels = mesh.heights().len();
    let len = levels * n;
    let [kd, ko, md, mo] = mesh.weighted_matrices(alpha);
    let b_mat = op.stiffness();
    let b_diag = b_mat.diagonal();

    let mut constrained = vec![false; len];
    let mut lift = vec![0.0; len];
    // Dirichlet data lifted constantly in z: the z-stiffness annihilates it, which keeps the
    // right-hand side free of the 1/y_1 scale of the first element.
    for (&i, &f) in boundary.dirichlet_nodes.iter().zip(boundary.dirichlet_values) {
        constrained[i] = true;
        for p in 0..levels {
            lift[p * n + i] = f;
        }
    }

    let apply_full = |x: &[f64], y: &mut [f64]| {
        let mut bx = vec![0.0; len];
        for p in 0..levels {
            b_mat.mul_into(&x[p * n..(p + 1) * n], &mut bx[p * n..(p + 1) * n]);
        }
        for p in 0..levels {
            let row = p * n;
            for i in 0..n {
                let mut acc = kd[p] * w[i] * x[row + i] + md[p] * bx[row + i];
                if p > 0 {
                    let o = row - n;
                    acc += ko[p - 1] * w[i] * x[o + i] + mo[p - 1] * bx[o + i];
                }
                if p + 1 < levels {
                    let o = row + n;
                    acc += ko[p] * w[i] * x[o + i] + mo[p] * bx[o + i];
                }
                y[row + i] = acc;
            }
        }
    };
    let apply_free = |x: &[f64], y: &mut [f64]| {
        apply_full(x, y);
        for (yi, &c) in y.iter_mut().zip(&constrained) {
            if c {
                *yi = 0.0;
            }
        }
    };
    let precond = |r: &[f64], z: &mut [f64]| {
        let mut lower = Vec::with_capacity(levels);
        let mut diag = Vec::with_capacity(levels);
        let mut rhs = Vec::with_capacity(levels);
        for i in 0..n {
            let start = usize::from(constrained[i]);
            lower.clear();
            diag.clear();
            rhs.clear();
            for p in start..levels {
                diag.push(kd[p] * w[i] + md[p] * b_diag[i]);
                rhs.push(r[p * n + i]);
                if p + 1 < levels {
                    lower.push(ko[p] * w[i] + mo[p] * b_diag[i]);
                }
            }
            solve_tridiagonal(&lower, &diag, &mut rhs);
            if start == 1 {
                z[i] = 0.0;
            }
            for (k, p) in (start..levels).enumerate() {
                z[p * n + i] = rhs[k];
            }
        }
    };

    let mut rhs = vec![0.0; len];
    apply_full(&lift, &mut rhs);
    rhs.iter_mut().for_each(|v| *v = -*v);
    for (&i, &f) in boundary.neumann_nodes.iter().zip(boundary.neumann_values) {
        rhs[i] += w[i] * f;
    }
    for (r, &c) in rhs.iter_mut().zip(&constrained) {
        if c {
            *r = 0.0;
        }
    }
    if pure_neumann {
        // remove round-off along the constant null vector
        let mean = rhs.iter().sum::<f64>() / len as f64;
        rhs.iter_mut().for_each(|v| *v -= mean);
    }

    let out = conjugate_gradient(apply_free, precond, &rhs, None, opts)?;
    let mut values: Vec<f64> = out.solution.iter().zip(&lift).map(|(a, b)| a + b).collect();
    if pure_neumann {
        let total: f64 = w.iter().sum();
        let mean = values[..n].iter().zip(w).map(|(v, wi)| v * wi).sum::<f64>() / total;
        values.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(ExtensionField {
        heights: mesh.heights().to_vec(),
        node_count: n,
        values,
        iterations: out.iterations,
        relative_residual: out.relative_residual,
        energy_history: out.energy_history,
    })
}

use faer::Mat;

use crate::error::{check_alpha_open, check_len, Error, Result};
use crate::linalg::{conjugate_gradient, dense_solve, CgOptions};
use crate::spectral::{DiscreteLaplaceBeltrami, SpectralDecomposition};

use super::config::ExteriorConfig;

/// Residual target of the Ω-block solve.
pub const EXTERIOR_TOLERANCE: f64 = 1e-12;

/// Nonlocal exterior Dirichlet problem `(−Δ_g)^α u = 0` in Ω, `u = f` on Ω_e, posed with
/// the dense spectral matrix of `(−Δ_g)^α`.
///
/// Holds the symmetric kernel `K` with `(A^α u)_i = Σ_j K_ij w_j u_j`; the Ω-block system is
/// solved in the symmetric form `W_Ω K_ΩΩ W_Ω u_Ω = −W_Ω K_ΩE W_E f_E`.
#[derive(Clone, Debug)]
pub struct ExteriorProblem<'a> {
    dec: &'a SpectralDecomposition,
    config: &'a ExteriorConfig,
    alpha: f64,
    kernel: Mat<f64>,
    block: Mat<f64>,
}

/// Exterior solution `u^f` together with its Ω-block residual.
#[derive(Clone, Debug)]
pub struct ExteriorSolution {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// `‖(A^α u)_Ω‖ / ‖(A^α f)_Ω‖` in the symmetric block form.
    pub residual: f64,
}

/// Measurement of a DtN map: `(A^α u^f)` on the measurement nodes.
#[derive(Clone, Debug)]
pub struct DtnRecord {
    /// Datum `f` as a node vector (zero on Ω).
    pub datum: Vec<f64>,
    pub measurement: Vec<usize>,
    /// Values on `measurement`, in the unweighted nodal basis.
    pub output: Vec<f64>,
    pub residual: f64,
}

impl DtnRecord {
    /// Output zero-padded to a node vector.
    pub fn output_full(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for (&i, o) in self.measurement.iter().zip(&self.output) {
            v[i] = *o;
        }
        v
    }

    /// `Σ_{i ∈ meas} (Λf)_i h_i`.
    pub fn pairing(&self, h: &[f64]) -> f64 {
        self.measurement.iter().zip(&self.output).map(|(&i, o)| o * h[i]).sum()
    }

    /// `Σ_{i ∈ meas} (Λf)_i h_i √|g|_i h^dim`.
    pub fn pairing_weighted(&self, h: &[f64], weights: &[f64]) -> f64 {
        self.measurement
            .iter()
            .zip(&self.output)
            .map(|(&i, o)| o * h[i] * weights[i])
            .sum()
    }
}

impl<'a> ExteriorProblem<'a> {
    pub fn new(dec: &'a SpectralDecomposition, alpha: f64, config: &'a ExteriorConfig) -> Result<Self> {
        check_alpha_open(alpha)?;
        check_len(config.grid().node_count(), dec.len())?;
        let kernel = dec.frac_kernel_matrix(alpha)?;
        let w = dec.measure().weights();
        let om = config.omega();
        let block = Mat::from_fn(om.len(), om.len(), |a, b| w[om[a]] * kernel[(om[a], om[b])] * w[om[b]]);
        Ok(Self {
            dec,
            config,
            alpha,
            kernel,
            block,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn config(&self) -> &ExteriorConfig {
        self.config
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        self.dec
    }

    /// Symmetric kernel of `A^α`.
    pub fn kernel(&self) -> &Mat<f64> {
        &self.kernel
    }

    /// `(A^α u)_i` for the listed nodes.
    pub fn apply_rows(&self, u: &[f64], rows: &[usize]) -> Vec<f64> {
        let w = self.dec.measure().weights();
        let wu: Vec<f64> = u.iter().zip(w).map(|(a, b)| a * b).collect();
        rows.iter()
            .map(|&i| (0..wu.len()).map(|j| self.kernel[(i, j)] * wu[j]).sum())
            .collect()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let all: Vec<usize> = (0..u.len()).collect();
        self.apply_rows(u, &all)
    }

    fn block_rhs(&self, f: &[f64]) -> Vec<f64> {
        let w = self.dec.measure().weights();
        let ext = self.config.exterior();
        self.config
            .omega()
            .iter()
            .map(|&i| -w[i] * ext.iter().map(|&j| self.kernel[(i, j)] * w[j] * f[j]).sum::<f64>())
            .collect()
    }

    fn check_datum(&self, f: &[f64]) -> Result<()> {
        check_len(self.dec.len(), f.len())?;
        self.config.check_support(f, self.config.exterior(), "exterior datum")
    }

    fn assemble(&self, f: &[f64], inner: &[f64]) -> Vec<f64> {
        let mut u = f.to_vec();
        for (&i, v) in self.config.omega().iter().zip(inner) {
            u[i] = *v;
        }
        u
    }

    /// `u^f` by Jacobi-preconditioned CG on the Ω block.
    pub fn solve(&self, f: &[f64]) -> Result<ExteriorSolution> {
        self.check_datum(f)?;
        let b = self.block_rhs(f);
        let m = &self.block;
        let diag: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)]).collect();
        let out = conjugate_gradient(
            |x, y| {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = (0..x.len()).map(|j| m[(i, j)] * x[j]).sum();
                }
            },
            |r, z| {
                for i in 0..r.len() {
                    z[i] = r[i] / diag[i];
                }
            },
            &b,
            None,
            CgOptions {
                rel_tol: EXTERIOR_TOLERANCE,
                max_iter: 10 * m.nrows() + 100,
            },
        )?;
        Ok(ExteriorSolution {
            values: self.assemble(f, &out.solution),
            iterations: out.iterations,
            residual: out.relative_residual,
        })
    }

    /// Same solution from a dense LU factorization of the Ω block.
    pub fn solve_direct(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_datum(f)?;
        let inner = dense_solve(&self.block, &self.block_rhs(f));
        Ok(self.assemble(f, &inner))
    }

    fn record(&self, f: &[f64], measurement: &[usize]) -> Result<DtnRecord> {
        let sol = self.solve(f)?;
        if !(sol.residual < 1e-9) {
            return Err(Error::NotConverged {
                iterations: sol.iterations,
                residual: sol.residual,
            });
        }
        Ok(DtnRecord {
            datum: f.to_vec(),
            measurement: measurement.to_vec(),
            output: self.apply_rows(&sol.values, measurement),
            residual: sol.residual,
        })
    }

    /// `Λ_g^{W₁,W₂} f = (A^α u^f)|_{W₂}` for `f` supported in W₁.
    pub fn dtn_partial(&self, f: &[f64]) -> Result<DtnRecord> {
        check_len(self.dec.len(), f.len())?;
        self.config.check_support(f, self.config.w1(), "partial DtN datum")?;
        self.record(f, self.config.w2())
    }

    /// `Λ_g^{Ω_e,Ω_e} h = (A^α u^h)|_{Ω_e}`.
    pub fn dtn_full(&self, h: &[f64]) -> Result<DtnRecord> {
        self.record(h, self.config.exterior())
    }
}

/// Fractional Poisson problem `(−Δ_g)^α w = (−Δ_g) F` with exterior source, solved
/// explicitly by `w = (−Δ_g)^{1−α} F`.
#[derive(Clone, Debug)]
pub struct SourceSolutionRecord {
    pub source: Vec<f64>,
    pub solution: Vec<f64>,
    pub exterior: Vec<usize>,
}

impl SourceSolutionRecord {
    pub fn exterior_values(&self) -> Vec<f64> {
        self.exterior.iter().map(|&i| self.solution[i]).collect()
    }
}

pub fn poisson_solve(
    dec: &SpectralDecomposition,
    alpha: f64,
    config: &ExteriorConfig,
    source: &[f64],
) -> Result<SourceSolutionRecord> {
    check_alpha_open(alpha)?;
    check_len(dec.len(), source.len())?;
    config.check_support(source, config.exterior(), "source")?;
    Ok(SourceSolutionRecord {
        source: source.to_vec(),
        solution: dec.frac_apply_spectral(1.0 - alpha, source)?,
        exterior: config.exterior().to_vec(),
    })
}

/// `F, (−Δ_g)F, …, (−Δ_g)^m F`, each required to stay supported in the exterior.
pub fn laplacian_powers(
    op: &DiscreteLaplaceBeltrami,
    config: &ExteriorConfig,
    source: &[f64],
    m: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![source.to_vec()];
    for k in 0..m {
        let next = op.apply(&out[k])?;
        config.check_support(&next, config.exterior(), &format!("(−Δ)^{} F", k + 1))?;
        out.push(next);
    }
    Ok(out)
}

/// Exterior source-to-solution map applied to a batch of sources.
pub fn source_to_solution_map(
    dec: &SpectralDecomposition,
    alpha: f64,
    config: &ExteriorConfig,
    sources: &[Vec<f64>],
) -> Result<Vec<SourceSolutionRecord>> {
    sources.iter().map(|f| poisson_solve(dec, alpha, config, f)).collect()
}

pub fn solve_exterior_dirichlet(
    dec: &SpectralDecomposition,
    alpha: f64,
    config: &ExteriorConfig,
    f: &[f64],
) -> Result<Vec<f64>> {
    Ok(ExteriorProblem::new(dec, alpha, config)?.solve(f)?.values)
}

pub fn dtn_partial(dec: &SpectralDecomposition, alpha: f64, config: &ExteriorConfig, f: &[f64]) -> Result<DtnRecord> {
    ExteriorProblem::new(dec, alpha, config)?.dtn_partial(f)
}

pub fn dtn_full(dec: &SpectralDecomposition, alpha: f64, config: &ExteriorConfig, h: &[f64]) -> Result<DtnRecord> {
    ExteriorProblem::new(dec, alpha, config)?.dtn_full(h)
}

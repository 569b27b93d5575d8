//! Small dense/sparse helpers and a preconditioned conjugate-gradient solver.

use faer::Mat;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y = M x` for a dense column-major matrix.
pub fn mat_vec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.ncols(), x.len());
    let mut y = vec![0.0; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// `y = Mᵀ x`.
pub fn mat_t_vec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.nrows(), x.len());
    (0..m.ncols())
        .map(|j| {
            let col = m.col(j);
            (0..m.nrows()).map(|i| col[i] * x[i]).sum()
        })
        .collect()
}

/// Solves a dense square system with partial-pivoting LU.
pub fn dense_solve(m: &Mat<f64>, rhs: &[f64]) -> Vec<f64> {
    use faer::linalg::solvers::Solve;
    let lu = m.partial_piv_lu();
    let mut b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    lu.solve_in_place(b.as_mut());
    (0..rhs.len()).map(|i| b[(i, 0)]).collect()
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_into(x, &mut y);
        y
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|(cc, _)| *cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.get(r, r)).collect()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// `½ xᵀAx − bᵀx` after each iteration, starting with the initial guess.
    pub energy_history: Vec<f64>,
}

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite operator.
///
/// `apply(x, y)` writes `A x` into `y`; `precond(r, z)` writes `M⁻¹ r` into `z`.
pub fn conjugate_gradient<A, P>(apply: A, precond: P, b: &[f64], x0: Option<&[f64]>, opts: CgOptions) -> Result<CgOutcome>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if b_norm == 0.0 && x0.is_none() {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            energy_history: vec![0.0],
        });
    }
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };

    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let energy = |x: &[f64], r: &[f64]| -0.5 * (dot(b, x) + dot(r, x));
    let mut history = vec![energy(&x, &r)];

    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = norm2(&r) / scale;

    for it in 0..opts.max_iter {
        if rel < opts.rel_tol {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                relative_residual: rel,
                energy_history: history,
            });
        }
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let step = rz / pq;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        history.push(energy(&x, &r));
        rel = norm2(&r) / scale;
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    // Recompute the true residual before giving up.
    apply(&x, &mut ax);
    let true_rel = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / scale;
    if true_rel < opts.rel_tol {
        return Ok(CgOutcome {
            solution: x,
            iterations: opts.max_iter,
            relative_residual: true_rel,
            energy_history: history,
        });
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: true_rel,
    })
}

/// Identity preconditioner.
pub fn no_precond(r: &[f64], z: &mut [f64]) {
    z.copy_from_slice(r);
}

/// Solves a symmetric tridiagonal system in place (Thomas algorithm).
/// `lower[i]` couples rows `i+1` and `i`; `diag` is overwritten.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = if n > 1 { lower[0] / d } else { 0.0 };
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - lower[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = lower[i] / d;
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

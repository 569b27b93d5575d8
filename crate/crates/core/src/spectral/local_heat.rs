use crate::error::{check_len, Error, Result};

use super::{DiscreteLaplaceBeltrami, SpectralDecomposition};

/// Below `t·λ_max` of this size the heat flow is summed from its Taylor series in `t`.
pub const TAYLOR_LIMIT: f64 = 4.0;
pub const TAYLOR_TERMS: usize = 64;

/// Pointwise heat flow `(e^{tΔ_g} u)(x)` accurate in relative terms at small `t`.
///
/// Off the support of `u` the flow is exponentially small for small `t`, far below the
/// round-off floor of the eigen-expansion. Below `TAYLOR_LIMIT/λ_max` the value is summed as
/// `Σ_m (−t)^m (A^m u)(x)/m!` from sparse powers, which vanish exactly for `m` below the
/// graph distance to the support; above it the eigen-expansion is used.
#[derive(Clone, Debug)]
pub struct LocalHeat<'a> {
    dec: &'a SpectralDecomposition,
    powers: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
}

impl<'a> LocalHeat<'a> {
    pub fn new(op: &DiscreteLaplaceBeltrami, dec: &'a SpectralDecomposition, u: &[f64]) -> Result<Self> {
        check_len(dec.len(), u.len())?;
        check_len(dec.len(), op.grid().node_count())?;
        let mut powers = Vec::with_capacity(TAYLOR_TERMS + 1);
        powers.push(u.to_vec());
        for m in 0..TAYLOR_TERMS {
            let next = op.apply(&powers[m])?;
            powers.push(next);
        }
        Ok(Self {
            dec,
            powers,
            coeffs: dec.coefficients(u)?,
        })
    }

    /// Zeroes the coefficients of the kernel of `A`, for data known to be mean-free.
    pub fn drop_zero_mode(mut self) -> Self {
        for (c, &lam) in self.coeffs.iter_mut().zip(self.dec.eigenvalues()) {
            if lam <= 0.0 {
                *c = 0.0;
            }
        }
        self
    }

    pub fn datum(&self) -> &[f64] {
        &self.powers[0]
    }

    /// `(A^m u)` at every node for `m ≤ TAYLOR_TERMS`.
    pub fn power(&self, m: usize) -> &[f64] {
        &self.powers[m]
    }

    pub fn taylor_switch(&self) -> f64 {
        TAYLOR_LIMIT / self.dec.lambda_max()
    }

    fn check_node(&self, x: usize) -> Result<()> {
        if x >= self.dec.len() {
            return Err(Error::InvalidParameter(format!("node index {x} out of range")));
        }
        Ok(())
    }

    /// Heat flow at node `x` for each time in `ts`.
    pub fn samples(&self, x: usize, ts: &[f64]) -> Result<Vec<f64>> {
        self.check_node(x)?;
        let switch = self.taylor_switch();
        let v = self.dec.vectors();
        let c: Vec<f64> = (0..self.dec.len()).map(|k| v[(x, k)] * self.coeffs[k]).collect();
        ts.iter()
            .map(|&t| {
                if !(t > 0.0) {
                    return Err(Error::InvalidParameter(format!("heat time must be positive, got {t}")));
                }
                Ok(if t <= switch {
                    self.taylor(x, t, None)
                } else {
                    self.dec.eigenvalues().iter().zip(&c).map(|(&lam, ck)| (-lam * t).exp() * ck).sum()
                })
            })
            .collect()
    }

    pub fn value(&self, x: usize, t: f64) -> Result<f64> {
        Ok(self.samples(x, &[t])?[0])
    }

    fn taylor(&self, x: usize, t: f64, other: Option<&LocalHeat<'_>>) -> f64 {
        let mut term = 1.0;
        let mut s = 0.0;
        for m in 0..self.powers.len() {
            if m > 0 {
                term *= -t / m as f64;
            }
            let a = match other {
                Some(o) => self.powers[m][x] - o.powers[m][x],
                None => self.powers[m][x],
            };
            s += term * a;
        }
        s
    }

    /// `(e^{tΔ_{g₁}} u₁ − e^{tΔ_{g₂}} u₂)(x)`, with the Taylor region formed from differences
    /// of the sparse powers so that exactly equal local data cancel exactly.
    pub fn difference_samples(&self, other: &LocalHeat<'_>, x: usize, ts: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dec.len(), other.dec.len())?;
        let switch = self.taylor_switch().min(other.taylor_switch());
        let a = self.samples(x, ts)?;
        let b = other.samples(x, ts)?;
        Ok(ts
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(&t, (p, q))| if t <= switch { self.taylor(x, t, Some(other)) } else { p - q })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_metric, MetricProfile, TorusGrid};
    use crate::spectral::{assemble_laplacian, decompose};

    #[test]
    fn matches_spectral_flow_and_stays_local() {
        let grid = TorusGrid::new(1, 8.0, 32).unwrap();
        let p = MetricProfile::ConformalBump {
            beta: 0.3,
            sigma: 0.5,
            center: None,
            r0: 1.2,
        };
        let op = assemble_laplacian(&make_metric(&grid, &p).unwrap());
        let dec = decompose(&op).unwrap();
        let mut u = vec![0.0; 32];
        u[3] = 1.0;
        u[4] = 0.5;
        let heat = LocalHeat::new(&op, &dec, &u).unwrap();
        let sw = heat.taylor_switch();
        for t in [0.3 * sw, 0.99 * sw, 1.01 * sw, 10.0 * sw] {
            let exact = dec.heat_apply(t, &u).unwrap();
            for x in [3, 10, 20] {
                let v = heat.value(x, t).unwrap();
                assert!((v - exact[x]).abs() < 1e-12, "t {t} x {x}: {v} vs {}", exact[x]);
            }
        }
        // twelve steps from the support: the flow is O(t^12) and stays positive
        let tiny = heat.value(16, 1e-4).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-30);
    }

    #[test]
    fn identical_data_cancel_exactly() {
        let grid = TorusGrid::new(1, 8.0, 32).unwrap();
        let op = assemble_laplacian(&make_metric(&grid, &MetricProfile::Identity).unwrap());
        let dec = decompose(&op).unwrap();
        let mut u = vec![0.0; 32];
        u[5] = 1.0;
        let a = LocalHeat::new(&op, &dec, &u).unwrap();
        let b = LocalHeat::new(&op, &dec, &u).unwrap();
        let d = a.difference_samples(&b, 12, &[1e-3, 1e-1, 10.0]).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }
}

use crate::error::{check_alpha_open, check_len, Error, Result};
use crate::quadrature::{LogQuadrature, TailModel};
use crate::spectral::{DiscreteLaplaceBeltrami, LocalHeat, SpectralDecomposition};

/// The log-time integrand at the window edges must be below this fraction of the integral.
const EDGE_TOLERANCE: f64 = 1e-10;

/// Poisson-type representation of the extension of `w = (−Δ_g)^{1−α} F` away from the
/// support of `F`:
///
/// ```text
/// w̃(x, z) = ĉ ∫₀^∞ (e^{tΔ_g} H)(x) e^{−z²/4t} t^{α−1} dt,     H = (−Δ_g) F.
/// ```
///
/// The constant `ĉ` is fixed by [`Representation::calibrate`] against a Neumann solve at one
/// node (spectral calculus gives `ĉ = 1/Γ(α)`).
#[derive(Clone, Debug)]
pub struct Representation<'a> {
    alpha: f64,
    source: Vec<f64>,
    heat: LocalHeat<'a>,
    quad: LogQuadrature,
    c_hat: f64,
}

impl<'a> Representation<'a> {
    pub fn new(
        op: &DiscreteLaplaceBeltrami,
        dec: &'a SpectralDecomposition,
        alpha: f64,
        source: &[f64],
        quad: LogQuadrature,
    ) -> Result<Self> {
        check_alpha_open(alpha)?;
        check_len(dec.len(), source.len())?;
        check_len(dec.len(), op.grid().node_count())?;
        quad.validate()?;
        // H = AF has no zero-mode component; drop the round-off residue
        let heat = LocalHeat::new(op, dec, &op.apply(source)?)?.drop_zero_mode();
        Ok(Self {
            alpha,
            source: source.to_vec(),
            heat,
            quad,
            c_hat: 1.0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn constant(&self) -> f64 {
        self.c_hat
    }

    pub fn set_constant(&mut self, c_hat: f64) {
        self.c_hat = c_hat;
    }

    /// `(−Δ_g) F` at the nodes.
    pub fn lifted_source(&self) -> &[f64] {
        self.heat.datum()
    }

    /// Fixes `ĉ` so that the `z = 0` value at `x_index` equals `target`, the Neumann-problem
    /// solution there. Returns the calibrated constant.
    pub fn calibrate(&mut self, x_index: usize, target: f64) -> Result<f64> {
        let raw = self.moment(x_index, |t| t.powf(self.alpha - 1.0))?;
        if raw == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "calibration node {x_index} sees no signal from the source"
            )));
        }
        self.c_hat = target / raw;
        Ok(self.c_hat)
    }

    fn check_off_support(&self, x_index: usize) -> Result<()> {
        if x_index >= self.source.len() {
            return Err(Error::InvalidParameter(format!("node index {x_index} out of range")));
        }
        if self.source[x_index] != 0.0 {
            return Err(Error::Support(format!(
                "node {x_index} lies in the support of the source; the representation holds only off-support"
            )));
        }
        Ok(())
    }

    /// `(e^{tΔ_g} H)(x)` at every quadrature node.
    pub fn heat_samples(&self, x_index: usize) -> Result<Vec<f64>> {
        let ts: Vec<f64> = self.quad.points().iter().map(|p| p.t).collect();
        self.heat.samples(x_index, &ts)
    }

    /// `∫ (e^{tΔ}H)(x) weight(t) dt` with both window edges required to be negligible.
    fn moment<F: Fn(f64) -> f64>(&self, x_index: usize, weight: F) -> Result<f64> {
        self.check_off_support(x_index)?;
        let g = self.heat_samples(x_index)?;
        let pts = self.quad.points();
        let vals: Vec<f64> = g.iter().zip(&pts).map(|(gi, p)| gi * weight(p.t)).collect();
        let total = self.quad.integrate(&vals, 0.0, TailModel::Negligible, TailModel::Negligible);
        let mass: f64 = vals.iter().zip(&pts).map(|(v, p)| (v * p.weight).abs()).sum();
        let first = (vals[0] * pts[0].t).abs();
        let last = (vals[vals.len() - 1] * pts[pts.len() - 1].t).abs();
        let scale = mass.max(f64::MIN_POSITIVE);
        if first > EDGE_TOLERANCE * scale {
            return Err(Error::QuadratureWindow(format!(
                "t_min = {:e} does not resolve the time weight at node {x_index} (edge/integral = {:e})",
                self.quad.t_min,
                first / scale
            )));
        }
        if last > EDGE_TOLERANCE * scale {
            return Err(Error::QuadratureWindow(format!(
                "t_max = {:e} does not resolve the time weight at node {x_index} (edge/integral = {:e})",
                self.quad.t_max,
                last / scale
            )));
        }
        Ok(total)
    }

    /// `w̃(x, z)` for `z ≥ 0`.
    pub fn value(&self, x_index: usize, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::InvalidParameter(format!("extension height must be >= 0, got {z}")));
        }
        let a = self.alpha;
        let zz = 0.25 * z * z;
        Ok(self.c_hat * self.moment(x_index, |t| (-zz / t).exp() * t.powf(a - 1.0))?)
    }

    /// Coefficients of `w̃(x, z) = Σ_j C_j(x) z^{2j}`:
    /// `C_j(x) = ĉ (−1)^j 4^{−j}/j! ∫ (e^{tΔ}H)(x) t^{α−1−j} dt`.
    pub fn series_coefficients(&self, x_indices: &[usize], order: usize) -> Result<SeriesCoefficients> {
        if order > MAX_SERIES_ORDER {
            return Err(Error::InvalidParameter(format!(
                "series order {order} exceeds {MAX_SERIES_ORDER}"
            )));
        }
        let mut values = Vec::with_capacity(x_indices.len());
        for &x in x_indices {
            let mut row = Vec::with_capacity(order + 1);
            let mut pref = self.c_hat;
            for j in 0..=order {
                if j > 0 {
                    pref *= -0.25 / j as f64;
                }
                let e = self.alpha - 1.0 - j as f64;
                row.push(pref * self.moment(x, |t| t.powf(e))?);
            }
            values.push(row);
        }
        Ok(SeriesCoefficients {
            alpha: self.alpha,
            x_indices: x_indices.to_vec(),
            values,
        })
    }
}

pub const MAX_SERIES_ORDER: usize = 12;

#[derive(Clone, Debug)]
pub struct SeriesCoefficients {
    pub alpha: f64,
    pub x_indices: Vec<usize>,
    /// `values[r][j] = C_j(x_indices[r])`.
    pub values: Vec<Vec<f64>>,
}

impl SeriesCoefficients {
    /// `Σ_{j ≤ order} C_j z^{2j}` for row `r`.
    pub fn partial_sum(&self, r: usize, z: f64, order: usize) -> f64 {
        let z2 = z * z;
        self.values[r].iter().take(order + 1).rev().fold(0.0, |acc, c| acc * z2 + c)
    }

    /// Least-squares slope of `log|C_j|` against `j` for row `r` (coefficients that vanish
    /// exactly are skipped).
    pub fn log_slope(&self, r: usize) -> f64 {
        let pts: Vec<(f64, f64)> = self.values[r]
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (j as f64, c.abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }
}

//! Log-uniform trapezoid rule for singular time integrals `∫₀^∞ f(t) t^p dt`.
//!
//! The integrands met here (heat-semigroup differences, heat kernels, moment weights) are
//! smooth in `s = log t`, so the trapezoid rule in `s` converges geometrically in the interior
//! of the window. What remains are the two truncated tails; [`TailModel`] describes the
//! asymptotic shape of `f` at each end so they can be added in closed form, together with
//! the leading Euler–Maclaurin endpoint term.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogQuadrature {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes: usize,
}

impl Default for LogQuadrature {
    fn default() -> Self {
        Self {
            t_min: 1e-8,
            t_max: 1e4,
            nodes: 400,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadNode {
    pub t: f64,
    /// Weight for `∫ f(t) dt`.
    pub weight: f64,
}

/// Behaviour of the integrand outside the window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailModel {
    /// Contribution outside the window is neglected.
    Negligible,
    /// `f(t) ≈ f(t_edge)·(t/t_edge)^order` beyond the edge.
    Power(f64),
}

impl LogQuadrature {
    pub fn new(t_min: f64, t_max: f64, nodes: usize) -> Result<Self> {
        let q = Self { t_min, t_max, nodes };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0) || !(self.t_max > self.t_min) || !self.t_max.is_finite() {
            return Err(Error::QuadratureWindow(format!(
                "need 0 < t_min < t_max < inf, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.nodes < 3 {
            return Err(Error::QuadratureWindow(format!("need at least 3 nodes, got {}", self.nodes)));
        }
        Ok(())
    }

    /// Spacing in `log t`.
    pub fn log_step(&self) -> f64 {
        (self.t_max / self.t_min).ln() / (self.nodes - 1) as f64
    }

    pub fn points(&self) -> Vec<QuadNode> {
        let ds = self.log_step();
        let s0 = self.t_min.ln();
        (0..self.nodes)
            .map(|q| {
                let t = if q + 1 == self.nodes { self.t_max } else { (s0 + q as f64 * ds).exp() };
                let end = if q == 0 || q + 1 == self.nodes { 0.5 } else { 1.0 };
                QuadNode {
                    t,
                    weight: end * ds * t,
                }
            })
            .collect()
    }

    /// Checks that `[1/λ_max, 1/λ_min]` lies inside the window up to a multiplicative slack.
    pub fn check_covers(&self, lambda_min: f64, lambda_max: f64, slack: f64) -> Result<()> {
        if lambda_max > 0.0 && self.t_min > slack / lambda_max {
            return Err(Error::QuadratureWindow(format!(
                "t_min = {:e} does not resolve the largest eigenvalue {:e} (need t_min <= {:e})",
                self.t_min,
                lambda_max,
                slack / lambda_max
            )));
        }
        if lambda_min > 0.0 && self.t_max < 1.0 / (slack * lambda_min) {
            return Err(Error::QuadratureWindow(format!(
                "t_max = {:e} does not reach the smallest nonzero eigenvalue {:e} (need t_max >= {:e})",
                self.t_max,
                lambda_min,
                1.0 / (slack * lambda_min)
            )));
        }
        Ok(())
    }

    /// `∫₀^∞ f(t) t^power dt` for scalar-valued samples `values[q] = f(t_q)`.
    pub fn integrate(&self, values: &[f64], power: f64, small: TailModel, large: TailModel) -> f64 {
        let mut out = [0.0];
        debug_assert_eq!(values.len(), self.nodes);
        self.integrate_rows(|q, row| row[0] = values[q], &mut out, power, small, large);
        out[0]
    }

    /// Vector-valued version: `sample(q, buf)` writes `f(t_q)` into `buf`, the result is
    /// accumulated into `out`.
    pub fn integrate_rows<F>(&self, mut sample: F, out: &mut [f64], power: f64, small: TailModel, large: TailModel)
    where
        F: FnMut(usize, &mut [f64]),
    {
        let pts = self.points();
        let ds = self.log_step();
        let mut buf = vec![0.0; out.len()];
        out.iter_mut().for_each(|o| *o = 0.0);
        let last = pts.len() - 1;
        for (q, node) in pts.iter().enumerate() {
            sample(q, &mut buf);
            let w = node.weight * node.t.powf(power);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
            // g(s) = f(t) t^{power+1} is the integrand in log-time.
            let g_scale = node.t.powf(power + 1.0);
            if q == 0 {
                if let TailModel::Power(order) = small {
                    let e = order + power + 1.0;
                    // closed-form tail ∫₀^{t_min} and Euler–Maclaurin slope term g'(s) = e·g
                    let c = g_scale * (1.0 / e + ds * ds / 12.0 * e);
                    for (o, b) in out.iter_mut().zip(&buf) {
                        *o += c * b;
                    }
                }
            }
            if q == last {
                if let TailModel::Power(order) = large {
                    let e = order + power + 1.0;
                    let c = g_scale * (-1.0 / e - ds * ds / 12.0 * e);
                    for (o, b) in out.iter_mut().zip(&buf) {
                        *o += c * b;
                    }
                }
            }
        }
    }
}

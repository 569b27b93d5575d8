use crate::error::{Error, Result};
use crate::quadrature::{LogQuadrature, TailModel};

/// Number of moments used by default.
pub const DEFAULT_MOMENTS: usize = 8;
/// Largest admissible magnitude of the left-edge integrand.
const OVERFLOW_GUARD: f64 = 1e300;

/// Moments `μ_m = ∫ U(t) t^{−1−α−m} dt`, `m = 0..count`, of a time trace `U`.
#[derive(Clone, Debug)]
pub struct MomentTable {
    pub alpha: f64,
    pub moments: Vec<f64>,
    /// Moments of a reference trace (typically the single-metric flow) used to normalize.
    pub reference: Option<Vec<f64>>,
    /// `max_t |U(t)|` over the window.
    pub u_max: f64,
    pub reference_max: Option<f64>,
    pub quad: LogQuadrature,
}

/// Verdict of [`vanishing_test`].
#[derive(Clone, Debug)]
pub struct VanishingReport {
    pub pass: bool,
    pub threshold: f64,
    /// `|μ_m|`, divided by the reference moment when one is present.
    pub normalized: Vec<f64>,
    /// `max|U|`, divided by the reference maximum when one is present.
    pub direct: f64,
}

/// Power law `t^order` through two samples, or `None` when they do not share a sign.
fn fitted_order(v0: f64, v1: f64, t0: f64, t1: f64) -> Option<f64> {
    (v0 != 0.0 && v1 != 0.0 && v1 / v0 > 0.0).then(|| (v1 / v0).ln() / (t1 / t0).ln())
}

/// Integrates `∫ values(t) t^power dt` with power tails fitted from the two samples at each
/// end of the window.
fn moment_from_samples(quad: &LogQuadrature, ts: &[f64], values: &[f64], power: f64) -> Result<f64> {
    let v0 = values[0];
    if !(v0 * ts[0].powf(power)).is_finite() || (v0 * ts[0].powf(power)).abs() > OVERFLOW_GUARD {
        return Err(Error::QuadratureWindow(format!(
            "integrand at t_min = {:e} is {:e}; the trace does not vanish fast enough",
            ts[0],
            v0 * ts[0].powf(power)
        )));
    }
    let small = match fitted_order(v0, values[1], ts[0], ts[1]) {
        Some(order) if order + power + 1.0 <= 0.0 => {
            return Err(Error::QuadratureWindow(format!(
                "trace behaves like t^{order:.2} at t_min; the weight t^{power:.2} makes the moment diverge"
            )));
        }
        Some(order) => TailModel::Power(order),
        None => TailModel::Negligible,
    };
    let n = values.len();
    // a trace that settles to a constant (zero-mode offset) leaves a t_max^{power+1} tail
    let large = match fitted_order(values[n - 2], values[n - 1], ts[n - 2], ts[n - 1]) {
        Some(order) if order + power + 1.0 >= 0.0 => {
            return Err(Error::QuadratureWindow(format!(
                "trace behaves like t^{order:.2} at t_max; the weight t^{power:.2} makes the moment diverge"
            )));
        }
        Some(order) => TailModel::Power(order),
        None => TailModel::Negligible,
    };
    Ok(quad.integrate(values, power, small, large))
}

fn moments_of(quad: &LogQuadrature, ts: &[f64], values: &[f64], alpha: f64, count: usize) -> Result<Vec<f64>> {
    (0..count)
        .map(|m| moment_from_samples(quad, ts, values, -1.0 - alpha - m as f64))
        .collect()
}

/// Moments of `U` sampled at the quadrature nodes.
pub fn moment_vector<F: Fn(f64) -> f64>(u: F, alpha: f64, count: usize, quad: LogQuadrature) -> Result<MomentTable> {
    quad.validate()?;
    let ts: Vec<f64> = quad.points().iter().map(|p| p.t).collect();
    let values: Vec<f64> = ts.iter().map(|&t| u(t)).collect();
    moment_table_from_samples(&values, None, alpha, count, quad)
}

/// Moment table from samples on the quadrature nodes, optionally normalized by a reference
/// trace whose absolute value is integrated with the same weights.
pub fn moment_table_from_samples(
    values: &[f64],
    reference: Option<&[f64]>,
    alpha: f64,
    count: usize,
    quad: LogQuadrature,
) -> Result<MomentTable> {
    quad.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one moment".into()));
    }
    let ts: Vec<f64> = quad.points().iter().map(|p| p.t).collect();
    if values.len() != ts.len() {
        return Err(Error::DimensionMismatch {
            expected: ts.len(),
            found: values.len(),
        });
    }
    let moments = moments_of(&quad, &ts, values, alpha, count)?;
    let (reference, reference_max) = match reference {
        Some(r) => {
            let abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
            (
                Some(moments_of(&quad, &ts, &abs, alpha, count)?),
                Some(abs.iter().fold(0.0f64, |a, b| a.max(*b))),
            )
        }
        None => (None, None),
    };
    Ok(MomentTable {
        alpha,
        moments,
        reference,
        u_max: values.iter().fold(0.0f64, |a, b| a.max(b.abs())),
        reference_max,
        quad,
    })
}

/// Passes iff every (normalized) moment and the directly sampled trace are at most `threshold`.
pub fn vanishing_test(table: &MomentTable, threshold: f64) -> VanishingReport {
    let normalized: Vec<f64> = match &table.reference {
        Some(r) => table
            .moments
            .iter()
            .zip(r)
            .map(|(m, r)| if *m == 0.0 { 0.0 } else { m.abs() / r })
            .collect(),
        None => table.moments.iter().map(|m| m.abs()).collect(),
    };
    let direct = match table.reference_max {
        Some(r) if table.u_max != 0.0 => table.u_max / r,
        _ => table.u_max,
    };
    let pass = normalized.iter().all(|v| *v <= threshold) && direct <= threshold;
    VanishingReport {
        pass,
        threshold,
        normalized,
        direct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    #[test]
    fn gamma_oracles() {
        let q = LogQuadrature::default();
        let t = moment_vector(|t| t * (-t).exp(), 0.5, 1, q).unwrap();
        assert!((t.moments[0] - std::f64::consts::PI.sqrt()).abs() < 1e-8, "{}", t.moments[0]);
        let t = moment_vector(|t| t * t * (-t).exp(), 0.5, 2, q).unwrap();
        assert!((t.moments[1] - gamma(0.5)).abs() < 1e-8);
        assert!((t.moments[0] - gamma(1.5)).abs() < 1e-8);
    }

    #[test]
    fn zero_trace_vanishes_at_any_threshold() {
        let t = moment_vector(|_| 0.0, 0.3, 8, LogQuadrature::default()).unwrap();
        assert!(t.moments.iter().all(|m| *m == 0.0));
        assert!(vanishing_test(&t, 0.0).pass);
    }

    #[test]
    fn divergent_moment_is_a_window_error() {
        let r = moment_vector(|t| t * (-t).exp(), 0.5, 3, LogQuadrature::default());
        assert!(matches!(r, Err(Error::QuadratureWindow(_))));
    }

    #[test]
    fn normalized_verdicts() {
        let q = LogQuadrature::default();
        let ts: Vec<f64> = q.points().iter().map(|p| p.t).collect();
        let base: Vec<f64> = ts.iter().map(|t| (-1.0 / t).exp()).collect();
        let small: Vec<f64> = base.iter().map(|v| 1e-8 * v).collect();
        let big: Vec<f64> = base.iter().map(|v| 0.1 * v).collect();
        let a = moment_table_from_samples(&small, Some(&base), 0.5, 8, q).unwrap();
        let b = moment_table_from_samples(&big, Some(&base), 0.5, 8, q).unwrap();
        assert!(vanishing_test(&a, 1e-6).pass);
        let rb = vanishing_test(&b, 1e-6);
        assert!(!rb.pass);
        assert!(rb.normalized[0] > 10.0 * 1e-6);
    }
}

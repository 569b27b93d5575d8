use crate::error::{Error, Result};
use crate::geometry::{smooth_cutoff, smooth_cutoff_derivative, MetricField, MetricSource, SymTensor, TorusGrid};

const MONOTONE_SAMPLES: usize = 4000;

/// Closed-form diffeomorphisms of the torus that are the identity outside a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GaugeMap {
    Identity,
    /// `Φ(x) = c + ρ(r)(x − c)/r` with `r = |x − c|` and `ρ(r) = r(1 + ε b(r/R))`, where `b` is
    /// the standard smooth cutoff; `Φ = id` for `r ≥ R`.
    RadialSquash { center: [f64; 2], radius: f64, strength: f64 },
}

impl GaugeMap {
    /// Rejects maps whose radial profile is not strictly increasing.
    pub fn validate(&self) -> Result<()> {
        if let GaugeMap::RadialSquash { radius, strength, .. } = *self {
            if !(radius > 0.0) || !strength.is_finite() {
                return Err(Error::Config(format!("radial squash needs radius > 0, got {radius}")));
            }
            for k in 0..=MONOTONE_SAMPLES {
                let s = k as f64 / MONOTONE_SAMPLES as f64;
                let d = 1.0 + strength * (smooth_cutoff(s) + s * smooth_cutoff_derivative(s));
                if !(d > 0.0) {
                    return Err(Error::Config(format!(
                        "radial profile not monotone at r/R = {s:.4} (rho' = {d:.4}); not a diffeomorphism"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Radius outside of which the map is the identity (0 for the identity map).
    pub fn radius(&self) -> f64 {
        match *self {
            GaugeMap::Identity => 0.0,
            GaugeMap::RadialSquash { radius, .. } => radius,
        }
    }

    /// `(Φ(x), Φ′(x))`, with `Φ′` row-major. Outside the support both are returned exactly.
    pub fn evaluate(&self, grid: &TorusGrid, x: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        const ID: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];
        let GaugeMap::RadialSquash { center, radius, strength } = *self else {
            return (x, ID);
        };
        let d = grid.displacement(center, x);
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if r >= radius {
            return (x, ID);
        }
        let s = r / radius;
        let b = smooth_cutoff(s);
        let ratio = 1.0 + strength * b;
        let slope = 1.0 + strength * (b + s * smooth_cutoff_derivative(s));
        if grid.dim() == 1 {
            let y = [x[0] + d[0] * (ratio - 1.0), x[1]];
            return (y, [[slope, 0.0], [0.0, 1.0]]);
        }
        let y = [x[0] + d[0] * (ratio - 1.0), x[1] + d[1] * (ratio - 1.0)];
        if r == 0.0 {
            return (y, [[ratio, 0.0], [0.0, ratio]]);
        }
        let e = [d[0] / r, d[1] / r];
        let extra = slope - ratio;
        let jac = [
            [ratio + extra * e[0] * e[0], extra * e[0] * e[1]],
            [extra * e[1] * e[0], ratio + extra * e[1] * e[1]],
        ];
        (y, jac)
    }

    pub fn jacobian_det(&self, grid: &TorusGrid, x: [f64; 2]) -> f64 {
        let (_, j) = self.evaluate(grid, x);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }
}

/// `Φ*g = (Φ′)ᵀ (g∘Φ) Φ′` as a metric source.
#[derive(Clone, Copy, Debug)]
pub struct PulledBack<'a, S: MetricSource + ?Sized> {
    pub base: &'a S,
    pub map: GaugeMap,
}

impl<S: MetricSource + ?Sized> MetricSource for PulledBack<'_, S> {
    fn tensor_at(&self, grid: &TorusGrid, x: [f64; 2]) -> SymTensor {
        if self.map == GaugeMap::Identity {
            return self.base.tensor_at(grid, x);
        }
        let GaugeMap::RadialSquash { center, radius, .. } = self.map else {
            unreachable!()
        };
        if grid.distance(center, x) >= radius {
            return self.base.tensor_at(grid, x);
        }
        let (y, jac) = self.map.evaluate(grid, x);
        self.base.tensor_at(grid, y).congruence(jac)
    }

    fn support_radius(&self) -> f64 {
        match self.map {
            GaugeMap::Identity => self.base.support_radius(),
            GaugeMap::RadialSquash { radius, .. } => radius.max(self.base.support_radius()),
        }
    }

    fn support_center(&self, grid: &TorusGrid) -> [f64; 2] {
        match self.map {
            GaugeMap::Identity => self.base.support_center(grid),
            GaugeMap::RadialSquash { center, .. } => center,
        }
    }
}

/// Samples `Φ*g` for a closed-form base metric.
pub fn gauge_pullback<S: MetricSource + ?Sized>(grid: &TorusGrid, base: &S, map: GaugeMap) -> Result<MetricField> {
    map.validate()?;
    MetricField::sample(grid, &PulledBack { base, map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_metric, MetricProfile};

    fn squash() -> GaugeMap {
        GaugeMap::RadialSquash {
            center: [4.0, 4.0],
            radius: 1.5,
            strength: 0.3,
        }
    }

    fn base() -> MetricProfile {
        MetricProfile::AnisotropicBump {
            beta: 0.4,
            sigma: 0.6,
            center: Some([4.3, 3.8]),
            r0: 1.4,
        }
    }

    #[test]
    fn identity_map_reproduces_base() {
        let grid = TorusGrid::new(2, 8.0, 16).unwrap();
        let a = gauge_pullback(&grid, &base(), GaugeMap::Identity).unwrap();
        let b = make_metric(&grid, &base()).unwrap();
        assert_eq!(a.tensor(), b.tensor());
        assert_eq!(a.edge_samples(1), b.edge_samples(1));
    }

    #[test]
    fn exterior_is_fixed_exactly() {
        let grid = TorusGrid::new(2, 8.0, 24).unwrap();
        let pulled = gauge_pullback(&grid, &base(), squash()).unwrap();
        let plain = make_metric(&grid, &base()).unwrap();
        let mut changed = 0;
        for i in 0..grid.node_count() {
            let x = grid.coordinates(i);
            if grid.distance([4.0, 4.0], x) >= 1.5 {
                assert_eq!(pulled.tensor()[i], plain.tensor()[i]);
            } else if pulled.tensor()[i].max_abs_diff(&plain.tensor()[i]) > 1e-3 {
                changed += 1;
            }
        }
        assert!(changed > 10);
    }

    #[test]
    fn volume_transforms_with_jacobian_determinant() {
        let grid = TorusGrid::new(2, 8.0, 24).unwrap();
        let map = squash();
        let pulled = gauge_pullback(&grid, &base(), map).unwrap();
        for i in 0..grid.node_count() {
            let x = grid.coordinates(i);
            let (y, _) = map.evaluate(&grid, x);
            let det = map.jacobian_det(&grid, x);
            assert!(det > 0.0);
            let expect = det.abs() * base().tensor_at(&grid, y).det().sqrt();
            assert!((pulled.det_sqrt()[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let grid = TorusGrid::new(2, 8.0, 16).unwrap();
        let map = squash();
        let x = [4.6, 3.5];
        let (_, jac) = map.evaluate(&grid, x);
        let h = 1e-6;
        for c in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let (yp, _) = map.evaluate(&grid, xp);
            let (ym, _) = map.evaluate(&grid, xm);
            for r in 0..2 {
                let fd = (yp[r] - ym[r]) / (2.0 * h);
                assert!((fd - jac[r][c]).abs() < 1e-7, "J[{r}][{c}]: {fd} vs {}", jac[r][c]);
            }
        }
    }

    #[test]
    fn one_dimensional_squash() {
        let grid = TorusGrid::new(1, 8.0, 32).unwrap();
        let map = GaugeMap::RadialSquash {
            center: [4.0, 0.0],
            radius: 1.5,
            strength: -0.3,
        };
        let (y, j) = map.evaluate(&grid, [4.5, 0.0]);
        let (yp, _) = map.evaluate(&grid, [4.5 + 1e-6, 0.0]);
        assert!(((yp[0] - y[0]) / 1e-6 - j[0][0]).abs() < 1e-5);
        assert!(gauge_pullback(&grid, &MetricProfile::Identity, map).is_ok());
    }

    #[test]
    fn non_monotone_profile_rejected() {
        let bad = GaugeMap::RadialSquash {
            center: [4.0, 4.0],
            radius: 1.5,
            strength: -3.0,
        };
        let grid = TorusGrid::new(2, 8.0, 16).unwrap();
        let err = gauge_pullback(&grid, &MetricProfile::Identity, bad).unwrap_err();
        assert!(err.to_string().contains("monotone"));
    }
}

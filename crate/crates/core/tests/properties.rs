use std::sync::OnceLock;

use proptest::prelude::*;

use fraclb::analysis::sobolev_norm_fourier;
use fraclb::exterior::{ExteriorConfig, ExteriorProblem, Shape};
use fraclb::geometry::{make_metric, weighted_inner, MetricProfile, TorusGrid};
use fraclb::quadrature::LogQuadrature;
use fraclb::recovery::moment_vector;
use fraclb::special::gamma;
use fraclb::spectral::{assemble_laplacian, decompose, SpectralDecomposition};

const N: usize = 24;

struct Fixture {
    grid: TorusGrid,
    dec: SpectralDecomposition,
    cfg: ExteriorConfig,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let grid = TorusGrid::new(1, 8.0, N).unwrap();
        let profile = MetricProfile::ConformalBump { beta: 0.5, sigma: 0.5, center: None, r0: 1.2 };
        let dec = decompose(&assemble_laplacian(&make_metric(&grid, &profile).unwrap())).unwrap();
        let cfg = ExteriorConfig::from_shapes(
            &grid,
            Shape::Ball { center: [4.0, 0.0], radius: 1.3 },
            Shape::Ball { center: [0.75, 0.0], radius: 0.6 },
            Shape::Ball { center: [6.75, 0.0], radius: 0.6 },
            false,
        )
        .unwrap();
        Fixture { grid, dec, cfg }
    })
}

fn field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, N)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

fn on(nodes: &[usize], values: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; N];
    for (&i, &x) in nodes.iter().zip(values) {
        v[i] = x;
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heat_flow_is_a_semigroup(u in field(), s in 1e-3..2.0f64, t in 1e-3..2.0f64) {
        let dec = &fixture().dec;
        let two_steps = dec.heat_apply(s, &dec.heat_apply(t, &u).unwrap()).unwrap();
        let one_step = dec.heat_apply(s + t, &u).unwrap();
        prop_assert!(close(&two_steps, &one_step, 1e-10));
    }

    #[test]
    fn fractional_power_is_self_adjoint(u in field(), v in field(), alpha in 0.05..0.95f64) {
        let dec = &fixture().dec;
        let m = dec.measure();
        let left = weighted_inner(&dec.frac_apply_spectral(alpha, &u).unwrap(), &v, m).unwrap();
        let right = weighted_inner(&u, &dec.frac_apply_spectral(alpha, &v).unwrap(), m).unwrap();
        prop_assert!((left - right).abs() <= 1e-10 * (1.0 + left.abs()));
    }

    #[test]
    fn fractional_powers_compose(u in field(), a in 0.05..0.5f64, b in 0.05..0.5f64) {
        let dec = &fixture().dec;
        let twice = dec.frac_apply_spectral(a, &dec.frac_apply_spectral(b, &u).unwrap()).unwrap();
        let once = dec.frac_apply_spectral(a + b, &u).unwrap();
        prop_assert!(close(&twice, &once, 1e-9));
    }

    #[test]
    fn partial_dtn_is_linear(
        f in prop::collection::vec(-1.0..1.0f64, 8),
        g in prop::collection::vec(-1.0..1.0f64, 8),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
        alpha in 0.1..0.9f64,
    ) {
        let fx = fixture();
        let w1 = fx.cfg.w1();
        let (f, g) = (on(w1, &f), on(w1, &g));
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let p = ExteriorProblem::new(&fx.dec, alpha, &fx.cfg).unwrap();
        let lf = p.dtn_partial(&f).unwrap().output;
        let lg = p.dtn_partial(&g).unwrap().output;
        let lmix = p.dtn_partial(&mix).unwrap().output;
        let expected: Vec<f64> = lf.iter().zip(&lg).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(close(&lmix, &expected, 1e-8));
    }

    #[test]
    fn moments_match_gamma_values_and_are_linear(
        c1 in -2.0..2.0f64,
        c2 in -2.0..2.0f64,
        alpha in 0.1..0.9f64,
    ) {
        prop_assume!(c1.abs() > 1e-3 && c2.abs() > 1e-3);
        let quad = LogQuadrature::default();
        let f = |t: f64| t.powi(4) * (-t).exp();
        let g = |t: f64| t.powi(5) * (-2.0 * t).exp();
        let mf = moment_vector(f, alpha, 4, quad).unwrap().moments;
        let mg = moment_vector(g, alpha, 4, quad).unwrap().moments;
        let mix = moment_vector(|t| c1 * f(t) + c2 * g(t), alpha, 4, quad).unwrap().moments;
        // the fitted t_min tail is exact up to O(t_min) relative to the part below t_min,
        // and that fit is the only nonlinear step
        for m in 0..4 {
            let k = m as f64;
            let exact_f = gamma(4.0 - alpha - k);
            let exact_g = gamma(5.0 - alpha - k) / 2f64.powf(5.0 - alpha - k);
            prop_assert!((mf[m] - exact_f).abs() <= 1e-7 * exact_f);
            prop_assert!((mg[m] - exact_g).abs() <= 1e-7 * exact_g);
            let lin = c1 * mf[m] + c2 * mg[m];
            prop_assert!((mix[m] - lin).abs() <= 1e-7 * (c1.abs() * mf[m] + c2.abs() * mg[m]));
        }
    }

    #[test]
    fn sobolev_norm_grows_with_order(u in field(), s in -1.0..2.0f64, ds in 0.0..1.0f64) {
        let grid = &fixture().grid;
        let lo = sobolev_norm_fourier(grid, &u, s).unwrap().value;
        let hi = sobolev_norm_fourier(grid, &u, s + ds).unwrap().value;
        prop_assert!(hi >= lo * (1.0 - 1e-12));
    }
}

#[test]
fn heat_flow_preserves_volume_integral() {
    let dec = &fixture().dec;
    let u: Vec<f64> = (0..N).map(|i| (i as f64 * 0.7).sin()).collect();
    let ones = vec![1.0; N];
    let before = weighted_inner(&u, &ones, dec.measure()).unwrap();
    for t in [0.01, 0.3, 5.0] {
        let after = weighted_inner(&dec.heat_apply(t, &u).unwrap(), &ones, dec.measure()).unwrap();
        assert!((after - before).abs() < 1e-10 * (1.0 + before.abs()), "t {t}");
    }
}

//! The six runnable experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fraclb::analysis::{constant_estimates, regularity_probe};
use fraclb::extension::{
    default_cg_options, extension_profile, fd_extension_solve, trace_ratios, ExtensionMesh, MixedBoundary,
    Representation, TraceExtrapolation,
};
use fraclb::exterior::{poisson_solve, set_distance, ExteriorConfig, ExteriorProblem, Shape};
use fraclb::geometry::{make_metric, smooth_cutoff, MetricField, MetricProfile, TorusGrid};
use fraclb::recovery::{
    dtn_refinement_study, gauge_experiment, gauge_pullback, recover_heat_kernel_samples, vanishing_test, MetricPair,
    RecoveryReport, RecoverySettings, StudyGeometry,
};
use fraclb::special::neumann_trace_constant;
use fraclb::spectral::{
    assemble_laplacian, decompose, euclidean_kernel, frac_apply_balakrishnan, jump_kernel, DiscreteLaplaceBeltrami,
    SpectralDecomposition,
};
use fraclb::table::Table;

use crate::config::RunConfig;
use crate::{in_module, Check, Outcome, RunError};

type Res<T> = Result<T, RunError>;

pub fn dispatch(cfg: &RunConfig) -> Res<Outcome> {
    match cfg.experiment() {
        "operator-check" => operator_check(cfg),
        "extension-check" => extension_check(cfg),
        "dtn" => dtn(cfg),
        "gauge" => gauge(cfg),
        "recovery" => recovery(cfg),
        "regularity" => regularity(cfg),
        other => Err(RunError::Config(crate::ConfigError(format!("unknown experiment `{other}`")))),
    }
}

fn push(t: &mut Table, row: Vec<fraclb::table::Cell<'_>>) {
    t.push(row).expect("row width matches header");
}

fn setup(grid: &TorusGrid, profile: &MetricProfile) -> Res<(MetricField, DiscreteLaplaceBeltrami, SpectralDecomposition)> {
    let metric = make_metric(grid, profile).map_err(in_module("geometry"))?;
    let op = assemble_laplacian(&metric);
    let dec = decompose(&op).map_err(in_module("spectral"))?;
    Ok((metric, op, dec))
}

fn exterior_config(cfg: &RunConfig, grid: &TorusGrid) -> Res<ExteriorConfig> {
    ExteriorConfig::from_shapes(grid, cfg.omega(grid)?, cfg.w(1, grid)?, cfg.w(2, grid)?, cfg.bool("allow_overlap")?)
        .map_err(in_module("exterior"))
}

fn weighted_rel(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).zip(w).map(|((x, y), w)| (x - y).powi(2) * w).sum();
    let den: f64 = b.iter().zip(w).map(|(y, w)| y * y * w).sum();
    if num == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, support: Option<&[usize]>) -> Vec<f64> {
    match support {
        None => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        Some(s) => {
            let mut v = vec![0.0; n];
            for &i in s {
                v[i] = rng.gen_range(-1.0..1.0);
            }
            v
        }
    }
}

/// Smooth periodic datum `cos(2πx/L)·cos(2πy/L) + 0.3`.
fn smooth_datum(grid: &TorusGrid, x: [f64; 2]) -> f64 {
    let k = std::f64::consts::TAU / grid.side_length();
    let y = if grid.dim() == 2 { (k * x[1]).cos() } else { 1.0 };
    (k * x[0]).cos() * y + 0.3
}

/// Smooth bump `cutoff(|x − c|/r)` on the nodes of a ball.
fn ball_bump(grid: &TorusGrid, shape: &Shape) -> Vec<f64> {
    let Shape::Ball { center, radius } = *shape else {
        unreachable!("W sets are balls")
    };
    (0..grid.node_count())
        .map(|i| {
            let r = grid.distance(grid.coordinates(i), center) / radius;
            if r < 1.0 {
                smooth_cutoff(r)
            } else {
                0.0
            }
        })
        .collect()
}

fn label(a: f64) -> String {
    format!("{a}")
}

/// Eigenvalues of the identity-metric operator: sums of `(4/h²) sin²(πk/N)` over axes.
fn circulant_eigenvalues(grid: &TorusGrid) -> Vec<f64> {
    let n = grid.points_per_side();
    let h = grid.spacing();
    let one: Vec<f64> = (0..n)
        .map(|k| 4.0 / (h * h) * (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2))
        .collect();
    let mut all: Vec<f64> = if grid.dim() == 1 {
        one
    } else {
        one.iter().flat_map(|a| one.iter().map(move |b| a + b)).collect()
    };
    all.sort_by(|a, b| a.total_cmp(b));
    all
}

fn operator_check(cfg: &RunConfig) -> Res<Outcome> {
    let grid = cfg.grid()?;
    let profile = cfg.metric(&grid)?;
    let quad = cfg.quadrature()?;
    let alpha = cfg.f64("alpha")?;
    let (metric, _, dec) = setup(&grid, &profile)?;
    let n = grid.node_count();
    let w = dec.measure().weights();
    let mut out = Outcome::default();

    let mut eig = Table::new(&["k", "lambda"]);
    for (k, &lam) in dec.eigenvalues().iter().enumerate() {
        push(&mut eig, vec![k.into(), lam.into()]);
    }
    out.tables.push(("eigenvalues.csv".into(), eig));
    if profile == MetricProfile::Identity {
        let exact = circulant_eigenvalues(&grid);
        let err = dec
            .eigenvalues()
            .iter()
            .zip(&exact)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / dec.lambda_max();
        out.checks.push(Check::below("eigenvalues_closed_form", err, cfg.f64("tol_eigen")?));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed()?);
    let u = random_vector(&mut rng, n, None);
    let tol = cfg.f64("tol_operator")?;
    for a in cfg.f64_list("alpha_list")? {
        let spec = dec.frac_apply_spectral(a, &u).map_err(in_module("spectral"))?;
        let bal = frac_apply_balakrishnan(&dec, a, &u, &quad).map_err(in_module("spectral"))?;
        out.checks.push(Check::below(format!("balakrishnan_alpha_{}", label(a)), weighted_rel(&bal, &spec, w), tol));
    }

    let mut qt = Table::new(&["t", "integrand_norm"]);
    for p in quad.points().iter().step_by(10) {
        let d = dec.heat_increment(p.t, &u).map_err(in_module("spectral"))?;
        let norm = dec.measure().norm(&d).map_err(in_module("geometry"))?;
        push(&mut qt, vec![p.t.into(), (norm * p.t.powf(-1.0 - alpha)).into()]);
    }
    out.tables.push(("quadrature.csv".into(), qt));

    let mut defect = 0.0f64;
    for t in [0.01, 0.1, 1.0, 10.0] {
        let m = dec.heat_kernel_matrix(t).map_err(in_module("spectral"))?;
        for i in 0..n {
            let s: f64 = (0..n).map(|j| m[(i, j)] * w[j]).sum();
            defect = defect.max((s - 1.0).abs());
        }
    }
    out.checks.push(Check::below("stochastic_completeness", defect, cfg.f64("tol_stochastic")?));

    // kernel along the first axis from node 0, with Euclidean reference envelopes
    let (lo, hi) = metric.ellipticity_bounds();
    let spread = (hi / lo).powf(0.5 * grid.dim() as f64 + alpha);
    let pairs: Vec<(usize, usize)> = (1..=grid.points_per_side() / 2).map(|j| (0, j)).collect();
    let kern = jump_kernel(&dec, &metric, alpha, &pairs, &quad).map_err(in_module("spectral"))?;
    let mut kt = Table::new(&["i", "j", "dist", "K", "lower", "upper"]);
    for (&(i, j), &v) in pairs.iter().zip(&kern.values) {
        let d = grid.node_distance(i, j);
        let e = euclidean_kernel(grid.dim(), alpha, d);
        push(&mut kt, vec![i.into(), j.into(), d.into(), v.into(), (e / spread).into(), (e * spread).into()]);
    }
    out.tables.push(("kernel.csv".into(), kt));
    Ok(out)
}

fn extension_check(cfg: &RunConfig) -> Res<Outcome> {
    let grid = cfg.grid()?;
    let profile = cfg.metric(&grid)?;
    let (_, op, dec) = setup(&grid, &profile)?;
    let ecfg = exterior_config(cfg, &grid)?;
    let n = grid.node_count();
    let w = dec.measure().weights();
    let alpha = cfg.f64("alpha")?;
    let mut out = Outcome::default();

    // weighted Neumann-trace ratios per mode
    let tol_trace = cfg.f64("tol_trace")?;
    let alphas = cfg.f64_list("alpha_list")?;
    for &a in &alphas {
        let d = neumann_trace_constant(a);
        let ratios = trace_ratios(&dec, a, TraceExtrapolation::default()).map_err(in_module("extension"))?;
        let mut t = Table::new(&["k", "ratio"]);
        let mut spread = 0.0f64;
        let mut dev = 0.0f64;
        let first = ratios.iter().flatten().next().copied().unwrap_or(0.0);
        for (k, r) in ratios.iter().enumerate() {
            if let Some(r) = r {
                push(&mut t, vec![k.into(), (*r).into()]);
                spread = spread.max((r - first).abs());
                dev = dev.max((r + d).abs());
            }
        }
        out.tables.push((format!("trace_alpha_{}.csv", label(a)), t));
        out.checks.push(Check::below(format!("trace_mode_independence_alpha_{}", label(a)), spread, tol_trace));
        out.checks.push(Check::below(format!("trace_constant_alpha_{}", label(a)), dev, tol_trace));
        if a == 0.5 {
            out.checks.push(Check::below("trace_half_order", dev, cfg.f64("tol_trace_half")?));
        }
    }

    let mut prof = Table::new(&["k", "z", "value"]);
    let lam1 = dec.spectral_gap();
    let zmax = 4.0 / lam1.sqrt();
    for k in 1..dec.len().min(5) {
        let lam = dec.eigenvalues()[k];
        for s in 0..=24 {
            let z = zmax * s as f64 / 24.0;
            let v = extension_profile(alpha, lam.sqrt() * z).map_err(in_module("extension"))?;
            push(&mut prof, vec![k.into(), z.into(), v.into()]);
        }
    }
    out.tables.push(("profiles.csv".into(), prof));

    // mixed local problem vs nonlocal exterior solve
    let mut f = vec![0.0; n];
    for &i in ecfg.exterior() {
        f[i] = smooth_datum(&grid, grid.coordinates(i));
    }
    let values: Vec<f64> = ecfg.exterior().iter().map(|&i| f[i]).collect();
    let zeros = vec![0.0; ecfg.omega().len()];
    let bc = MixedBoundary {
        dirichlet_nodes: ecfg.exterior(),
        neumann_nodes: ecfg.omega(),
        dirichlet_values: &values,
        neumann_values: &zeros,
    };
    let mesh = ExtensionMesh::graded(
        cfg.f64("fe_height_scale")? / lam1.sqrt(),
        cfg.usize("fe_levels")?,
        cfg.f64("fe_grading")?,
    )
    .map_err(in_module("extension"))?;
    let tol_ext = cfg.f64("tol_extension")?;
    let mut fe = Table::new(&["alpha", "levels", "error"]);
    for &a in &alphas {
        let u = ExteriorProblem::new(&dec, a, &ecfg)
            .and_then(|p| p.solve(&f))
            .map_err(in_module("exterior"))?
            .values;
        let mut errs = Vec::new();
        for m in [mesh.clone(), mesh.refined()] {
            let field = fd_extension_solve(&op, a, &m, bc, default_cg_options()).map_err(in_module("extension"))?;
            let e = weighted_rel(field.trace(), &u, w);
            push(&mut fe, vec![a.into(), m.intervals().into(), e.into()]);
            errs.push(e);
        }
        out.checks.push(Check::below(format!("fe_vs_exterior_alpha_{}", label(a)), errs[0], tol_ext));
        let gain = if errs[1] == 0.0 { f64::INFINITY } else { errs[0] / errs[1] };
        out.checks.push(Check::at_least(format!("fe_refinement_gain_alpha_{}", label(a)), gain, 2.0));
    }
    out.tables.push(("extension_vs_exterior.csv".into(), fe));

    // representation formula for the source-to-solution problem with source on W₁
    let source = ball_bump(&grid, &cfg.w(1, &grid)?);
    let solution = poisson_solve(&dec, alpha, &ecfg, &source).map_err(in_module("exterior"))?.solution;
    let support: Vec<usize> = (0..n).filter(|&i| source[i] != 0.0).collect();
    let observe: Vec<usize> = ecfg.w2().iter().copied().filter(|&i| source[i] == 0.0).collect();
    let Some(&x0) = observe.first() else {
        return Err(RunError::Config(crate::ConfigError("w2_center: W₂ has no node off the source support".into())));
    };
    let mut rep = Representation::new(&op, &dec, alpha, &source, cfg.quadrature()?).map_err(in_module("extension"))?;
    rep.calibrate(x0, solution[x0]).map_err(in_module("extension"))?;
    let mut rep_err = 0.0f64;
    for &x in &observe {
        let v = rep.value(x, 0.0).map_err(in_module("extension"))?;
        rep_err = rep_err.max((v - solution[x]).abs() / solution[x].abs().max(f64::MIN_POSITIVE));
    }
    out.checks.push(Check::below("representation_vs_solve", rep_err, cfg.f64("tol_representation")?));

    // C_j exists on the grid only for j below the graph distance to supp((−Δ)F)
    let max_order = cfg.usize("series_order")?;
    let mut st = Table::new(&["x_index", "j", "C_j"]);
    let mut series_err = 0.0f64;
    for &x in &observe {
        let dist = set_distance(&grid, &[x], &support);
        let steps = (dist / grid.spacing()).round() as usize;
        let order = max_order.min(steps.saturating_sub(2));
        let series = rep.series_coefficients(&[x], order).map_err(in_module("extension"))?;
        for (j, c) in series.values[0].iter().enumerate() {
            push(&mut st, vec![x.into(), j.into(), (*c).into()]);
        }
        let z = 0.25 * dist;
        let exact = rep.value(x, z).map_err(in_module("extension"))?;
        let approx = series.partial_sum(0, z, order);
        series_err = series_err.max((approx - exact).abs() / exact.abs().max(f64::MIN_POSITIVE));
    }
    out.tables.push(("series.csv".into(), st));
    out.checks.push(Check::below("series_vs_representation", series_err, cfg.f64("tol_series")?));
    Ok(out)
}

fn dtn(cfg: &RunConfig) -> Res<Outcome> {
    let grid = cfg.grid()?;
    let profile = cfg.metric(&grid)?;
    let (_, _, dec) = setup(&grid, &profile)?;
    let ecfg = exterior_config(cfg, &grid)?;
    let alpha = cfg.f64("alpha")?;
    let n = grid.node_count();
    let w = dec.measure().weights();
    let mut out = Outcome::default();
    let m = in_module("exterior");

    let p = ExteriorProblem::new(&dec, alpha, &ecfg).map_err(&m)?;
    let mut f = vec![0.0; n];
    for &i in ecfg.exterior() {
        f[i] = smooth_datum(&grid, grid.coordinates(i));
    }
    let sol = p.solve(&f).map_err(&m)?;
    let direct = p.solve_direct(&f).map_err(&m)?;
    out.checks.push(Check::below("cg_vs_direct", weighted_rel(&sol.values, &direct, w), 1e3 * fraclb::exterior::EXTERIOR_TOLERANCE));
    let full = p.dtn_full(&f).map_err(&m)?.output_full(n);
    let header: &[&str] = if grid.dim() == 2 {
        &["node", "x", "y", "role", "f", "u", "dtn"]
    } else {
        &["node", "x", "role", "f", "u", "dtn"]
    };
    let mut t = Table::new(header);
    for i in 0..n {
        let x = grid.coordinates(i);
        let role = ecfg.role(i).label();
        let mut row: Vec<fraclb::table::Cell<'_>> = vec![i.into(), x[0].into()];
        if grid.dim() == 2 {
            row.push(x[1].into());
        }
        row.extend([role.into(), f[i].into(), sol.values[i].into(), full[i].into()]);
        push(&mut t, row);
    }
    out.tables.push(("dtn.csv".into(), t));

    let sw = ecfg.swapped();
    let q = ExteriorProblem::new(&dec, alpha, &sw).map_err(&m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed()?);
    let mut partial = 0.0f64;
    let mut fullsym = 0.0f64;
    let mut st = Table::new(&["pair", "kind", "forward", "backward", "defect"]);
    let scale = |rec: &fraclb::exterior::DtnRecord, h: &[f64]| {
        let a = rec.measurement.iter().zip(&rec.output).map(|(&i, o)| o * o * w[i]).sum::<f64>().sqrt();
        let b = h.iter().zip(w).map(|(v, w)| v * v * w).sum::<f64>().sqrt();
        (a * b).max(f64::MIN_POSITIVE)
    };
    for k in 0..cfg.usize("random_pairs")? {
        let f1 = random_vector(&mut rng, n, Some(ecfg.w1()));
        let h1 = random_vector(&mut rng, n, Some(ecfg.w2()));
        let r = p.dtn_partial(&f1).map_err(&m)?;
        let a = r.pairing_weighted(&h1, w);
        let b = q.dtn_partial(&h1).map_err(&m)?.pairing_weighted(&f1, w);
        let d = (a - b).abs() / scale(&r, &h1);
        partial = partial.max(d);
        push(&mut st, vec![k.into(), "partial".into(), a.into(), b.into(), d.into()]);

        let fe = random_vector(&mut rng, n, Some(ecfg.exterior()));
        let he = random_vector(&mut rng, n, Some(ecfg.exterior()));
        let r = p.dtn_full(&fe).map_err(&m)?;
        let a = r.pairing_weighted(&he, w);
        let b = p.dtn_full(&he).map_err(&m)?.pairing_weighted(&fe, w);
        let d = (a - b).abs() / scale(&r, &he);
        fullsym = fullsym.max(d);
        push(&mut st, vec![k.into(), "full".into(), a.into(), b.into(), d.into()]);
    }
    out.tables.push(("symmetry.csv".into(), st));
    let tol = cfg.f64("tol_symmetry")?;
    out.checks.push(Check::below("partial_dtn_symmetry", partial, tol));
    out.checks.push(Check::below("full_dtn_symmetry", fullsym, tol));
    Ok(out)
}

fn study_geometry(cfg: &RunConfig, grid: &TorusGrid) -> Res<StudyGeometry> {
    Ok(StudyGeometry {
        dim: grid.dim(),
        side_length: grid.side_length(),
        alpha: cfg.f64("alpha")?,
        omega: cfg.omega(grid)?,
        w1: cfg.w(1, grid)?,
        w2: cfg.w(2, grid)?,
    })
}

fn gauge(cfg: &RunConfig) -> Res<Outcome> {
    let grid = cfg.grid()?;
    let geometry = study_geometry(cfg, &grid)?;
    let base = cfg.metric(&grid)?;
    let distinct = cfg.distinct_metric(&grid)?;
    let map = cfg.gauge_map(&grid)?;
    let sizes = cfg.usize_list("N_list")?;
    let Shape::Ball { center: c1, radius: r1 } = geometry.w1 else {
        unreachable!("W sets are balls")
    };
    let d0 = move |x: [f64; 2]| smooth_cutoff((x[0] - c1[0]).hypot(x[1] - c1[1]) / r1);
    let d1 = move |x: [f64; 2]| d0(x) * (x[1] - c1[1] + x[0] - c1[0]);
    let data: [&dyn Fn([f64; 2]) -> f64; 2] = [&d0, &d1];
    let limit = cfg.f64("gauge_ratio")?;
    let m = in_module("recovery");

    let g = gauge_experiment(&geometry, &sizes, &base, map, &data).map_err(&m)?;
    let c = dtn_refinement_study(
        &geometry,
        &sizes,
        |gr| make_metric(gr, &distinct),
        |gr| make_metric(gr, &base),
        &data,
    )
    .map_err(&m)?;

    let mut out = Outcome::default();
    let mut t = Table::new(&["pair", "N", "h", "abs_diff", "rel_diff"]);
    for (name, rep) in [("gauge", &g), ("distinct", &c)] {
        for r in &rep.rows {
            push(&mut t, vec![name.into(), r.n.into(), r.h.into(), r.abs_diff.into(), r.rel_diff.into()]);
        }
    }
    out.tables.push(("gauge.csv".into(), t));
    out.checks.push(Check::at_least("gauge_difference_shrinks", g.ratio, limit));
    out.checks.push(Check::below("distinct_difference_persists", c.ratio, limit));
    Ok(out)
}

/// Largest normalized moment or direct ratio over all rows.
fn moment_level(rep: &RecoveryReport) -> f64 {
    rep.moment_rows.iter().fold(0.0f64, |m, r| {
        r.verdict.normalized.iter().fold(m.max(r.verdict.direct), |a, &b| a.max(b))
    })
}

fn moment_zero_level(rep: &RecoveryReport) -> f64 {
    rep.moment_rows.iter().fold(0.0f64, |m, r| m.max(r.verdict.normalized[0]))
}

fn recovery(cfg: &RunConfig) -> Res<Outcome> {
    let grid = cfg.grid()?;
    let ecfg = exterior_config(cfg, &grid)?;
    let base = cfg.metric(&grid)?;
    let distinct = cfg.distinct_metric(&grid)?;
    let map = cfg.gauge_map(&grid)?;
    let settings = RecoverySettings {
        alpha: cfg.f64("alpha")?,
        moments: cfg.usize("moments")?,
        quad: cfg.quadrature()?,
        threshold: f64::INFINITY,
    };
    let kappa = cfg.f64("calibration_safety")?;
    let m = in_module("recovery");
    let geo = in_module("geometry");

    let source = ball_bump(&grid, &cfg.w(1, &grid)?);
    let observe: Vec<usize> = ecfg.w2().iter().copied().filter(|&i| source[i] == 0.0).collect();
    let (w1, w2) = (ecfg.w1(), &observe);
    let mut kernel_points = Vec::new();
    for k in 0..3 {
        let x = w1[k * w1.len() / 3];
        let y = w2[k * w2.len() / 3];
        for t in [0.5, 1.0, 2.0, 4.0] {
            kernel_points.push((x, y, t));
        }
    }
    let sources = [source];
    let run = |g1: &MetricField, g2: &MetricField| -> Res<RecoveryReport> {
        let pair = MetricPair::new(&ecfg, g1, g2).map_err(&m)?;
        recover_heat_kernel_samples(&pair, settings, &sources, &observe, &kernel_points).map_err(&m)
    };

    let identity = MetricProfile::Identity;
    let flat = make_metric(&grid, &identity).map_err(&geo)?;
    let calibration = run(&gauge_pullback(&grid, &identity, map).map_err(&geo)?, &flat)?;
    let base_field = make_metric(&grid, &base).map_err(&geo)?;
    let gauge_rep = run(&gauge_pullback(&grid, &base, map).map_err(&geo)?, &base_field)?;
    let distinct_rep = run(&make_metric(&grid, &distinct).map_err(&geo)?, &flat)?;

    // thresholds: safety factor times the discretization level of the identity-metric gauge run
    let floor = 1e-12;
    let threshold = kappa * moment_level(&calibration).max(floor);
    let kernel_threshold = kappa * calibration.kernel_relative.max(floor);

    let mut out = Outcome::default();
    let mut mt = Table::new(&["experiment", "metric_pair", "m", "moment", "verdict"]);
    let mut verdicts = Vec::new();
    for (name, rep) in [("calibration", &calibration), ("gauge", &gauge_rep), ("distinct", &distinct_rep)] {
        let mut all_pass = true;
        let mut levels = vec![0.0f64; settings.moments];
        for row in &rep.moment_rows {
            let v = vanishing_test(&row.table, threshold);
            all_pass &= v.pass;
            for (l, x) in levels.iter_mut().zip(&v.normalized) {
                *l = l.max(*x);
            }
        }
        for (k, l) in levels.iter().enumerate() {
            let verdict = if *l <= threshold { "PASS" } else { "FAIL" };
            push(&mut mt, vec!["recovery".into(), name.into(), k.into(), (*l).into(), verdict.into()]);
        }
        verdicts.push(all_pass);
    }
    out.tables.push(("moments.csv".into(), mt));
    for (name, rep) in [("gauge", &gauge_rep), ("distinct", &distinct_rep)] {
        let mut kt = Table::new(&["t", "x", "y", "k1", "k2", "diff"]);
        for s in &rep.kernel_samples {
            push(&mut kt, vec![s.t.into(), s.x.into(), s.y.into(), s.k1.into(), s.k2.into(), s.diff.into()]);
        }
        out.tables.push((format!("kernel_{name}.csv"), kt));
    }

    out.checks.push(Check::below("gauge_moments_vanish", moment_level(&gauge_rep), threshold + f64::EPSILON * threshold));
    out.checks.push(Check::below("gauge_kernels_agree", gauge_rep.kernel_relative, kernel_threshold + f64::EPSILON * kernel_threshold));
    out.checks.push(Check::at_least("distinct_moment_zero_exceeds", moment_zero_level(&distinct_rep), 10.0 * threshold));
    out.checks.push(Check::below("distinct_verdict_fails", if verdicts[2] { 1.0 } else { 0.0 }, 0.5));
    Ok(out)
}

fn regularity(cfg: &RunConfig) -> Res<Outcome> {
    let alpha = cfg.f64("alpha")?;
    let s = alpha + cfg.f64("probe_delta")?;
    let bound = cfg.f64("probe_bound")?;
    let mut solutions = Vec::new();
    let mut ct = Table::new(&["N", "poincare", "trace"]);
    for n in cfg.usize_list("N_list")? {
        let grid = cfg.grid_with(n)?;
        let profile = cfg.metric(&grid)?;
        let (_, _, dec) = setup(&grid, &profile)?;
        let ecfg = exterior_config(cfg, &grid)?;
        let mut f = vec![0.0; grid.node_count()];
        for &i in ecfg.exterior() {
            f[i] = smooth_datum(&grid, grid.coordinates(i));
        }
        let u = ExteriorProblem::new(&dec, alpha, &ecfg)
            .and_then(|p| p.solve(&f))
            .map_err(in_module("exterior"))?
            .values;
        let family: Vec<Vec<f64>> = (1..=3)
            .map(|k| {
                (0..grid.node_count())
                    .map(|i| {
                        let x = grid.coordinates(i);
                        (std::f64::consts::TAU * k as f64 * (x[0] + x[1]) / grid.side_length()).sin()
                    })
                    .collect()
            })
            .collect();
        let c = constant_estimates(&dec, &ecfg, alpha, &family).map_err(in_module("analysis"))?;
        push(&mut ct, vec![n.into(), c.poincare.into(), c.trace.into()]);
        solutions.push((grid, u));
    }
    let rep = regularity_probe(&solutions, s).map_err(in_module("analysis"))?;
    let verdict = if rep.ratio < bound { "BOUNDED" } else { "GROWING" };
    let mut t = Table::new(&["N", "s", "norm", "verdict"]);
    for r in &rep.rows {
        push(&mut t, vec![r.n.into(), r.s.into(), r.norm.into(), verdict.into()]);
    }
    let mut out = Outcome::default();
    out.tables.push(("regularity.csv".into(), t));
    out.tables.push(("constants.csv".into(), ct));
    out.checks.push(Check::below("regularity_ratio", rep.ratio, bound));
    Ok(out)
}

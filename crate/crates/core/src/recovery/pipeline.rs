use crate::error::{check_len, Error, Result};
use crate::exterior::{laplacian_powers, poisson_solve, ExteriorConfig, ExteriorProblem, Shape};
use crate::geometry::{MetricField, MetricSource, TorusGrid};
use crate::quadrature::LogQuadrature;
use crate::spectral::{assemble_laplacian, decompose, DiscreteLaplaceBeltrami, LocalHeat, SpectralDecomposition};

use super::gauge::{gauge_pullback, GaugeMap};
use super::moments::{moment_table_from_samples, vanishing_test, MomentTable, VanishingReport, DEFAULT_MOMENTS};

/// Two metrics on one grid that agree node-for-node on the exterior, with their operators
/// and decompositions.
#[derive(Clone, Debug)]
pub struct MetricPair<'c> {
    config: &'c ExteriorConfig,
    pub op1: DiscreteLaplaceBeltrami,
    pub op2: DiscreteLaplaceBeltrami,
    pub dec1: SpectralDecomposition,
    pub dec2: SpectralDecomposition,
}

impl<'c> MetricPair<'c> {
    pub fn new(config: &'c ExteriorConfig, g1: &MetricField, g2: &MetricField) -> Result<Self> {
        check_len(config.grid().node_count(), g1.grid().node_count())?;
        check_len(config.grid().node_count(), g2.grid().node_count())?;
        config.check_exterior_agreement(g1, g2)?;
        let op1 = assemble_laplacian(g1);
        let op2 = assemble_laplacian(g2);
        let dec1 = decompose(&op1)?;
        let dec2 = decompose(&op2)?;
        Ok(Self {
            config,
            op1,
            op2,
            dec1,
            dec2,
        })
    }

    pub fn config(&self) -> &ExteriorConfig {
        self.config
    }

    fn check_observation(&self, source: &[f64], x: usize) -> Result<()> {
        check_len(self.dec1.len(), source.len())?;
        self.config.check_support(source, self.config.exterior(), "source")?;
        if x >= source.len() || self.config.in_omega(x) {
            return Err(Error::Support(format!("observation node {x} is not an exterior node")));
        }
        if source[x] != 0.0 {
            return Err(Error::Support(format!("observation node {x} lies in the support of the source")));
        }
        Ok(())
    }

    /// `U(t, x) = (e^{tΔ_{g₁}} − e^{tΔ_{g₂}}) F (x)` for each `t`.
    pub fn heat_difference_samples(&self, source: &[f64], x: usize, ts: &[f64]) -> Result<Vec<f64>> {
        self.check_observation(source, x)?;
        let a = LocalHeat::new(&self.op1, &self.dec1, source)?;
        let b = LocalHeat::new(&self.op2, &self.dec2, source)?;
        a.difference_samples(&b, x, ts)
    }

    pub fn heat_difference_trace(&self, source: &[f64], x: usize, t: f64) -> Result<f64> {
        Ok(self.heat_difference_samples(source, x, &[t])?[0])
    }

    /// Moments of `U(·, x)` normalized by those of the first metric's flow.
    pub fn moment_table(&self, source: &[f64], x: usize, alpha: f64, count: usize, quad: LogQuadrature) -> Result<MomentTable> {
        self.check_observation(source, x)?;
        let ts: Vec<f64> = quad.points().iter().map(|p| p.t).collect();
        let a = LocalHeat::new(&self.op1, &self.dec1, source)?;
        let b = LocalHeat::new(&self.op2, &self.dec2, source)?;
        let diff = a.difference_samples(&b, x, &ts)?;
        let reference = a.samples(x, &ts)?;
        moment_table_from_samples(&diff, Some(&reference), alpha, count, quad)
    }
}

/// Heat-kernel sample of both metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSample {
    pub t: f64,
    pub x: usize,
    pub y: usize,
    pub k1: f64,
    pub k2: f64,
    pub diff: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RecoverySettings {
    /// Order of the source-to-solution map `(−Δ)^{1−α}` is `1 − alpha`; moments use the
    /// weight exponent `1 − alpha` so that `μ_m = Γ(α−1−m) · ΔL(Δ^m F)(x)`.
    pub alpha: f64,
    pub moments: usize,
    pub quad: LogQuadrature,
    /// Pass threshold for normalized moments and for relative kernel differences.
    pub threshold: f64,
}

impl RecoverySettings {
    pub fn new(alpha: f64, threshold: f64) -> Self {
        Self {
            alpha,
            moments: DEFAULT_MOMENTS,
            quad: LogQuadrature::default(),
            threshold,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MomentRow {
    pub source: usize,
    pub x: usize,
    pub table: MomentTable,
    pub verdict: VanishingReport,
}

#[derive(Clone, Debug)]
pub struct RecoveryReport {
    pub moment_rows: Vec<MomentRow>,
    pub kernel_samples: Vec<KernelSample>,
    /// `max |k₁ − k₂| / max |k₁|` over the samples.
    pub kernel_relative: f64,
    /// Per source and `m`: relative exterior difference of the source-to-solution records
    /// of `Δ^m F` (as long as `Δ^m F` stays exterior-supported for both metrics).
    pub source_gaps: Vec<Vec<f64>>,
    pub moments_vanish: bool,
    pub kernels_agree: bool,
}

/// Source-to-solution data, moment tests and sampled heat-kernel differences for a pair.
pub fn recover_heat_kernel_samples(
    pair: &MetricPair<'_>,
    settings: RecoverySettings,
    sources: &[Vec<f64>],
    observe: &[usize],
    kernel_points: &[(usize, usize, f64)],
) -> Result<RecoveryReport> {
    let cfg = pair.config;
    let a = settings.alpha;
    let mut source_gaps = Vec::with_capacity(sources.len());
    for f in sources {
        let mut gaps = Vec::new();
        let p1 = laplacian_powers(&pair.op1, cfg, f, 0)?;
        let mut cur = (p1[0].clone(), p1[0].clone());
        for m in 0..settings.moments {
            if m > 0 {
                let n1 = pair.op1.apply(&cur.0)?;
                let n2 = pair.op2.apply(&cur.1)?;
                if cfg.check_support(&n1, cfg.exterior(), "").is_err() || cfg.check_support(&n2, cfg.exterior(), "").is_err() {
                    break;
                }
                cur = (n1, n2);
            }
            let r1 = poisson_solve(&pair.dec1, a, cfg, &cur.0)?.exterior_values();
            let r2 = poisson_solve(&pair.dec2, a, cfg, &cur.1)?.exterior_values();
            let num: f64 = r1.iter().zip(&r2).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            let den: f64 = r1.iter().map(|p| p * p).sum::<f64>().sqrt();
            gaps.push(if num == 0.0 { 0.0 } else { num / den });
        }
        source_gaps.push(gaps);
    }

    let mut moment_rows = Vec::new();
    for (s, f) in sources.iter().enumerate() {
        for &x in observe {
            let table = pair.moment_table(f, x, 1.0 - a, settings.moments, settings.quad)?;
            let verdict = vanishing_test(&table, settings.threshold);
            moment_rows.push(MomentRow { source: s, x, table, verdict });
        }
    }

    let mut kernel_samples = Vec::with_capacity(kernel_points.len());
    for &(x, y, t) in kernel_points {
        for node in [x, y] {
            if cfg.in_omega(node) {
                return Err(Error::Support(format!("kernel sample node {node} is not exterior")));
            }
        }
        let k1 = pair.dec1.heat_kernel(t, x, y)?;
        let k2 = pair.dec2.heat_kernel(t, x, y)?;
        kernel_samples.push(KernelSample { t, x, y, k1, k2, diff: k1 - k2 });
    }
    let kmax = kernel_samples.iter().fold(0.0f64, |m, k| m.max(k.k1.abs()));
    let dmax = kernel_samples.iter().fold(0.0f64, |m, k| m.max(k.diff.abs()));
    let kernel_relative = if dmax == 0.0 { 0.0 } else { dmax / kmax };
    Ok(RecoveryReport {
        moments_vanish: moment_rows.iter().all(|r| r.verdict.pass),
        kernels_agree: kernel_relative <= settings.threshold,
        moment_rows,
        kernel_samples,
        kernel_relative,
        source_gaps,
    })
}

/// Geometry of a refinement study: grid box, fractional order and the sets Ω, W₁, W₂.
#[derive(Clone, Copy, Debug)]
pub struct StudyGeometry {
    pub dim: usize,
    pub side_length: f64,
    pub alpha: f64,
    pub omega: Shape,
    pub w1: Shape,
    pub w2: Shape,
}

impl StudyGeometry {
    pub fn config(&self, n: usize) -> Result<(TorusGrid, ExteriorConfig)> {
        let grid = TorusGrid::new(self.dim, self.side_length, n)?;
        let cfg = ExteriorConfig::from_shapes(&grid, self.omega, self.w1, self.w2, true)?;
        Ok((grid, cfg))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RefinementRow {
    pub n: usize,
    pub h: f64,
    /// `max_f ‖Λ₁f − Λ₂f‖_{L²(W₂)}`.
    pub abs_diff: f64,
    /// Same, divided by `‖Λ₂f‖_{L²(W₂)}` of the maximizing datum.
    pub rel_diff: f64,
}

#[derive(Clone, Debug)]
pub struct RefinementReport {
    pub rows: Vec<RefinementRow>,
    /// First difference over last difference.
    pub ratio: f64,
    /// Observed order `log(ratio)/log(h_first/h_last)`.
    pub order: f64,
    /// `ratio ≥ 3`.
    pub pass: bool,
}

pub const GAUGE_RATIO: f64 = 3.0;

/// Partial DtN maps of two metric families compared over a grid sequence. The data are
/// closed-form functions restricted to W₁.
pub fn dtn_refinement_study<M1, M2>(
    geometry: &StudyGeometry,
    sizes: &[usize],
    metric1: M1,
    metric2: M2,
    data: &[&dyn Fn([f64; 2]) -> f64],
) -> Result<RefinementReport>
where
    M1: Fn(&TorusGrid) -> Result<MetricField>,
    M2: Fn(&TorusGrid) -> Result<MetricField>,
{
    if sizes.len() < 2 || data.is_empty() {
        return Err(Error::InvalidParameter("need at least two grids and one datum".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let (grid, cfg) = geometry.config(n)?;
        let g1 = metric1(&grid)?;
        let g2 = metric2(&grid)?;
        cfg.check_exterior_agreement(&g1, &g2)?;
        let dec1 = decompose(&assemble_laplacian(&g1))?;
        let dec2 = decompose(&assemble_laplacian(&g2))?;
        let p1 = ExteriorProblem::new(&dec1, geometry.alpha, &cfg)?;
        let p2 = ExteriorProblem::new(&dec2, geometry.alpha, &cfg)?;
        let w = dec2.measure().weights();
        let mut best = (0.0f64, 0.0f64);
        for f in data {
            let mut datum = vec![0.0; grid.node_count()];
            for &i in cfg.w1() {
                datum[i] = f(grid.coordinates(i));
            }
            let a = p1.dtn_partial(&datum)?;
            let b = p2.dtn_partial(&datum)?;
            let mut num = 0.0;
            let mut den = 0.0;
            for ((&i, x), y) in b.measurement.iter().zip(&a.output).zip(&b.output) {
                num += (x - y) * (x - y) * w[i];
                den += y * y * w[i];
            }
            let (num, den) = (num.sqrt(), den.sqrt());
            if num >= best.0 {
                best = (num, if den > 0.0 { num / den } else { 0.0 });
            }
        }
        rows.push(RefinementRow {
            n,
            h: grid.spacing(),
            abs_diff: best.0,
            rel_diff: best.1,
        });
    }
    let first = rows[0];
    let last = rows[rows.len() - 1];
    let ratio = if last.abs_diff == 0.0 { f64::INFINITY } else { first.abs_diff / last.abs_diff };
    let order = ratio.ln() / (first.h / last.h).ln();
    Ok(RefinementReport {
        pass: ratio >= GAUGE_RATIO,
        rows,
        ratio,
        order,
    })
}

/// DtN maps of `Φ*g` and `g` over a grid sequence.
pub fn gauge_experiment<S: MetricSource + ?Sized>(
    geometry: &StudyGeometry,
    sizes: &[usize],
    base: &S,
    map: GaugeMap,
    data: &[&dyn Fn([f64; 2]) -> f64],
) -> Result<RefinementReport> {
    map.validate()?;
    dtn_refinement_study(
        geometry,
        sizes,
        |g| gauge_pullback(g, base, map),
        |g| MetricField::sample(g, base),
        data,
    )
}

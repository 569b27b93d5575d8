//! Plain `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use fraclb::exterior::Shape;
use fraclb::geometry::{MetricProfile, TorusGrid};
use fraclb::quadrature::LogQuadrature;
use fraclb::recovery::GaugeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

/// Every accepted key with its global default and a short description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("experiment", "", "experiment name (see `list`)"),
    ("dim", "1", "grid dimension, 1 or 2"),
    ("L", "8", "torus side length"),
    ("N", "32", "points per side"),
    ("N_list", "16,32,64", "grid sequence for refinement studies"),
    ("alpha", "0.5", "fractional order in (0,1)"),
    ("alpha_list", "0.25,0.5,0.75", "orders swept by the operator and extension checks"),
    ("metric", "conformal_bump", "identity | conformal_bump | anisotropic_bump"),
    ("metric_beta", "0.5", "bump amplitude"),
    ("metric_sigma", "0.5", "bump Gaussian width"),
    ("metric_r0", "1.2", "bump support radius"),
    ("metric_center", "center", "bump centre (`center` or x[,y])"),
    ("distinct_metric", "conformal_bump", "control metric compared against `metric`"),
    ("distinct_beta", "0.1", "control bump amplitude"),
    ("distinct_sigma", "1.0", "control bump width"),
    ("distinct_r0", "1.9", "control bump support radius"),
    ("distinct_center", "center", "control bump centre"),
    ("omega_shape", "ball", "ball | annulus"),
    ("omega_center", "center", "centre of Ω"),
    ("omega_radius", "1.3", "radius of Ω (outer radius for an annulus)"),
    ("omega_inner", "0", "inner radius of an annular Ω"),
    ("w1_center", "0.75", "centre of the ball W₁"),
    ("w1_radius", "0.6", "radius of W₁"),
    ("w2_center", "6.75", "centre of the ball W₂"),
    ("w2_radius", "0.6", "radius of W₂"),
    ("allow_overlap", "false", "permit W₁ and W₂ to overlap"),
    ("gauge_center", "center", "centre of the radial squash"),
    ("gauge_radius", "1.1", "support radius of the radial squash"),
    ("gauge_strength", "0.3", "squash strength ε (0 gives the identity map)"),
    ("t_min", "1e-8", "quadrature window start"),
    ("t_max", "1e4", "quadrature window end"),
    ("quad_nodes", "400", "quadrature nodes"),
    ("moments", "8", "number of moments"),
    ("series_order", "6", "largest order of the normal-derivative series"),
    ("fe_levels", "96", "extension mesh intervals"),
    ("fe_height_scale", "12", "extension height in units of 1/sqrt(lambda_1)"),
    ("fe_grading", "3", "extension mesh grading exponent"),
    ("tol_eigen", "1e-10", "identity-metric eigenvalues vs closed form, relative to lambda_max"),
    ("tol_operator", "1e-5", "Balakrishnan vs spectral relative error"),
    ("tol_stochastic", "1e-10", "heat row-sum defect"),
    ("tol_trace", "1e-8", "Neumann-trace ratio deviation"),
    ("tol_trace_half", "1e-10", "Neumann-trace ratio deviation at alpha = 1/2"),
    ("tol_extension", "1e-3", "extension solver vs exterior solve"),
    ("tol_representation", "1e-4", "calibrated representation vs Neumann solve"),
    ("tol_series", "1e-6", "series vs representation"),
    ("tol_symmetry", "1e-10", "DtN pairing symmetry defect"),
    ("gauge_ratio", "3", "required error ratio under refinement"),
    ("calibration_safety", "1.5", "factor on the calibrated recovery threshold"),
    ("probe_delta", "0.4", "regularity probe order offset"),
    ("probe_bound", "2", "bounded-ratio limit of the regularity probe"),
    ("seed", "0x5EED", "seed for generated test vectors"),
    ("random_pairs", "20", "random data pairs in symmetry checks"),
    ("output_dir", "fraclb-out", "output directory"),
];

/// Experiment names, one-line descriptions and the keys each reads beyond the common ones.
pub const EXPERIMENTS: &[(&str, &str, &str)] = &[
    (
        "operator-check",
        "heat-semigroup vs spectral fractional powers, stochastic completeness, eigenvalues",
        "dim L N alpha_list metric* t_min t_max quad_nodes tol_operator tol_stochastic",
    ),
    (
        "extension-check",
        "Neumann-trace ratios, extension solver vs exterior solve, representation and series",
        "dim L N alpha alpha_list metric* omega* w1* w2* fe_* tol_trace tol_extension tol_representation tol_series",
    ),
    (
        "dtn",
        "exterior Dirichlet solve, DtN maps and their pairing symmetry",
        "dim L N alpha metric* omega* w1* w2* seed random_pairs tol_symmetry",
    ),
    (
        "gauge",
        "DtN difference of a pulled-back metric under refinement, with a non-gauge control",
        "dim L N_list alpha metric* distinct_* omega* w1* w2* gauge_* gauge_ratio",
    ),
    (
        "recovery",
        "heat-flow moments and heat-kernel differences for gauge and distinct metric pairs",
        "dim L N alpha metric* distinct_* omega* w1* w2* gauge_* moments t_min t_max quad_nodes calibration_safety",
    ),
    (
        "regularity",
        "Sobolev norms of exterior solutions over a grid sequence",
        "dim L N_list alpha metric* omega* w1* w2* probe_delta probe_bound",
    ),
];

fn experiment_defaults(name: &str) -> &'static [(&'static str, &'static str)] {
    match name {
        "gauge" => &[
            ("dim", "2"),
            ("N_list", "24,48"),
            ("metric", "anisotropic_bump"),
            ("metric_beta", "0.4"),
            ("metric_sigma", "0.6"),
            ("metric_center", "4.2,3.9"),
            ("metric_r0", "1.2"),
            ("distinct_sigma", "0.6"),
            ("distinct_r0", "1.3"),
            ("omega_radius", "1.5"),
            ("w1_center", "1.0,4.0"),
            ("w1_radius", "0.7"),
            ("w2_center", "7.0,4.0"),
            ("w2_radius", "0.7"),
            ("allow_overlap", "true"),
            ("gauge_radius", "1.3"),
        ],
        "extension-check" => &[
            ("N", "64"),
            ("omega_center", "3.5"),
            ("omega_radius", "1.0"),
            ("w1_center", "1.0"),
            ("w2_center", "5.5"),
            ("w2_radius", "0.4"),
        ],
        "recovery" => &[
            ("dim", "2"),
            ("N", "32"),
            ("metric", "anisotropic_bump"),
            ("metric_beta", "0.4"),
            ("metric_sigma", "0.8"),
            ("metric_center", "4.2,3.9"),
            ("metric_r0", "1.8"),
            ("omega_radius", "2.0"),
            ("w1_center", "0.6,4.0"),
            ("w1_radius", "0.5"),
            ("w2_center", "6.3,6.3"),
            ("w2_radius", "0.5"),
            ("gauge_radius", "1.8"),
            ("gauge_strength", "0.1"),
        ],
        _ => &[],
    }
}

/// Fully resolved configuration: defaults, experiment defaults, then file values.
#[derive(Clone, Debug)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Res<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Res<Self> {
        let mut given: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {line_no}: expected `key = value`, got `{line}`"));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return err(format!("line {line_no}: empty key"));
            }
            if !KEYS.iter().any(|(name, _, _)| *name == k) {
                return err(format!("line {line_no}: unknown key `{k}`"));
            }
            if let Some((prev, _)) = given.get(k) {
                return err(format!("line {line_no}: key `{k}` already set on line {prev}"));
            }
            given.insert(k.to_string(), (line_no, v.to_string()));
        }
        let Some((_, exp)) = given.get("experiment") else {
            return err("missing required key `experiment`");
        };
        if !EXPERIMENTS.iter().any(|(n, _, _)| n == exp) {
            return err(format!("unknown experiment `{exp}`"));
        }
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        for (k, v) in experiment_defaults(exp) {
            values.insert(k.to_string(), v.to_string());
        }
        for (k, (_, v)) in &given {
            values.insert(k.clone(), v.clone());
        }
        let cfg = Self { values };
        cfg.validate().map_err(|e| match given.iter().find(|(k, _)| e.0.starts_with(&format!("{k}:"))) {
            Some((_, (line, _))) => ConfigError(format!("line {line}: {}", e.0)),
            None => e,
        })?;
        Ok(cfg)
    }

    /// Resolved key/value pairs in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn experiment(&self) -> &str {
        self.raw("experiment")
    }

    pub fn f64(&self, key: &str) -> Res<f64> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| ConfigError(format!("{key}: expected a number, got `{v}`")))
    }

    pub fn usize(&self, key: &str) -> Res<usize> {
        let v = self.raw(key);
        let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
            Some(hex) => usize::from_str_radix(hex, 16).ok(),
            None => v.parse().ok(),
        };
        parsed.ok_or_else(|| ConfigError(format!("{key}: expected a nonnegative integer, got `{v}`")))
    }

    pub fn bool(&self, key: &str) -> Res<bool> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => err(format!("{key}: expected true or false, got `{v}`")),
        }
    }

    pub fn f64_list(&self, key: &str) -> Res<Vec<f64>> {
        let v = self.raw(key);
        let out: Option<Vec<f64>> = v.split(',').map(|s| s.trim().parse::<f64>().ok()).collect();
        match out {
            Some(l) if !l.is_empty() => Ok(l),
            _ => err(format!("{key}: expected a comma-separated list of numbers, got `{v}`")),
        }
    }

    pub fn usize_list(&self, key: &str) -> Res<Vec<usize>> {
        let v = self.raw(key);
        let out: Option<Vec<usize>> = v.split(',').map(|s| s.trim().parse::<usize>().ok()).collect();
        match out {
            Some(l) if !l.is_empty() => Ok(l),
            _ => err(format!("{key}: expected a comma-separated list of integers, got `{v}`")),
        }
    }

    /// A point `x[,y]`, or the box centre for `center`.
    pub fn point(&self, key: &str, grid: &TorusGrid) -> Res<[f64; 2]> {
        if self.raw(key) == "center" {
            return Ok(grid.center());
        }
        let l = self.f64_list(key)?;
        match l.as_slice() {
            [x] => Ok([*x, 0.0]),
            [x, y] if grid.dim() == 2 => Ok([*x, *y]),
            [x, _] if grid.dim() == 1 => Ok([*x, 0.0]),
            _ => err(format!("{key}: expected x or x,y")),
        }
    }

    pub fn seed(&self) -> Res<u64> {
        Ok(self.usize("seed")? as u64)
    }

    pub fn grid_with(&self, n: usize) -> Res<TorusGrid> {
        TorusGrid::new(self.usize("dim")?, self.f64("L")?, n).map_err(|e| ConfigError(format!("N: {e}")))
    }

    pub fn grid(&self) -> Res<TorusGrid> {
        self.grid_with(self.usize("N")?)
    }

    fn profile(&self, prefix: &str, kind_key: &str, grid: &TorusGrid) -> Res<MetricProfile> {
        let beta = self.f64(&format!("{prefix}_beta"))?;
        let sigma = self.f64(&format!("{prefix}_sigma"))?;
        let r0 = self.f64(&format!("{prefix}_r0"))?;
        let center = Some(self.point(&format!("{prefix}_center"), grid)?);
        let p = match self.raw(kind_key) {
            "identity" => MetricProfile::Identity,
            "conformal_bump" => MetricProfile::ConformalBump { beta, sigma, center, r0 },
            "anisotropic_bump" => MetricProfile::AnisotropicBump { beta, sigma, center, r0 },
            other => return err(format!("{kind_key}: unknown metric profile `{other}`")),
        };
        p.validate(grid).map_err(|e| ConfigError(format!("{kind_key}: {e}")))?;
        Ok(p)
    }

    pub fn metric(&self, grid: &TorusGrid) -> Res<MetricProfile> {
        self.profile("metric", "metric", grid)
    }

    pub fn distinct_metric(&self, grid: &TorusGrid) -> Res<MetricProfile> {
        self.profile("distinct", "distinct_metric", grid)
    }

    pub fn omega(&self, grid: &TorusGrid) -> Res<Shape> {
        let center = self.point("omega_center", grid)?;
        let radius = self.f64("omega_radius")?;
        match self.raw("omega_shape") {
            "ball" => Ok(Shape::Ball { center, radius }),
            "annulus" => Ok(Shape::Annulus {
                center,
                inner: self.f64("omega_inner")?,
                outer: radius,
            }),
            other => err(format!("omega_shape: expected ball or annulus, got `{other}`")),
        }
    }

    pub fn w(&self, which: usize, grid: &TorusGrid) -> Res<Shape> {
        Ok(Shape::Ball {
            center: self.point(&format!("w{which}_center"), grid)?,
            radius: self.f64(&format!("w{which}_radius"))?,
        })
    }

    pub fn gauge_map(&self, grid: &TorusGrid) -> Res<GaugeMap> {
        let strength = self.f64("gauge_strength")?;
        if strength == 0.0 {
            return Ok(GaugeMap::Identity);
        }
        let map = GaugeMap::RadialSquash {
            center: self.point("gauge_center", grid)?,
            radius: self.f64("gauge_radius")?,
            strength,
        };
        map.validate().map_err(|e| ConfigError(format!("gauge_strength: {e}")))?;
        Ok(map)
    }

    pub fn quadrature(&self) -> Res<LogQuadrature> {
        LogQuadrature::new(self.f64("t_min")?, self.f64("t_max")?, self.usize("quad_nodes")?)
            .map_err(|e| ConfigError(format!("t_min: {e}")))
    }

    /// Parses every key into its type and checks ranges, so that errors surface before any
    /// computation.
    pub fn validate(&self) -> Res<()> {
        let alpha_ok = |key: &str, a: f64| {
            if a > 0.0 && a < 1.0 {
                Ok(())
            } else {
                err(format!("{key}: alpha outside (0,1): {a}"))
            }
        };
        alpha_ok("alpha", self.f64("alpha")?)?;
        for a in self.f64_list("alpha_list")? {
            alpha_ok("alpha_list", a)?;
        }
        match self.usize("dim")? {
            1 | 2 => {}
            d => return err(format!("dim: must be 1 or 2, got {d}")),
        }
        let grid = self.grid()?;
        for n in self.usize_list("N_list")? {
            self.grid_with(n)?;
        }
        self.metric(&grid)?;
        self.distinct_metric(&grid)?;
        self.omega(&grid)?;
        self.w(1, &grid)?;
        self.w(2, &grid)?;
        self.bool("allow_overlap")?;
        self.gauge_map(&grid)?;
        self.quadrature()?;
        for key in ["moments", "fe_levels", "random_pairs"] {
            if self.usize(key)? == 0 {
                return err(format!("{key}: must be positive"));
            }
        }
        for key in [
            "fe_height_scale",
            "fe_grading",
            "tol_eigen",
            "tol_operator",
            "tol_stochastic",
            "tol_trace_half",
            "tol_trace",
            "tol_extension",
            "tol_representation",
            "tol_series",
            "tol_symmetry",
            "gauge_ratio",
            "calibration_safety",
            "probe_delta",
            "probe_bound",
        ] {
            if !(self.f64(key)? > 0.0) {
                return err(format!("{key}: must be positive"));
            }
        }
        self.seed()?;
        Ok(())
    }
}

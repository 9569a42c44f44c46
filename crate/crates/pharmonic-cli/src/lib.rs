//! Batch driver behind the `pharmonic` binary.
//!
//! A [`RunConfig`] selects a suite, one or more catalog examples (or the
//! synthetic `random` field built from the configured space, degree and
//! seed), a radius grid and quadrature nodes. [`run_pointwise`] executes
//! pointwise identity suites and [`run_profile`] samples radial profiles,
//! writing a CSV table per example plus a JSON summary.
//!
//! Reports are byte-identical across repeated runs with the same config and
//! seed: record ordering is fixed, accumulation inside the library is
//! deterministic, and runtimes are shown on stderr only, never serialized.

use nalgebra::DVector;
use pharmonic::calculus::inhomogeneity;
use pharmonic::catalog::{catalog, ExampleField, FieldKind};
use pharmonic::forms::{BundleForm, BundleSpec, ConnectionField};
use pharmonic::integrate::{
    inhomogeneous_profile, liouville_ratio_check, monotone_violations, theta_profile,
    ymh_identity_and_profile, QuadratureSpec, RadialProfile,
};
use pharmonic::manifold::{ChartPoint, ModelSpace};
use pharmonic::stress::{
    contraction_divergence_residual, covector_norm, div_stress_direct, div_stress_identity,
    energy_density, metric_variation_residual, random_metric_perturbation, stress_tensor,
    tensor_pairing, EnergyConfig, SymTensorField, VectorField,
};
use pharmonic::ymh::{ymh_div_stress, ymhe_residual};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

pub const SUITES: &[&str] = &[
    "conservation",
    "trace",
    "div-routes",
    "contraction",
    "metric-variation",
    "ymhe",
    "all",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Math(#[from] pharmonic::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpaceSpec {
    pub kind: String,
    pub dim: usize,
    #[serde(default)]
    pub kappa: f64,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<ModelSpace> {
        match self.kind.as_str() {
            "euclidean" => Ok(ModelSpace::euclidean(self.dim)?),
            "hyperbolic" => Ok(ModelSpace::hyperbolic(self.dim, self.kappa)?),
            other => Err(CliError::Usage(format!(
                "unknown space kind '{other}' (use euclidean or hyperbolic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct RadiiSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

impl RadiiSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0) || self.max <= self.min || self.count < 2 {
            return Err(CliError::Usage(
                "radius grid must satisfy 0 < min < max with count >= 2".into(),
            ));
        }
        let n = self.count;
        Ok((0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if self.log {
                    (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + t * (self.max - self.min)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct NodeSpec {
    pub radial: usize,
    pub polar: usize,
    pub azimuthal: usize,
}

/// One run: a suite selector, example names, optional overrides, the
/// quadrature spec and output paths. The JSON config file mirrors this
/// structure; command-line flags override file entries.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub examples: Vec<String>,
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    /// Degree k and exponent p, overriding the example's configuration.
    #[serde(default)]
    pub kp: Option<(usize, f64)>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub radii: Option<RadiiSpec>,
    #[serde(default)]
    pub nodes: Option<NodeSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suite: None,
            examples: Vec::new(),
            space: None,
            kp: None,
            center: None,
            radii: None,
            nodes: None,
            seed: 0,
            out: None,
        }
    }
}

/// One executed check: its largest residual against the pinned tolerance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Wall time; reported on stderr, excluded from serialized reports so
    /// byte-identical output survives timing jitter.
    #[serde(skip)]
    pub runtime: std::time::Duration,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct Report {
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

impl Report {
    fn push(&mut self, name: String, max_residual: f64, tolerance: f64, started: Instant) {
        let pass = max_residual <= tolerance;
        self.records.push(CheckRecord {
            name,
            max_residual,
            tolerance,
            pass,
            runtime: started.elapsed(),
        });
    }

    fn finalize(mut self) -> Report {
        self.pass = self.records.iter().all(|r| r.pass);
        self
    }
}

/// A resolved field: the example data after applying config overrides.
struct Selected {
    name: String,
    space: ModelSpace,
    cfg: EnergyConfig,
    kind: FieldKind,
    center: ChartPoint,
    radii_hint: (f64, f64),
    gamma: Option<f64>,
    points: Vec<ChartPoint>,
}

fn usage_with_catalog(msg: &str, examples: &[ExampleField]) -> CliError {
    let names: Vec<&str> = examples
        .iter()
        .map(|e| e.name.as_str())
        .chain(std::iter::once("random"))
        .collect();
    CliError::Usage(format!(
        "{msg}; available examples: {}; available suites: {}",
        names.join(", "),
        SUITES.join(", ")
    ))
}

fn resolve(config: &RunConfig) -> Result<Vec<Selected>> {
    let examples = catalog()?;
    if config.examples.is_empty() {
        return Err(usage_with_catalog("no examples selected", &examples));
    }
    let mut out = Vec::new();
    for name in &config.examples {
        let selected = if name == "random" {
            let space_spec = config.space.clone().ok_or_else(|| {
                CliError::Usage("the 'random' example needs --space".into())
            })?;
            let space = space_spec.build()?;
            let (k, p) = config
                .kp
                .ok_or_else(|| CliError::Usage("the 'random' example needs --kp".into()))?;
            let cfg = EnergyConfig::new(k, p, space.dim())?;
            let psi = BundleForm::random_polynomial(
                space.clone(),
                BundleSpec::new(2)?,
                k,
                2,
                0.03,
                1.0,
                config.seed.wrapping_add(1),
            );
            let conn = ConnectionField::random_polynomial_skew(
                &space,
                2,
                2,
                0.3,
                config.seed.wrapping_add(2),
            );
            let n = space.dim();
            let center = match (&config.center, &space) {
                (Some(c), _) => ChartPoint::new(c.clone()),
                (None, s) if s.is_flat() => ChartPoint(DVector::zeros(n)),
                (None, _) => {
                    let mut c = DVector::zeros(n);
                    c[n - 1] = 1.0;
                    ChartPoint(c)
                }
            };
            let points = sample_box_points(&space, 100, config.seed.wrapping_add(3));
            Selected {
                name: name.clone(),
                space,
                cfg,
                kind: FieldKind::Form { psi, conn },
                center,
                radii_hint: (0.2, 1.2),
                gamma: None,
                points,
            }
        } else {
            let e = pharmonic::catalog::find(&examples, name)
                .map_err(|_| usage_with_catalog(&format!("unknown example '{name}'"), &examples))?;
            let cfg = match config.kp {
                Some((k, p)) => EnergyConfig::new(k, p, e.space.dim())?,
                None => e.cfg,
            };
            let center = match &config.center {
                Some(c) => ChartPoint::new(c.clone()),
                None => e.center.clone(),
            };
            Selected {
                name: e.name.clone(),
                space: e.space.clone(),
                cfg,
                kind: e.kind.clone(),
                center,
                radii_hint: e.radii_hint,
                gamma: e.gamma,
                points: e.sample_points(100, config.seed.wrapping_add(4)),
            }
        };
        out.push(selected);
    }
    Ok(out)
}

fn sample_box_points(space: &ModelSpace, count: usize, seed: u64) -> Vec<ChartPoint> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = space.dim();
    (0..count)
        .map(|_| {
            let mut c: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
            if !space.is_flat() {
                c[n - 1] = rng.gen_range(0.6..1.8);
            }
            ChartPoint::new(c)
        })
        .collect()
}

/// Execute the selected pointwise suites over sampled points.
pub fn run_pointwise(config: &RunConfig) -> Result<Report> {
    let suite = config.suite.as_deref().unwrap_or("all");
    if !SUITES.contains(&suite) {
        let examples = catalog()?;
        return Err(usage_with_catalog(&format!("unknown suite '{suite}'"), &examples));
    }
    let selected = resolve(config)?;
    let mut report = Report::default();
    for s in &selected {
        let run_all = suite == "all";
        match &s.kind {
            FieldKind::Form { psi, conn } => {
                if run_all || suite == "conservation" {
                    let started = Instant::now();
                    let mut worst = 0.0f64;
                    for x in &s.points {
                        let div = div_stress_identity(&s.cfg, &s.space, conn, psi, x)?;
                        worst = worst.max(covector_norm(&s.space, x, &div)?);
                    }
                    report.push(format!("conservation/{}", s.name), worst, 1e-8, started);
                }
                if run_all || suite == "trace" {
                    let started = Instant::now();
                    let mut worst = 0.0f64;
                    for x in &s.points {
                        let t = stress_tensor(&s.cfg, &s.space, psi, x)?;
                        let m = s.space.metric_jet(x)?;
                        let trace = tensor_pairing(&m.ginv, &t, &m.g);
                        let e = energy_density(&s.cfg, &s.space, psi, x)?;
                        let expect = (s.cfg.kp() - s.cfg.n as f64) * e;
                        worst = worst.max((trace - expect).abs() / (1.0 + expect.abs()));
                    }
                    report.push(format!("trace/{}", s.name), worst, 1e-12, started);
                }
                if run_all || suite == "div-routes" {
                    let started = Instant::now();
                    let tol = if s.space.is_flat() { 1e-7 } else { 1e-6 };
                    let mut worst = 0.0f64;
                    for x in &s.points {
                        let a = div_stress_direct(&s.cfg, &s.space, psi, x)?;
                        let b = div_stress_identity(&s.cfg, &s.space, conn, psi, x)?;
                        let scale = a.norm().max(b.norm());
                        if scale > 1e-14 {
                            worst = worst.max((&a - &b).norm() / scale);
                        }
                    }
                    report.push(format!("div-routes/{}", s.name), worst, tol, started);
                }
                if run_all || suite == "metric-variation" {
                    let started = Instant::now();
                    let mut worst = 0.0f64;
                    for (i, x) in s.points.iter().take(50).enumerate() {
                        let h = random_metric_perturbation(
                            &s.space,
                            x,
                            0.3,
                            config.seed.wrapping_add(10 + i as u64),
                        )?;
                        worst =
                            worst.max(metric_variation_residual(&s.cfg, &s.space, psi, x, &h, 1e-4)?);
                    }
                    report.push(format!("metric-variation/{}", s.name), worst, 1e-6, started);
                }
            }
            FieldKind::Ymh {
                action,
                gauge,
                higgs,
                potential,
                curvature,
            } => {
                if run_all || suite == "ymhe" {
                    let started = Instant::now();
                    let mut worst = 0.0f64;
                    for x in &s.points {
                        let (r1, r2) = ymhe_residual(
                            &s.space, action, gauge, curvature, higgs, potential, x,
                        )?;
                        worst = worst.max(r1.max(r2));
                    }
                    report.push(format!("ymhe/{}", s.name), worst, 1e-8, started);
                }
                if run_all || suite == "conservation" {
                    let started = Instant::now();
                    let mut worst = 0.0f64;
                    for x in &s.points {
                        let (ident, direct) = ymh_div_stress(
                            &s.space, action, gauge, curvature, higgs, potential, x,
                        )?;
                        worst = worst.max(ident.norm().max(direct.norm()));
                    }
                    report.push(format!("conservation/{}", s.name), worst, 1e-10, started);
                }
            }
        }
        if run_all || suite == "contraction" {
            let started = Instant::now();
            let tol = if s.space.is_flat() { 1e-10 } else { 1e-8 };
            let mut worst = 0.0f64;
            for (i, x) in s.points.iter().take(50).enumerate() {
                let sf = SymTensorField::random_polynomial(
                    s.space.clone(),
                    2,
                    0.8,
                    config.seed.wrapping_add(20 + i as u64),
                );
                let xf = VectorField::random_polynomial(
                    s.space.clone(),
                    2,
                    0.8,
                    config.seed.wrapping_add(21 + i as u64),
                );
                worst = worst.max(contraction_divergence_residual(&s.space, &sf, &xf, x)?);
            }
            report.push(format!("contraction/{}", s.name), worst, tol, started);
        }
    }
    Ok(report.finalize())
}

/// Profile output for one example.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ProfileSummary {
    pub example: String,
    pub radii: usize,
    pub theta_first: f64,
    pub theta_last: f64,
    pub monotone_violations: usize,
    pub ordered_pair_violations: usize,
    pub max_identity_residual: Option<f64>,
    /// Radii skipped from the identity verdict because the quadrature error
    /// estimate exceeded the tolerance (reported as warnings).
    pub inconclusive_radii: usize,
}

/// Run radial profiles for the selected examples, writing one CSV per
/// example plus a JSON summary when an output base path is configured.
/// Returns the report, the in-memory tables, and the summary JSON text.
pub fn run_profile(config: &RunConfig) -> Result<(Report, Vec<(String, RadialProfile)>, String)> {
    let selected = resolve(config)?;
    let mut report = Report::default();
    let mut tables = Vec::new();
    let mut summaries = Vec::new();
    for s in &selected {
        // the standing assumption gates every profile run
        s.cfg.require_subcritical().map_err(|_| {
            CliError::Usage(format!(
                "example '{}': profiles require the standing assumption n > k·p \
                 (n = {}, k·p = {})",
                s.name,
                s.cfg.n,
                s.cfg.kp()
            ))
        })?;
        let radii = match &config.radii {
            Some(spec) => spec.grid()?,
            None => RadiiSpec {
                min: s.radii_hint.0,
                max: s.radii_hint.1,
                count: 20,
                log: false,
            }
            .grid()?,
        };
        let spec = match &config.nodes {
            Some(nodes) => QuadratureSpec::new(nodes.radial, nodes.polar, nodes.azimuthal, config.seed)?,
            None => {
                let mut d = QuadratureSpec::for_dim(s.space.dim());
                d.seed = config.seed;
                d
            }
        };
        let started = Instant::now();
        let (profile, monotone_series): (RadialProfile, &'static str) = match &s.kind {
            FieldKind::Form { psi, conn } => {
                if s.gamma.is_some() {
                    // measured bound; fall back to a fresh sample if a kp
                    // override changed the configuration
                    let gamma = match config.kp {
                        None => s.gamma.unwrap(),
                        Some(_) => {
                            let mut g = 0.0f64;
                            for x in &s.points {
                                g = g.max(inhomogeneity(&s.space, conn, psi, x, s.cfg.p)?);
                            }
                            1.05 * g.max(1e-12)
                        }
                    };
                    (
                        inhomogeneous_profile(
                            &s.cfg, &s.space, conn, psi, &s.center, &radii, gamma, 0.0, &spec,
                        )?,
                        "combined",
                    )
                } else {
                    // model spaces run at Λ = 0 (flat, and the exact
                    // hyperbolic case)
                    (
                        theta_profile(
                            &s.cfg, &s.space, conn, psi, &s.center, &radii, 0.0, &spec, true,
                        )?,
                        "theta",
                    )
                }
            }
            FieldKind::Ymh {
                action,
                gauge,
                higgs,
                potential,
                curvature,
            } => (
                ymh_identity_and_profile(
                    &s.space, action, gauge, curvature, higgs, potential, &s.center, &radii,
                    0.0, &spec,
                )?,
                "theta",
            ),
        };
        let series: &[f64] = if monotone_series == "combined" {
            profile.combined.as_deref().unwrap_or(&profile.theta)
        } else {
            &profile.theta
        };
        let violations = monotone_violations(series);
        report.push(
            format!("profile-monotone/{}", s.name),
            violations.len() as f64,
            0.0,
            started,
        );
        let ordered = liouville_ratio_check(&profile);
        // radii whose quadrature error estimate cannot support the identity
        // verdict are warnings, not failures
        let max_resid = profile.max_conclusive_residual();
        if profile.residual.iter().any(|v| v.is_finite()) {
            report.push(
                format!("profile-identity/{}", s.name),
                max_resid,
                1e-2,
                started,
            );
        }
        summaries.push(ProfileSummary {
            example: s.name.clone(),
            radii: radii.len(),
            theta_first: series[0],
            theta_last: *series.last().unwrap(),
            monotone_violations: violations.len(),
            ordered_pair_violations: ordered.len(),
            max_identity_residual: if profile.residual.iter().any(|v| v.is_finite()) {
                Some(max_resid)
            } else {
                None
            },
            inconclusive_radii: profile.inconclusive_count(),
        });
        tables.push((s.name.clone(), profile));
    }
    let report = report.finalize();
    let summary = serde_json::json!({
        "config": config,
        "report": report,
        "profiles": summaries,
    });
    let text = serde_json::to_string_pretty(&summary)?;
    if let Some(base) = &config.out {
        for (name, profile) in &tables {
            write_profile_csv(&format!("{base}-{name}.csv"), profile)?;
        }
        std::fs::write(format!("{base}.json"), &text)?;
    }
    Ok((report, tables, text))
}

/// Write a profile as CSV. Columns are fixed; the trailing `combined`
/// column appears only for inhomogeneous profiles.
pub fn write_profile_csv(path: &str, profile: &RadialProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "R",
        "raw_energy",
        "theta",
        "boundary_term",
        "bulk_term",
        "identity_lhs",
        "identity_rhs",
        "residual",
    ];
    if profile.combined.is_some() {
        header.push("combined");
    }
    w.write_record(&header)?;
    for i in 0..profile.radii.len() {
        let mut row = vec![
            profile.radii[i].to_string(),
            profile.raw_energy[i].to_string(),
            profile.theta[i].to_string(),
            profile.boundary_term[i].to_string(),
            profile.bulk_term[i].to_string(),
            profile.identity_lhs[i].to_string(),
            profile.identity_rhs[i].to_string(),
            profile.residual[i].to_string(),
        ];
        if let Some(c) = &profile.combined {
            row.push(c[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a profile CSV back into memory (exact float round-trip).
pub fn read_profile_csv(path: &str) -> Result<RadialProfile> {
    let mut r = csv::Reader::from_path(path)?;
    let has_combined = r.headers()?.iter().any(|h| h == "combined");
    let mut profile = RadialProfile {
        radii: vec![],
        raw_energy: vec![],
        theta: vec![],
        boundary_term: vec![],
        bulk_term: vec![],
        identity_lhs: vec![],
        identity_rhs: vec![],
        residual: vec![],
        inconclusive: vec![],
        combined: if has_combined { Some(vec![]) } else { None },
    };
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> f64 { rec[i].parse().expect("numeric CSV field") };
        profile.radii.push(f(0));
        profile.raw_energy.push(f(1));
        profile.theta.push(f(2));
        profile.boundary_term.push(f(3));
        profile.bulk_term.push(f(4));
        profile.identity_lhs.push(f(5));
        profile.identity_rhs.push(f(6));
        profile.residual.push(f(7));
        profile.inconclusive.push(false);
        if let Some(c) = &mut profile.combined {
            c.push(f(8));
        }
    }
    Ok(profile)
}

/// Serialize a pointwise report (deterministic bytes) and optionally write
/// it to `<base>.json`.
pub fn write_report(config: &RunConfig, report: &Report) -> Result<String> {
    let doc = serde_json::json!({
        "config": config,
        "report": report,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    if let Some(base) = &config.out {
        std::fs::write(format!("{base}.json"), &text)?;
    }
    Ok(text)
}

/// Human-readable table on stderr, including runtimes.
pub fn print_report(report: &Report) {
    let mut err = std::io::stderr().lock();
    for r in &report.records {
        let _ = writeln!(
            err,
            "{:6} {:42} max residual {:12.4e}  tol {:8.0e}  ({} ms)",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.max_residual,
            r.tolerance,
            r.runtime.as_millis()
        );
    }
    let _ = writeln!(err, "overall: {}", if report.pass { "PASS" } else { "FAIL" });
}

/// List available examples and suites.
pub fn list() -> Result<String> {
    let examples = catalog()?;
    let mut out = String::from("examples:\n");
    for e in &examples {
        let tags: Vec<&str> = e.tags.iter().map(|t| t.name()).collect();
        out.push_str(&format!(
            "  {:22} {:?} dim {}  k = {}, p = {}  [{}]\n",
            e.name,
            e.space.kind(),
            e.space.dim(),
            e.cfg.k,
            e.cfg.p,
            tags.join(", ")
        ));
    }
    out.push_str("  random                 (synthetic; needs --space and --kp)\n");
    out.push_str(&format!("suites: {}\n", SUITES.join(", ")));
    Ok(out)
}

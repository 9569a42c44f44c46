//! Analytic example fields with verified defining properties.
//!
//! Every entry supplies exact jets, a validity region, a sensible profile
//! centre and radius range, and a set of tags (closed, p-coclosed,
//! p-harmonic, Yang-Mills-Higgs pair, inhomogeneous). Tags are *verified at
//! registration* by sampling; building the catalog fails loudly when a
//! check does not hold.

use crate::calculus::{bump_jet, exterior_covariant_derivative, p_codifferential};
use crate::error::{Error, Result};
use crate::forms::{inner_product, BundleForm, BundleSpec, ConnectionField};
use crate::integrate::{sample_inhomogeneity_bound, QuadratureSpec};
use crate::jet::Jet2;
use crate::manifold::{ChartPoint, ModelSpace};
use crate::stress::EnergyConfig;
use crate::ymh::{
    curvature_from_connection, ymhe_residual, GaugeField, HiggsField, LieAlgebraAction, Potential,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Closed,
    PCoclosed,
    PHarmonic,
    YmhPair,
    Inhomogeneous,
}

impl Tag {
    pub fn name(&self) -> &'static str {
        match self {
            Tag::Closed => "closed",
            Tag::PCoclosed => "p-coclosed",
            Tag::PHarmonic => "p-harmonic",
            Tag::YmhPair => "ymh-pair",
            Tag::Inhomogeneous => "inhomogeneous",
        }
    }
}

/// The field data of an example: either a bundle-valued form with its
/// connection, or a full Yang-Mills-Higgs tuple.
#[derive(Clone)]
pub enum FieldKind {
    Form {
        psi: BundleForm,
        conn: ConnectionField,
    },
    Ymh {
        action: LieAlgebraAction,
        gauge: GaugeField,
        higgs: HiggsField,
        potential: Potential,
        curvature: BundleForm,
    },
}

#[derive(Clone)]
pub struct ExampleField {
    pub name: String,
    pub space: ModelSpace,
    pub cfg: EnergyConfig,
    pub kind: FieldKind,
    pub tags: Vec<Tag>,
    valid: Arc<dyn Fn(&ChartPoint) -> bool + Send + Sync>,
    sample_lo: DVector<f64>,
    sample_hi: DVector<f64>,
    /// Centre and radius range on which profiles keep B̄_R inside the
    /// validity region.
    pub center: ChartPoint,
    pub radii_hint: (f64, f64),
    /// Measured inhomogeneity bound (only for inhomogeneous examples).
    pub gamma: Option<f64>,
}

impl std::fmt::Debug for ExampleField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExampleField")
            .field("name", &self.name)
            .field("tags", &self.tags)
            .finish()
    }
}

impl ExampleField {
    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn is_valid(&self, x: &ChartPoint) -> bool {
        self.space.contains(x) && (self.valid)(x)
    }

    /// Rejection-sample `count` valid points from the example's box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<ChartPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.space.dim();
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count && attempts < count * 10_000 {
            attempts += 1;
            let c = DVector::from_fn(n, |i, _| {
                rng.gen_range(self.sample_lo[i]..self.sample_hi[i])
            });
            let x = ChartPoint(c);
            if self.is_valid(&x) {
                out.push(x);
            }
        }
        assert_eq!(out.len(), count, "sampling starved for '{}'", self.name);
        out
    }
}

fn check_form_tags(field: &ExampleField, psi: &BundleForm, conn: &ConnectionField) -> Result<()> {
    let points = field.sample_points(100, 0x5eed);
    for x in &points {
        let metric = field.space.metric_jet(x)?;
        if field.has_tag(Tag::Closed) {
            let d = exterior_covariant_derivative(&field.space, conn, psi, x)?;
            let norm = inner_product(&metric.ginv, &d, &d)?.max(0.0).sqrt();
            if norm > 1e-8 {
                return Err(Error::TagCheckFailed {
                    example: field.name.clone(),
                    tag: "closed".into(),
                    residual: norm,
                });
            }
        }
        if field.has_tag(Tag::PCoclosed) {
            let dp = p_codifferential(&field.space, conn, psi, x, field.cfg.p)?;
            let norm = inner_product(&metric.ginv, &dp, &dp)?.max(0.0).sqrt();
            if norm > 1e-8 {
                return Err(Error::TagCheckFailed {
                    example: field.name.clone(),
                    tag: "p-coclosed".into(),
                    residual: norm,
                });
            }
        }
    }
    Ok(())
}

fn check_ymh_tags(field: &ExampleField) -> Result<()> {
    let FieldKind::Ymh {
        action,
        gauge,
        higgs,
        potential,
        curvature,
    } = &field.kind
    else {
        return Ok(());
    };
    for x in field.sample_points(100, 0x5eed) {
        let (r1, r2) =
            ymhe_residual(&field.space, action, gauge, curvature, higgs, potential, &x)?;
        if r1.max(r2) > 1e-8 {
            return Err(Error::TagCheckFailed {
                example: field.name.clone(),
                tag: "ymh-pair".into(),
                residual: r1.max(r2),
            });
        }
    }
    Ok(())
}

/// Check that a supplied analytic curvature matches the curvature computed
/// from the gauge potential.
fn check_curvature_consistency(
    field: &ExampleField,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    curvature: &BundleForm,
) -> Result<()> {
    for x in field.sample_points(50, 0xcafe) {
        let from_conn = curvature_from_connection(&field.space, action, gauge, &x)?;
        let supplied = curvature.value(&x)?;
        let dev = (&from_conn.comps - &supplied.comps).norm();
        if dev > 1e-10 * (1.0 + supplied.comps.norm()) {
            return Err(Error::TagCheckFailed {
                example: field.name.clone(),
                tag: "curvature-consistency".into(),
                residual: dev,
            });
        }
    }
    Ok(())
}

/// Compare supplied analytic jets against Richardson central differences at
/// sampled valid points; returns the maximum relative deviation.
pub fn jet_selftest(field: &ExampleField) -> Result<f64> {
    let points = field.sample_points(15, 0x1e75);
    match &field.kind {
        FieldKind::Form { psi, .. } => form_jet_selftest(psi, &points),
        FieldKind::Ymh {
            higgs, curvature, ..
        } => {
            let a = higgs_jet_selftest(higgs, &points)?;
            let b = form_jet_selftest(curvature, &points)?;
            Ok(a.max(b))
        }
    }
}

fn form_jet_selftest(psi: &BundleForm, points: &[ChartPoint]) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in points {
        let jet = psi.jet(x)?;
        let n = jet.n;
        let h = 1e-4 * (1.0 + x.0.norm());
        let scale = 1.0 + jet.value.norm();
        for d in 0..n {
            let fd = {
                let f = |t: f64| {
                    let mut q = x.0.clone();
                    q[d] = t;
                    psi.jet(&ChartPoint(q)).unwrap().value
                };
                let d1 = (f(x.0[d] + h) - f(x.0[d] - h)) / (2.0 * h);
                let d2 = (f(x.0[d] + 0.5 * h) - f(x.0[d] - 0.5 * h)) / h;
                (d2 * 4.0 - d1) / 3.0
            };
            worst = worst.max((&jet.grad[d] - fd).norm() / scale);
        }
        if let Some(hess) = &jet.hess {
            for d in 0..n {
                let fd = {
                    let f = |t: f64| {
                        let mut q = x.0.clone();
                        q[d] = t;
                        psi.jet(&ChartPoint(q)).unwrap().grad[d].clone()
                    };
                    let d1 = (f(x.0[d] + h) - f(x.0[d] - h)) / (2.0 * h);
                    let d2 = (f(x.0[d] + 0.5 * h) - f(x.0[d] - 0.5 * h)) / h;
                    (d2 * 4.0 - d1) / 3.0
                };
                worst = worst.max((&hess[d * n + d] - fd).norm() / scale);
            }
        }
    }
    Ok(worst)
}

fn higgs_jet_selftest(u: &HiggsField, points: &[ChartPoint]) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in points {
        let jets = u.eval(x);
        let n = x.dim();
        let h = 1e-4 * (1.0 + x.0.norm());
        let scale = 1.0 + jets.iter().map(|j| j.v.abs()).fold(0.0, f64::max);
        for (v, jet) in jets.iter().enumerate() {
            for d in 0..n {
                let f = |t: f64| {
                    let mut q = x.0.clone();
                    q[d] = t;
                    u.eval(&ChartPoint(q))[v].v
                };
                let fd = crate::jet::central_diff(f, x.0[d], h);
                worst = worst.max((jet.g[d] - fd).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// 't Hooft symbols η^a_{μν} on ℝ⁴ (0-based indices, a ∈ {0,1,2}).
fn thooft_eta(a: usize, mu: usize, nu: usize) -> f64 {
    let eps = |a: usize, b: usize, c: usize| -> f64 {
        match (a, b, c) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    if mu < 3 && nu < 3 {
        eps(a, mu, nu)
    } else if mu < 3 && nu == 3 {
        if a == mu {
            1.0
        } else {
            0.0
        }
    } else if mu == 3 && nu < 3 {
        if a == nu {
            -1.0
        } else {
            0.0
        }
    } else {
        0.0
    }
}

/// Regular-gauge self-dual so(3) instanton on ℝ⁴ at scale λ = 1, pulled
/// back to ℝ⁵ (no dependence on the fifth coordinate, no dx⁵ components):
/// A^a_μ = 2 η^a_{μν} x_ν / (|x₄|² + 1), F^a_{μν} = −4 η^a_{μν} / (|x₄|² + 1)².
fn instanton_fields(space: &ModelSpace) -> (GaugeField, BundleForm) {
    let n = space.dim();
    assert!(n >= 4);
    let gauge = GaugeField::new(
        3,
        Arc::new(move |x: &ChartPoint| {
            let vars = Jet2::vars(&x.0);
            let mut rho = Jet2::constant(1.0, n);
            for v in vars.iter().take(4) {
                rho = rho + v * v;
            }
            let inv_rho = rho.recip();
            let mut jets = vec![vec![Jet2::constant(0.0, n); 3]; n];
            for (mu, row) in jets.iter_mut().enumerate().take(4) {
                for (a, jet) in row.iter_mut().enumerate() {
                    let mut num = Jet2::constant(0.0, n);
                    for nu in 0..4 {
                        let eta = thooft_eta(a, mu, nu);
                        if eta != 0.0 {
                            num = num + vars[nu].scale(2.0 * eta);
                        }
                    }
                    *jet = &num * &inv_rho;
                }
            }
            jets
        }),
    );
    // F^a = −4 η^a f with the shared radial profile f = ρ^{−2}; its jets in
    // closed form keep the energy integrand cheap on quadrature sweeps.
    let index_table: Vec<(usize, usize)> = crate::forms::multi_indices(n, 2)
        .iter()
        .map(|idx| (idx.entries()[0], idx.entries()[1]))
        .collect();
    let nn = n;
    let f_form = BundleForm::new(
        space.clone(),
        BundleSpec { rank: 3 },
        2,
        Arc::new(move |x: &ChartPoint| {
            let n = nn;
            let mut rho = 1.0;
            for i in 0..4 {
                rho += x.0[i] * x.0[i];
            }
            let f = rho.powi(-2);
            let mut df = vec![0.0; n];
            let mut ddf = DMatrix::zeros(n, n);
            for d in 0..4 {
                df[d] = -4.0 * x.0[d] * rho.powi(-3);
                for e in 0..4 {
                    let mut v = 24.0 * x.0[d] * x.0[e] * rho.powi(-4);
                    if d == e {
                        v += -4.0 * rho.powi(-3);
                    }
                    ddf[(d, e)] = v;
                }
            }
            let cols = index_table.len();
            let mut value = DMatrix::zeros(3, cols);
            let mut grad = vec![DMatrix::zeros(3, cols); n];
            let mut hess = vec![DMatrix::zeros(3, cols); n * n];
            for (col, &(mu, nu)) in index_table.iter().enumerate() {
                if mu >= 4 || nu >= 4 {
                    continue;
                }
                for a in 0..3 {
                    let eta = thooft_eta(a, mu, nu);
                    if eta == 0.0 {
                        continue;
                    }
                    let c = -4.0 * eta;
                    value[(a, col)] = c * f;
                    for d in 0..n {
                        grad[d][(a, col)] = c * df[d];
                        for e in 0..n {
                            hess[d * n + e][(a, col)] = c * ddf[(d, e)];
                        }
                    }
                }
            }
            crate::forms::FormJet {
                n,
                rank: 3,
                degree: 2,
                value,
                grad,
                hess: Some(hess),
            }
        }),
    );
    (gauge, f_form)
}

/// Build the full example catalog, verifying every tag by sampling.
pub fn catalog() -> Result<Vec<ExampleField>> {
    let mut out = Vec::new();

    // (a) the zero field
    {
        let space = ModelSpace::euclidean(3)?;
        let field = ExampleField {
            name: "zero".into(),
            space: space.clone(),
            cfg: EnergyConfig::new(1, 2.0, 3)?,
            kind: FieldKind::Form {
                psi: BundleForm::zero(space.clone(), BundleSpec::trivial(), 1),
                conn: ConnectionField::trivial(3, 1),
            },
            tags: vec![Tag::Closed, Tag::PCoclosed, Tag::PHarmonic],
            valid: Arc::new(|_| true),
            sample_lo: DVector::from_element(3, -1.5),
            sample_hi: DVector::from_element(3, 1.5),
            center: ChartPoint::new(vec![0.0, 0.0, 0.0]),
            radii_hint: (0.2, 2.0),
            gamma: None,
        };
        out.push(field);
    }

    // (b) the constant one-form dx¹ on ℝ³
    {
        let space = ModelSpace::euclidean(3)?;
        let field = ExampleField {
            name: "constant-1form".into(),
            space: space.clone(),
            cfg: EnergyConfig::new(1, 2.0, 3)?,
            kind: FieldKind::Form {
                psi: BundleForm::coordinate_form(space.clone(), &[0])?,
                conn: ConnectionField::trivial(3, 1),
            },
            tags: vec![Tag::Closed, Tag::PCoclosed, Tag::PHarmonic],
            valid: Arc::new(|_| true),
            sample_lo: DVector::from_element(3, -1.5),
            sample_hi: DVector::from_element(3, 1.5),
            center: ChartPoint::new(vec![0.0, 0.0, 0.0]),
            radii_hint: (0.2, 2.0),
            gamma: None,
        };
        out.push(field);
    }

    // (c) constant abelian curvature dx¹∧dx² on ℝ⁵
    {
        let space = ModelSpace::euclidean(5)?;
        let (action, gauge, f_form) = crate::ymh::abelian_constant_curvature(&space);
        let conn = gauge.adjoint_connection(&action);
        let field = ExampleField {
            name: "abelian-curvature".into(),
            space: space.clone(),
            cfg: EnergyConfig::new(2, 2.0, 5)?,
            kind: FieldKind::Form { psi: f_form, conn },
            tags: vec![Tag::Closed, Tag::PCoclosed, Tag::PHarmonic],
            valid: Arc::new(|_| true),
            sample_lo: DVector::from_element(5, -1.2),
            sample_hi: DVector::from_element(5, 1.2),
            center: ChartPoint::new(vec![0.0; 5]),
            radii_hint: (0.2, 2.0),
            gamma: None,
        };
        out.push(field);
    }

    // (d) radial p-harmonic du for u = |x|^{(p−n)/(p−1)}, n = 4, p = 3
    {
        let space = ModelSpace::euclidean(4)?;
        let p = 3.0;
        let alpha = (p - 4.0) / (p - 1.0);
        let psi = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            move |vars| {
                let nv = vars.len();
                let mut r2 = Jet2::constant(0.0, nv);
                for v in vars {
                    r2 = r2 + v * v;
                }
                let w = r2.powf(0.5 * alpha - 1.0).scale(alpha);
                vec![(0..nv).map(|i| &w * &vars[i]).collect()]
            },
        );
        let field = ExampleField {
            name: "radial-p-harmonic".into(),
            space: space.clone(),
            cfg: EnergyConfig::new(1, p, 4)?,
            kind: FieldKind::Form {
                psi,
                conn: ConnectionField::trivial(4, 1),
            },
            tags: vec![Tag::Closed, Tag::PCoclosed, Tag::PHarmonic],
            valid: Arc::new(|x: &ChartPoint| x.0.norm() >= 0.4),
            sample_lo: DVector::from_element(4, -2.0),
            sample_hi: DVector::from_element(4, 2.0),
            center: ChartPoint::new(vec![3.0, 0.0, 0.0, 0.0]),
            radii_hint: (0.2, 2.0),
            gamma: None,
        };
        out.push(field);
    }

    // (e) hyperbolic harmonic one-form du for u = y^{n−1} on ℍ³
    {
        let space = ModelSpace::hyperbolic(3, 1.0)?;
        let a = 2.0; // n − 1
        let psi = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            move |vars| {
                let nv = vars.len();
                let mut row = vec![Jet2::constant(0.0, nv); nv];
                row[nv - 1] = vars[nv - 1].powf(a - 1.0).scale(a);
                vec![row]
            },
        );
        let field = ExampleField {
            name: "hyperbolic-harmonic".into(),
            space: space.clone(),
            cfg: EnergyConfig::new(1, 2.0, 3)?,
            kind: FieldKind::Form {
                psi,
                conn: ConnectionField::trivial(3, 1),
            },
            tags: vec![Tag::Closed, Tag::PCoclosed, Tag::PHarmonic],
            valid: Arc::new(|x: &ChartPoint| x.0[2] > 0.05),
            sample_lo: DVector::from_vec(vec![-1.0, -1.0, 0.5]),
            sample_hi: DVector::from_vec(vec![1.0, 1.0, 2.0]),
            center: ChartPoint::new(vec![0.0, 0.0, 1.0]),
            radii_hint: (0.2, 2.0),
            gamma: None,
        };
        out.push(field);
    }

    // (f) self-dual instanton curvature pulled back to ℝ⁵
    {
        let space = ModelSpace::euclidean(5)?;
        let (gauge, f_form) = instanton_fields(&space);
        let action = LieAlgebraAction::so3();
        let conn = gauge.adjoint_connection(&action);
        let field = ExampleField {
            name: "instanton".into(),
            space: space.clone(),
            cfg: EnergyConfig::new(2, 2.0, 5)?,
            kind: FieldKind::Form {
                psi: f_form.clone(),
                conn,
            },
            tags: vec![Tag::Closed, Tag::PCoclosed, Tag::PHarmonic],
            valid: Arc::new(|_| true),
            sample_lo: DVector::from_element(5, -1.5),
            sample_hi: DVector::from_element(5, 1.5),
            center: ChartPoint::new(vec![0.0; 5]),
            radii_hint: (0.2, 2.0),
            gamma: None,
        };
        check_curvature_consistency(&field, &action, &gauge, &f_form)?;
        out.push(field);
    }

    // (g) Yang-Mills-Higgs pairs: vacuum and zero section, on ℝ⁵
    {
        let space = ModelSpace::euclidean(5)?;
        let action = LieAlgebraAction::so2_on_r2();
        let mk = |name: &str, higgs: HiggsField| ExampleField {
            name: name.into(),
            space: space.clone(),
            cfg: EnergyConfig::new(2, 2.0, 5).expect("valid config"),
            kind: FieldKind::Ymh {
                action: action.clone(),
                gauge: GaugeField::zero(&space, 1),
                higgs,
                potential: Potential::quartic(),
                curvature: BundleForm::zero(space.clone(), BundleSpec { rank: 1 }, 2),
            },
            tags: vec![Tag::YmhPair],
            valid: Arc::new(|_| true),
            sample_lo: DVector::from_element(5, -1.5),
            sample_hi: DVector::from_element(5, 1.5),
            center: ChartPoint::new(vec![0.0; 5]),
            radii_hint: (0.2, 2.0),
            gamma: None,
        };
        out.push(mk(
            "ymh-vacuum",
            HiggsField::constant(&space, DVector::from_vec(vec![1.0, 0.0])),
        ));
        out.push(mk("ymh-zero-section", HiggsField::zero(&space, 2)));
    }

    // (h) inhomogeneous field: dx¹ plus a bump-localised dx² component
    {
        let space = ModelSpace::euclidean(3)?;
        let eps = 0.05;
        let perturbation = BundleForm::coordinate_form(space.clone(), &[1])?
            .scaled_by(move |vars| bump_jet(&[0.0, 0.0, 0.0], &[0.8, 0.8, 0.8], vars).scale(eps));
        let psi = BundleForm::coordinate_form(space.clone(), &[0])?.plus(&perturbation)?;
        let cfg = EnergyConfig::new(1, 2.0, 3)?;
        let conn = ConnectionField::trivial(3, 1);
        let center = ChartPoint::new(vec![0.0, 0.0, 0.0]);
        let radii_hint = (0.1, 2.0);
        let q_max = sample_inhomogeneity_bound(
            &cfg,
            &space,
            &conn,
            &psi,
            &center,
            radii_hint.1,
            &QuadratureSpec::for_dim(3),
        )?;
        let field = ExampleField {
            name: "inhomogeneous-bump".into(),
            space: space.clone(),
            cfg,
            kind: FieldKind::Form { psi, conn },
            tags: vec![Tag::Inhomogeneous],
            valid: Arc::new(|_| true),
            sample_lo: DVector::from_element(3, -1.5),
            sample_hi: DVector::from_element(3, 1.5),
            center,
            radii_hint,
            gamma: Some(1.05 * q_max.max(1e-12)),
        };
        out.push(field);
    }

    // registration checks
    for field in &out {
        match &field.kind {
            FieldKind::Form { psi, conn } => check_form_tags(field, psi, conn)?,
            FieldKind::Ymh { .. } => check_ymh_tags(field)?,
        }
    }
    Ok(out)
}

/// Look an example up by name.
pub fn find<'a>(examples: &'a [ExampleField], name: &str) -> Result<&'a ExampleField> {
    examples
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownExample(name.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stress::{covector_norm, div_stress_identity};

    #[test]
    fn catalog_builds_and_tags_verify() {
        let examples = catalog().expect("catalog registration");
        let names: Vec<&str> = examples.iter().map(|e| e.name.as_str()).collect();
        for expected in [
            "zero",
            "constant-1form",
            "abelian-curvature",
            "radial-p-harmonic",
            "hyperbolic-harmonic",
            "instanton",
            "ymh-vacuum",
            "ymh-zero-section",
            "inhomogeneous-bump",
        ] {
            assert!(names.contains(&expected), "missing example {expected}");
        }
    }

    #[test]
    fn unknown_example_lookup_fails() {
        let examples = catalog().unwrap();
        assert!(matches!(
            find(&examples, "no-such-field"),
            Err(Error::UnknownExample(_))
        ));
    }

    #[test]
    fn jet_selftests_pass() {
        let examples = catalog().unwrap();
        for e in &examples {
            let dev = jet_selftest(e).unwrap();
            assert!(dev < 1e-6, "example '{}' jet deviation {dev:e}", e.name);
        }
    }

    #[test]
    fn p_harmonic_examples_conserve() {
        // every p-harmonic catalog field satisfies ‖div T‖_g ≤ 1e−8
        let examples = catalog().unwrap();
        for e in examples.iter().filter(|e| e.has_tag(Tag::PHarmonic)) {
            let FieldKind::Form { psi, conn } = &e.kind else {
                continue;
            };
            for x in e.sample_points(30, 7) {
                let div = div_stress_identity(&e.cfg, &e.space, conn, psi, &x).unwrap();
                let norm = covector_norm(&e.space, &x, &div).unwrap();
                assert!(
                    norm <= 1e-8,
                    "example '{}' violates conservation: {norm:e}",
                    e.name
                );
            }
        }
    }

    #[test]
    fn instanton_is_independent_of_fifth_coordinate() {
        let examples = catalog().unwrap();
        let inst = find(&examples, "instanton").unwrap();
        let FieldKind::Form { psi, conn } = &inst.kind else {
            panic!("instanton is a form example");
        };
        let x1 = ChartPoint::new(vec![0.3, -0.2, 0.5, 0.1, 0.0]);
        let x2 = ChartPoint::new(vec![0.3, -0.2, 0.5, 0.1, 0.9]);
        let v1 = psi.value(&x1).unwrap();
        let v2 = psi.value(&x2).unwrap();
        assert!((&v1.comps - &v2.comps).norm() < 1e-14);
        // δ^∇F has no dx⁵ component and agrees between the slices
        let d1 = crate::calculus::codifferential(&inst.space, conn, psi, &x1).unwrap();
        let d2 = crate::calculus::codifferential(&inst.space, conn, psi, &x2).unwrap();
        assert!((&d1.comps - &d2.comps).norm() < 1e-12);
    }

    #[test]
    fn inhomogeneous_gamma_is_positive_and_small() {
        let examples = catalog().unwrap();
        let bump = find(&examples, "inhomogeneous-bump").unwrap();
        let gamma = bump.gamma.expect("measured gamma");
        assert!(gamma > 0.0 && gamma < 1.0, "gamma = {gamma}");
    }
}

//! Yang-Mills-Higgs densities, tensors and equation residuals.
//!
//! The gauge data is a g-valued coefficient field A_μ^a(x) over an
//! orthonormal Lie-algebra basis {X_a}. It acts on the adjoint bundle
//! through the commutator ad(A_μ) and on the Higgs bundle through the
//! representation ρ'(A_μ). For a pair (ω, u) the density is
//! ẽ = ½|F|² + ½|d^{∇⁰}u|² + W(|u|²) and the associated tensor
//!
//! T̃_{ij} = ⟨ι_{ε_i}F, ι_{ε_j}F⟩ + ⟨∇⁰_i u, ∇⁰_j u⟩ − ẽ δ_{ij}
//!
//! in an orthonormal frame, with divergence expressible through the two
//! Yang-Mills-Higgs equations.

use crate::calculus::codifferential;
use crate::error::{Error, Result};
use crate::forms::{
    binomial, index_rank, inner_product, interior_product, multi_indices, BundleForm, BundleSpec,
    ConnJet, ConnectionField, FormJet, FormValue, MultiIndex,
};
use crate::jet::{Dual, Jet2};
use crate::manifold::{ChartPoint, ModelSpace};
use crate::stress::{covariant_divergence, interior_maps, TensorJet};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// A compact Lie algebra acting on a representation space V: an orthonormal
/// basis {X_a} with its adjoint matrices and the representation matrices
/// ρ'(X_a), all skew-symmetric.
#[derive(Debug, Clone)]
pub struct LieAlgebraAction {
    pub dim_g: usize,
    pub dim_v: usize,
    /// rho[a] = ρ'(X_a), dim_v × dim_v.
    pub rho: Vec<DMatrix<f64>>,
    /// ad[a] = ad(X_a) in the basis {X_b}, dim_g × dim_g.
    pub ad: Vec<DMatrix<f64>>,
}

impl LieAlgebraAction {
    pub fn new(rho: Vec<DMatrix<f64>>, ad: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim_g = rho.len();
        if dim_g == 0 || ad.len() != dim_g {
            return Err(Error::ShapeMismatch("basis size mismatch".into()));
        }
        let dim_v = rho[0].nrows();
        for m in &rho {
            if m.nrows() != dim_v || m.ncols() != dim_v || (m + m.transpose()).norm() > 1e-12 {
                return Err(Error::ShapeMismatch(
                    "representation matrices must be square and skew".into(),
                ));
            }
        }
        for m in &ad {
            if m.nrows() != dim_g || m.ncols() != dim_g || (m + m.transpose()).norm() > 1e-12 {
                return Err(Error::ShapeMismatch(
                    "adjoint matrices must be square and skew".into(),
                ));
            }
        }
        Ok(LieAlgebraAction {
            dim_g,
            dim_v,
            rho,
            ad,
        })
    }

    /// so(3) acting on ℝ³ by the defining representation,
    /// (X_a)_{bc} = −ε_{abc}; the adjoint matrices coincide with the
    /// defining ones.
    pub fn so3() -> Self {
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        let gen: Vec<DMatrix<f64>> = (0..3)
            .map(|a| DMatrix::from_fn(3, 3, |b, c| -eps(a, b, c)))
            .collect();
        LieAlgebraAction::new(gen.clone(), gen).expect("so(3) data is consistent")
    }

    /// so(2) acting on ℝ² (abelian).
    pub fn so2_on_r2() -> Self {
        let mut rot = DMatrix::zeros(2, 2);
        rot[(0, 1)] = -1.0;
        rot[(1, 0)] = 1.0;
        LieAlgebraAction::new(vec![rot], vec![DMatrix::zeros(1, 1)])
            .expect("so(2) data is consistent")
    }

    /// ρ'(Σ c_a X_a).
    pub fn rho_of(&self, coeff: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim_v, self.dim_v);
        for a in 0..self.dim_g {
            m += &self.rho[a] * coeff[a];
        }
        m
    }

    /// ad(Σ c_a X_a).
    pub fn ad_of(&self, coeff: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim_g, self.dim_g);
        for a in 0..self.dim_g {
            m += &self.ad[a] * coeff[a];
        }
        m
    }

    /// Coefficients of [A, B] for coefficient vectors A, B.
    pub fn bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        self.ad_of(a) * b
    }
}

/// Lie-algebra-valued gauge potential A_μ^a(x) with 2-jets per coefficient.
#[derive(Clone)]
pub struct GaugeField {
    pub dim_g: usize,
    f: Arc<dyn Fn(&ChartPoint) -> Vec<Vec<Jet2>> + Send + Sync>,
}

impl std::fmt::Debug for GaugeField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaugeField").field("dim_g", &self.dim_g).finish()
    }
}

impl GaugeField {
    /// `f(x)[mu][a]` is the 2-jet of A_μ^a.
    pub fn new(dim_g: usize, f: Arc<dyn Fn(&ChartPoint) -> Vec<Vec<Jet2>> + Send + Sync>) -> Self {
        GaugeField { dim_g, f }
    }

    pub fn zero(space: &ModelSpace, dim_g: usize) -> Self {
        let n = space.dim();
        GaugeField::new(
            dim_g,
            Arc::new(move |_x| vec![vec![Jet2::constant(0.0, n); dim_g]; n]),
        )
    }

    pub fn eval(&self, x: &ChartPoint) -> Vec<Vec<Jet2>> {
        (self.f)(x)
    }

    pub fn random_polynomial(
        space: &ModelSpace,
        dim_g: usize,
        poly_degree: usize,
        amplitude: f64,
        seed: u64,
    ) -> Self {
        let n = space.dim();
        let base = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::new(dim_g).unwrap(),
            1,
            poly_degree,
            amplitude,
            0.0,
            seed,
        );
        GaugeField::new(
            dim_g,
            Arc::new(move |x: &ChartPoint| {
                let jet = base.jet(x).expect("in-domain point");
                (0..n)
                    .map(|mu| (0..dim_g).map(|a| jet.component_jet(a, mu)).collect())
                    .collect()
            }),
        )
    }

    /// The induced connection on the adjoint bundle: matrices ad(A_μ).
    pub fn adjoint_connection(&self, action: &LieAlgebraAction) -> ConnectionField {
        self.matrix_connection(action.ad.clone(), action.dim_g)
    }

    /// The induced connection on the Higgs bundle: matrices ρ'(A_μ).
    pub fn higgs_connection(&self, action: &LieAlgebraAction) -> ConnectionField {
        self.matrix_connection(action.rho.clone(), action.dim_v)
    }

    fn matrix_connection(&self, basis: Vec<DMatrix<f64>>, rank: usize) -> ConnectionField {
        let f = self.f.clone();
        let dim_g = self.dim_g;
        ConnectionField::new(
            rank,
            Arc::new(move |x: &ChartPoint| {
                let jets = f(x);
                let n = jets.len();
                let combine = |pick: &dyn Fn(&Jet2) -> f64, mu: usize| -> DMatrix<f64> {
                    let mut m = DMatrix::zeros(rank, rank);
                    for a in 0..dim_g {
                        m += &basis[a] * pick(&jets[mu][a]);
                    }
                    m
                };
                let a: Vec<DMatrix<f64>> = (0..n).map(|mu| combine(&|j| j.v, mu)).collect();
                let da: Vec<Vec<DMatrix<f64>>> = (0..n)
                    .map(|d| (0..n).map(|mu| combine(&|j| j.g[d], mu)).collect())
                    .collect();
                ConnJet { a, da }
            }),
        )
    }
}

/// Higgs section u: M → E₀ with 2-jets per component.
#[derive(Clone)]
pub struct HiggsField {
    pub dim_v: usize,
    f: Arc<dyn Fn(&ChartPoint) -> Vec<Jet2> + Send + Sync>,
}

impl std::fmt::Debug for HiggsField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HiggsField").field("dim_v", &self.dim_v).finish()
    }
}

impl HiggsField {
    pub fn new(dim_v: usize, f: Arc<dyn Fn(&ChartPoint) -> Vec<Jet2> + Send + Sync>) -> Self {
        HiggsField { dim_v, f }
    }

    pub fn constant(space: &ModelSpace, value: DVector<f64>) -> Self {
        let n = space.dim();
        let dim_v = value.len();
        HiggsField::new(
            dim_v,
            Arc::new(move |_x| (0..dim_v).map(|v| Jet2::constant(value[v], n)).collect()),
        )
    }

    pub fn zero(space: &ModelSpace, dim_v: usize) -> Self {
        HiggsField::constant(space, DVector::zeros(dim_v))
    }

    pub fn random_polynomial(
        space: &ModelSpace,
        dim_v: usize,
        poly_degree: usize,
        amplitude: f64,
        seed: u64,
    ) -> Self {
        let base = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::new(dim_v).unwrap(),
            0,
            poly_degree,
            amplitude,
            0.0,
            seed,
        );
        HiggsField::new(
            dim_v,
            Arc::new(move |x: &ChartPoint| {
                let jet = base.jet(x).expect("in-domain point");
                (0..dim_v).map(|v| jet.component_jet(v, 0)).collect()
            }),
        )
    }

    pub fn eval(&self, x: &ChartPoint) -> Vec<Jet2> {
        (self.f)(x)
    }

    pub fn values(&self, x: &ChartPoint) -> DVector<f64> {
        let jets = self.eval(x);
        DVector::from_fn(self.dim_v, |v, _| jets[v].v)
    }
}

/// Smooth potential W with its derivative, both in closed form.
#[derive(Clone)]
pub struct Potential {
    w: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    dw: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Potential")
    }
}

impl Potential {
    pub fn new(
        w: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        dw: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    ) -> Self {
        Potential { w, dw }
    }

    /// The Higgs quartic W(s) = ¼(s − 1)².
    pub fn quartic() -> Self {
        Potential::new(
            Arc::new(|s| 0.25 * (s - 1.0) * (s - 1.0)),
            Arc::new(|s| 0.5 * (s - 1.0)),
        )
    }

    pub fn value(&self, s: f64) -> f64 {
        (self.w)(s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        (self.dw)(s)
    }
}

/// The moment-map pairing ⊙: (e₁ ⊙ e₂)^a_I = ⟨ρ'(X_a) e₁, (e₂)_I⟩ for a
/// V-vector e₁ and a V-valued form value e₂.
pub fn odot(action: &LieAlgebraAction, e1: &DVector<f64>, e2: &FormValue) -> Result<FormValue> {
    if e1.len() != action.dim_v || e2.rank != action.dim_v {
        return Err(Error::ShapeMismatch(format!(
            "odot expects V-dimension {}, got e1 of {} and e2 of rank {}",
            action.dim_v,
            e1.len(),
            e2.rank
        )));
    }
    let mut out = FormValue::zeros(e2.n, action.dim_g, e2.degree);
    for a in 0..action.dim_g {
        let action_e1 = &action.rho[a] * e1;
        for c in 0..e2.comps.ncols() {
            let mut s = 0.0;
            for v in 0..action.dim_v {
                s += action_e1[v] * e2.comps[(v, c)];
            }
            out.comps[(a, c)] = s;
        }
    }
    Ok(out)
}

/// Curvature components F^a_{μν} = ∂_μ A^a_ν − ∂_ν A^a_μ + [A_μ, A_ν]^a at
/// a point, over increasing (μ, ν) in the Lie-algebra basis.
pub fn curvature_from_connection(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    x: &ChartPoint,
) -> Result<FormValue> {
    space.check_point(x)?;
    let n = space.dim();
    let jets = gauge.eval(x);
    let vals: Vec<DVector<f64>> = (0..n)
        .map(|mu| DVector::from_fn(gauge.dim_g, |a, _| jets[mu][a].v))
        .collect();
    let mut out = FormValue::zeros(n, gauge.dim_g, 2);
    for (col, idx) in multi_indices(n, 2).iter().enumerate() {
        let (mu, nu) = (idx.entries()[0], idx.entries()[1]);
        let br = action.bracket(&vals[mu], &vals[nu]);
        for a in 0..gauge.dim_g {
            out.comps[(a, col)] = jets[nu][a].g[mu] - jets[mu][a].g[nu] + br[a];
        }
    }
    Ok(out)
}

/// The curvature wrapped as an adjoint-valued 2-form field with exact values
/// and first derivatives (second derivatives are not populated).
pub fn curvature_form(space: &ModelSpace, action: &LieAlgebraAction, gauge: &GaugeField) -> BundleForm {
    let n = space.dim();
    let dim_g = gauge.dim_g;
    let action = action.clone();
    let gauge = gauge.clone();
    let cols = binomial(n, 2);
    BundleForm::new(
        space.clone(),
        BundleSpec { rank: dim_g },
        2,
        Arc::new(move |x: &ChartPoint| {
            let jets = gauge.eval(x);
            let vals: Vec<DVector<f64>> = (0..n)
                .map(|mu| DVector::from_fn(dim_g, |a, _| jets[mu][a].v))
                .collect();
            let grads: Vec<Vec<DVector<f64>>> = (0..n)
                .map(|d| {
                    (0..n)
                        .map(|mu| DVector::from_fn(dim_g, |a, _| jets[mu][a].g[d]))
                        .collect()
                })
                .collect();
            let mut value = DMatrix::zeros(dim_g, cols);
            let mut grad = vec![DMatrix::zeros(dim_g, cols); n];
            for (col, idx) in multi_indices(n, 2).iter().enumerate() {
                let (mu, nu) = (idx.entries()[0], idx.entries()[1]);
                let br = action.bracket(&vals[mu], &vals[nu]);
                for a in 0..dim_g {
                    value[(a, col)] = jets[nu][a].g[mu] - jets[mu][a].g[nu] + br[a];
                }
                for d in 0..n {
                    let br_d = action.bracket(&grads[d][mu], &vals[nu])
                        + action.bracket(&vals[mu], &grads[d][nu]);
                    for a in 0..dim_g {
                        grad[d][(a, col)] =
                            jets[nu][a].h[(d, mu)] - jets[mu][a].h[(d, nu)] + br_d[a];
                    }
                }
            }
            FormJet {
                n,
                rank: dim_g,
                degree: 2,
                value,
                grad,
                hess: None,
            }
        }),
    )
}

/// Coordinate components of d^{∇⁰}u at a point: (d^{∇⁰}u)^v_μ = ∂_μ u^v +
/// (ρ'(A_μ) u)^v.
pub fn higgs_derivative_value(
    action: &LieAlgebraAction,
    gauge_jets: &[Vec<Jet2>],
    u_jets: &[Jet2],
    n: usize,
) -> FormValue {
    let dim_v = action.dim_v;
    let u_vals = DVector::from_fn(dim_v, |v, _| u_jets[v].v);
    let mut out = FormValue::zeros(n, dim_v, 1);
    for mu in 0..n {
        let coeff = DVector::from_fn(action.dim_g, |a, _| gauge_jets[mu][a].v);
        let rho_u = action.rho_of(&coeff) * &u_vals;
        for v in 0..dim_v {
            out.comps[(v, mu)] = u_jets[v].g[mu] + rho_u[v];
        }
    }
    out
}

/// d^{∇⁰}u wrapped as a V-valued 1-form field with exact values and first
/// derivatives.
pub fn higgs_derivative_form(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    u: &HiggsField,
) -> BundleForm {
    let n = space.dim();
    let dim_v = action.dim_v;
    let action = action.clone();
    let gauge = gauge.clone();
    let u = u.clone();
    BundleForm::new(
        space.clone(),
        BundleSpec { rank: dim_v },
        1,
        Arc::new(move |x: &ChartPoint| {
            let gj = gauge.eval(x);
            let uj = u.eval(x);
            let u_vals = DVector::from_fn(dim_v, |v, _| uj[v].v);
            let value = higgs_derivative_value(&action, &gj, &uj, n).comps;
            let mut grad = vec![DMatrix::zeros(dim_v, n); n];
            for d in 0..n {
                let du_d = DVector::from_fn(dim_v, |v, _| uj[v].g[d]);
                for mu in 0..n {
                    let coeff = DVector::from_fn(action.dim_g, |a, _| gj[mu][a].v);
                    let dcoeff = DVector::from_fn(action.dim_g, |a, _| gj[mu][a].g[d]);
                    let term = action.rho_of(&dcoeff) * &u_vals + action.rho_of(&coeff) * &du_d;
                    for v in 0..dim_v {
                        grad[d][(v, mu)] = uj[v].h[(d, mu)] + term[v];
                    }
                }
            }
            FormJet {
                n,
                rank: dim_v,
                degree: 1,
                value,
                grad,
                hess: None,
            }
        }),
    )
}

/// Yang-Mills-Higgs energy density ẽ = ½|F|² + ½|d^{∇⁰}u|² + W(|u|²).
pub fn ymh_density(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    f_form: &BundleForm,
    u: &HiggsField,
    w: &Potential,
    x: &ChartPoint,
) -> Result<f64> {
    let fv = f_form.value(x)?;
    let gj = gauge.eval(x);
    let uj = u.eval(x);
    let du = higgs_derivative_value(action, &gj, &uj, space.dim());
    let u_sq: f64 = uj.iter().map(|j| j.v * j.v).sum();
    Ok(0.5 * crate::forms::norm_sq_frame(space, x, &fv)
        + 0.5 * crate::forms::norm_sq_frame(space, x, &du)
        + w.value(u_sq))
}

/// Coordinate components of the Yang-Mills-Higgs tensor T̃ at a point.
pub fn ymh_stress(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    f_form: &BundleForm,
    u: &HiggsField,
    w: &Potential,
    x: &ChartPoint,
) -> Result<DMatrix<f64>> {
    Ok(ymh_stress_jet(space, action, gauge, f_form, u, w, x)?.value)
}

/// T̃ with coordinate partials by forward-mode differentiation.
pub fn ymh_stress_jet(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    f_form: &BundleForm,
    u: &HiggsField,
    w: &Potential,
    x: &ChartPoint,
) -> Result<TensorJet> {
    space.check_point(x)?;
    let n = space.dim();
    let dim_v = action.dim_v;
    let fj = f_form.jet(x)?;
    let gj = gauge.eval(x);
    let uj = u.eval(x);
    let fd = space.frame_factor_jet(x).dual();

    // hatted curvature components (2-form): F̂ = f²·F
    let f2 = &fd * &fd;
    let cols_f = fj.value.ncols();
    let mut fhat = Vec::with_capacity(fj.rank * cols_f);
    for a in 0..fj.rank {
        for c in 0..cols_f {
            fhat.push(&fj.component_dual(a, c) * &f2);
        }
    }
    // frame components of ∇⁰u: f·(∂_μ u + ρ(A_μ) u), as duals
    let u_vals = DVector::from_fn(dim_v, |v, _| uj[v].v);
    let mut du_hat = vec![Dual::constant(0.0, n); dim_v * n];
    for mu in 0..n {
        let coeff = DVector::from_fn(action.dim_g, |a, _| gj[mu][a].v);
        let rho = action.rho_of(&coeff);
        for v in 0..dim_v {
            // value and gradient of (∂_μ u + ρ(A_μ)u)^v
            let mut val = uj[v].g[mu];
            let mut grad = DVector::zeros(n);
            for d in 0..n {
                grad[d] = uj[v].h[(d, mu)];
            }
            for vv in 0..dim_v {
                val += rho[(v, vv)] * u_vals[vv];
                for d in 0..n {
                    let dcoeff = DVector::from_fn(action.dim_g, |a, _| gj[mu][a].g[d]);
                    grad[d] += (action.rho_of(&dcoeff))[(v, vv)] * u_vals[vv]
                        + rho[(v, vv)] * uj[vv].g[d];
                }
            }
            du_hat[v * n + mu] = &Dual { v: val, g: grad } * &fd;
        }
    }
    // energy density as a dual
    let mut f_sq = Dual::constant(0.0, n);
    for h in &fhat {
        f_sq = f_sq + h * h;
    }
    let mut du_sq = Dual::constant(0.0, n);
    for h in &du_hat {
        du_sq = du_sq + h * h;
    }
    let mut u_sq = Dual::constant(0.0, n);
    for j in uj.iter() {
        let d = j.dual();
        u_sq = u_sq + &d * &d;
    }
    let w_dual = u_sq.chain(w.value(u_sq.v), w.derivative(u_sq.v));
    let e = f_sq.scale(0.5) + du_sq.scale(0.5) + w_dual;

    // interior products of F̂ along coordinate directions
    let maps = interior_maps(n, 2);
    let cols_out = binomial(n, 1);
    let zero = Dual::constant(0.0, n);
    let mut iotas: Vec<Vec<Dual>> = vec![vec![zero; fj.rank * cols_out]; n];
    for i in 0..n {
        for &(out, src, sign) in &maps[i] {
            for a in 0..fj.rank {
                let entry = &mut iotas[i][a * cols_out + out];
                *entry = &*entry + &fhat[a * cols_f + src].scale(sign);
            }
        }
    }
    let c2 = (&fd * &fd).recip();
    let mut value = DMatrix::zeros(n, n);
    let mut grad = vec![DMatrix::zeros(n, n); n];
    for i in 0..n {
        for j in i..n {
            let mut s = Dual::constant(0.0, n);
            for idx in 0..fj.rank * cols_out {
                s = s + &iotas[i][idx] * &iotas[j][idx];
            }
            for v in 0..dim_v {
                s = s + &du_hat[v * n + i] * &du_hat[v * n + j];
            }
            let mut t = s;
            if i == j {
                t = t - e.clone();
            }
            t = &t * &c2;
            value[(i, j)] = t.v;
            value[(j, i)] = t.v;
            for d in 0..n {
                grad[d][(i, j)] = t.g[d];
                grad[d][(j, i)] = t.g[d];
            }
        }
    }
    Ok(TensorJet { value, grad })
}

/// Residual norms of the two Yang-Mills-Higgs equations at a point:
/// (|δ^∇F + u ⊙ d^{∇⁰}u|, |δ^{∇⁰}d^{∇⁰}u + 2 W'(|u|²) u|).
pub fn ymhe_residual(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    f_form: &BundleForm,
    u: &HiggsField,
    w: &Potential,
    x: &ChartPoint,
) -> Result<(f64, f64)> {
    let (eq1, eq2) = ymhe_equations(space, action, gauge, f_form, u, w, x)?;
    let metric = space.metric_jet(x)?;
    let n1 = inner_product(&metric.ginv, &eq1, &eq1)?.max(0.0).sqrt();
    let n2 = eq2.norm();
    Ok((n1, n2))
}

/// The two Yang-Mills-Higgs left-hand sides at a point: the E-valued 1-form
/// δ^∇F + u ⊙ d^{∇⁰}u and the V-vector δ^{∇⁰}d^{∇⁰}u + 2W'(|u|²)u.
pub fn ymhe_equations(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    f_form: &BundleForm,
    u: &HiggsField,
    w: &Potential,
    x: &ChartPoint,
) -> Result<(FormValue, DVector<f64>)> {
    let adj_conn = gauge.adjoint_connection(action);
    let higgs_conn = gauge.higgs_connection(action);
    let delta_f = codifferential(space, &adj_conn, f_form, x)?;
    let gj = gauge.eval(x);
    let uj = u.eval(x);
    let du = higgs_derivative_value(action, &gj, &uj, space.dim());
    let u_vals = DVector::from_fn(action.dim_v, |v, _| uj[v].v);
    let coupling = odot(action, &u_vals, &du)?;
    let eq1 = FormValue {
        n: delta_f.n,
        rank: delta_f.rank,
        degree: 1,
        comps: &delta_f.comps + &coupling.comps,
    };

    let du_field = higgs_derivative_form(space, action, gauge, u);
    let dd = codifferential(space, &higgs_conn, &du_field, x)?;
    let u_sq: f64 = u_vals.iter().map(|v| v * v).sum();
    let eq2 = DVector::from_fn(action.dim_v, |v, _| {
        dd.comps[(v, 0)] + 2.0 * w.derivative(u_sq) * u_vals[v]
    });
    Ok((eq1, eq2))
}

/// div T̃ along both routes: the first-order identity
/// (div T̃)_μ = −(⟨eq₁, ι_{∂_μ}F⟩ + ⟨eq₂, (d^{∇⁰}u)_μ⟩)
/// and the direct covariant divergence of the tensor jet.
pub fn ymh_div_stress(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    f_form: &BundleForm,
    u: &HiggsField,
    w: &Potential,
    x: &ChartPoint,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = space.dim();
    let metric = space.metric_jet(x)?;
    let (eq1, eq2) = ymhe_equations(space, action, gauge, f_form, u, w, x)?;
    let fv = f_form.value(x)?;
    let gj = gauge.eval(x);
    let uj = u.eval(x);
    let du = higgs_derivative_value(action, &gj, &uj, n);
    let mut identity = DVector::zeros(n);
    for mu in 0..n {
        let mut e = DVector::zeros(n);
        e[mu] = 1.0;
        let iota_f = interior_product(&e, &fv)?;
        let mut pair2 = 0.0;
        for v in 0..action.dim_v {
            pair2 += eq2[v] * du.comps[(v, mu)];
        }
        identity[mu] = -(inner_product(&metric.ginv, &eq1, &iota_f)? + pair2);
    }
    let tj = ymh_stress_jet(space, action, gauge, f_form, u, w, x)?;
    let gamma = space.christoffel(x)?;
    let direct = covariant_divergence(&tj, &gamma, &metric.ginv);
    Ok((identity, direct))
}

/// The trace identity's right-hand side, (4−n)·ẽ − (|d^{∇⁰}u|² + 4W(|u|²)),
/// for cross-checking tr_g T̃.
pub fn ymh_trace_expected(
    space: &ModelSpace,
    action: &LieAlgebraAction,
    gauge: &GaugeField,
    f_form: &BundleForm,
    u: &HiggsField,
    w: &Potential,
    x: &ChartPoint,
) -> Result<f64> {
    let n = space.dim() as f64;
    let e = ymh_density(space, action, gauge, f_form, u, w, x)?;
    let gj = gauge.eval(x);
    let uj = u.eval(x);
    let du = higgs_derivative_value(action, &gj, &uj, space.dim());
    let du_sq = crate::forms::norm_sq_frame(space, x, &du);
    let u_sq: f64 = uj.iter().map(|j| j.v * j.v).sum();
    Ok((4.0 - n) * e - (du_sq + 4.0 * w.value(u_sq)))
}

/// Constant abelian curvature example data: A = x¹·dx² over so(2) gives
/// F = dx¹∧dx².
pub fn abelian_constant_curvature(space: &ModelSpace) -> (LieAlgebraAction, GaugeField, BundleForm) {
    let action = LieAlgebraAction::so2_on_r2();
    let n = space.dim();
    let gauge = GaugeField::new(
        1,
        Arc::new(move |x: &ChartPoint| {
            let vars = Jet2::vars(&x.0);
            let mut jets = vec![vec![Jet2::constant(0.0, n)]; n];
            jets[1][0] = vars[0].clone();
            jets
        }),
    );
    let mut comps = DMatrix::zeros(1, binomial(n, 2));
    comps[(0, index_rank(n, &MultiIndex::new(vec![0, 1]).unwrap()))] = 1.0;
    let f_form = BundleForm::constant(space.clone(), BundleSpec { rank: 1 }, 2, comps);
    (action, gauge, f_form)
}

//! Differential operators on bundle-valued forms.
//!
//! The covariant derivative couples the Levi-Civita connection on T*M with
//! the bundle connection A; the exterior covariant derivative d^∇ and the
//! codifferential δ^∇ = −Σ ι_{ε_i} ∇_{ε_i} (orthonormal frame) are built on
//! top of it. The p-weighted codifferential δ^∇(|ψ|^{p−2}ψ) expands by the
//! product rule with the weight's gradient taken from exact jets.

use crate::error::{Error, Result};
use crate::forms::{
    fd_form_jet, index_rank, inner_product, interior_product, multi_indices, norm_sq_dual,
    sort_signed, BundleForm, ConnJet, ConnectionField, FormJet, FormValue,
};
use crate::integrate::gauss_legendre;
use crate::jet::Dual;
use crate::manifold::{ChartPoint, ModelSpace};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Covariant derivative of ψ along the coordinate direction `dir`:
/// (∇_dir ψ)^a_J = ∂_dir ψ^a_J + (A_dir)^a_b ψ^b_J − Σ_s Γ^l_{dir,j_s} ψ^a_{J[j_s→l]}
/// with reordering signs on the replaced index.
pub fn covariant_derivative(
    space: &ModelSpace,
    conn: &ConnectionField,
    psi: &BundleForm,
    x: &ChartPoint,
    dir: usize,
) -> Result<FormValue> {
    let jet = psi.jet(x)?;
    let gamma = space.christoffel(x)?;
    let cj = conn.eval(x);
    Ok(covariant_derivative_at(&jet, &gamma, &cj, dir))
}

/// Covariant derivative from precomputed point data (hot-path form).
pub fn covariant_derivative_at(
    psi: &FormJet,
    gamma: &[DMatrix<f64>],
    conn: &ConnJet,
    dir: usize,
) -> FormValue {
    let n = psi.n;
    let k = psi.degree;
    let rank = psi.rank;
    let indices = multi_indices(n, k);
    let mut out = FormValue::zeros(n, rank, k);
    // ∂ and A terms
    for (col, _) in indices.iter().enumerate() {
        for a in 0..rank {
            let mut v = psi.grad[dir][(a, col)];
            for b in 0..rank {
                v += conn.a[dir][(a, b)] * psi.value[(b, col)];
            }
            out.comps[(a, col)] = v;
        }
    }
    if k == 0 {
        return out;
    }
    // Levi-Civita part on the form slots
    for (col, idx) in indices.iter().enumerate() {
        let entries = idx.entries();
        for (s, &js) in entries.iter().enumerate() {
            for l in 0..n {
                let coeff = gamma[l][(dir, js)];
                if coeff == 0.0 {
                    continue;
                }
                let mut replaced = entries.to_vec();
                replaced[s] = l;
                if let Some((sign, sorted)) = sort_signed(&replaced) {
                    let src = index_rank(n, &sorted);
                    for a in 0..rank {
                        out.comps[(a, col)] -= coeff * sign * psi.value[(a, src)];
                    }
                }
            }
        }
    }
    out
}

/// Exterior covariant derivative d^∇ψ = Σ_μ dx^μ ∧ ∇_{∂_μ}ψ at a point,
/// assembled as (d^∇ψ)_K = Σ_t (−1)^t (∇_{K_t}ψ)_{K∖K_t}.
pub fn exterior_covariant_derivative(
    space: &ModelSpace,
    conn: &ConnectionField,
    psi: &BundleForm,
    x: &ChartPoint,
) -> Result<FormValue> {
    let jet = psi.jet(x)?;
    let gamma = space.christoffel(x)?;
    let cj = conn.eval(x);
    exterior_derivative_at(space, &jet, &gamma, &cj)
}

/// d^∇ from precomputed point data.
pub fn exterior_derivative_at(
    space: &ModelSpace,
    psi: &FormJet,
    gamma: &[DMatrix<f64>],
    conn: &ConnJet,
) -> Result<FormValue> {
    let n = space.dim();
    let k = psi.degree;
    if k >= n {
        return Err(Error::DegreeOverflow { k1: k, k2: 1, n });
    }
    let nablas: Vec<FormValue> = (0..n)
        .map(|dir| covariant_derivative_at(psi, gamma, conn, dir))
        .collect();
    let out_indices = multi_indices(n, k + 1);
    let mut out = FormValue::zeros(n, psi.rank, k + 1);
    for (col, idx) in out_indices.iter().enumerate() {
        let entries = idx.entries();
        for (t, &mu) in entries.iter().enumerate() {
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            let mut rest = entries.to_vec();
            rest.remove(t);
            let src = index_rank(n, &crate::forms::MultiIndex::new(rest).expect("increasing"));
            for a in 0..psi.rank {
                out.comps[(a, col)] += sign * nablas[mu].comps[(a, src)];
            }
        }
    }
    Ok(out)
}

/// Codifferential δ^∇ψ = −Σ_i ι_{ε_i} ∇_{ε_i} ψ in the model space's
/// diagonal orthonormal frame ε_i = f·∂_i, i.e. −f² Σ_μ ι_{∂_μ} ∇_{∂_μ} ψ.
pub fn codifferential(
    space: &ModelSpace,
    conn: &ConnectionField,
    psi: &BundleForm,
    x: &ChartPoint,
) -> Result<FormValue> {
    let jet = psi.jet(x)?;
    let gamma = space.christoffel(x)?;
    let cj = conn.eval(x);
    codifferential_at(space, x, &jet, &gamma, &cj)
}

/// δ^∇ from precomputed point data.
pub fn codifferential_at(
    space: &ModelSpace,
    x: &ChartPoint,
    psi: &FormJet,
    gamma: &[DMatrix<f64>],
    conn: &ConnJet,
) -> Result<FormValue> {
    let n = space.dim();
    let k = psi.degree;
    if k == 0 {
        return Err(Error::ZeroDegree);
    }
    let f2 = space.frame_factor(x).powi(2);
    let mut out = FormValue::zeros(n, psi.rank, k - 1);
    for mu in 0..n {
        let nabla = covariant_derivative_at(psi, gamma, conn, mu);
        let mut e = DVector::zeros(n);
        e[mu] = 1.0;
        let contracted = interior_product(&e, &nabla)?;
        out.comps -= contracted.comps * f2;
    }
    Ok(out)
}

/// p-weighted codifferential δ^∇(|ψ|^{p−2}ψ), expanded by the product rule
/// as |ψ|^{p−2}·δ^∇ψ − ι_{grad |ψ|^{p−2}} ψ, with the weight's gradient from
/// the exact jet of |ψ|².
///
/// At zeros of ψ the weight is singular for p < 2 (hard error) and the
/// result is the zero form for p ≥ 2.
pub fn p_codifferential(
    space: &ModelSpace,
    conn: &ConnectionField,
    psi: &BundleForm,
    x: &ChartPoint,
    p: f64,
) -> Result<FormValue> {
    let jet = psi.jet(x)?;
    let gamma = space.christoffel(x)?;
    let cj = conn.eval(x);
    p_codifferential_at(space, x, &jet, &gamma, &cj, p)
}

/// δ^∇(|ψ|^{p−2}ψ) from precomputed point data.
pub fn p_codifferential_at(
    space: &ModelSpace,
    x: &ChartPoint,
    psi: &FormJet,
    gamma: &[DMatrix<f64>],
    conn: &ConnJet,
    p: f64,
) -> Result<FormValue> {
    if !(p > 1.0) {
        return Err(Error::InvalidConfig(format!("p must exceed 1, got {p}")));
    }
    let n = space.dim();
    let k = psi.degree;
    if k == 0 {
        return Err(Error::ZeroDegree);
    }
    let delta = codifferential_at(space, x, psi, gamma, conn)?;
    if (p - 2.0).abs() < 1e-15 {
        return Ok(delta);
    }
    let q = norm_sq_dual(space, x, psi); // 1-jet of |ψ|²
    if q.v <= 0.0 {
        return if p >= 2.0 {
            Ok(FormValue::zeros(n, psi.rank, k - 1))
        } else {
            Err(Error::SingularWeight { p })
        };
    }
    let w = q.powf(0.5 * (p - 2.0)); // |ψ|^{p−2} with gradient
    // metric gradient of the weight: G^μ = g^{μν} ∂_ν w = f² ∂_μ w
    let f2 = space.frame_factor(x).powi(2);
    let grad_w = &w.g * f2;
    let correction = interior_product(&grad_w, &psi.value_form())?;
    Ok(FormValue {
        n,
        rank: psi.rank,
        degree: k - 1,
        comps: delta.comps * w.v - correction.comps,
    })
}

/// The pointwise inhomogeneity q_ψ = |δ^∇(|ψ|^{p−2}ψ)| + |ψ|^{p−2}·|d^∇ψ|.
pub fn inhomogeneity(
    space: &ModelSpace,
    conn: &ConnectionField,
    psi: &BundleForm,
    x: &ChartPoint,
    p: f64,
) -> Result<f64> {
    let jet = psi.jet(x)?;
    let gamma = space.christoffel(x)?;
    let cj = conn.eval(x);
    let metric = space.metric_jet(x)?;
    let dp = p_codifferential_at(space, x, &jet, &gamma, &cj, p)?;
    let d = exterior_derivative_at(space, &jet, &gamma, &cj)?;
    let q = norm_sq_dual(space, x, &jet).v;
    let w = if (p - 2.0).abs() < 1e-15 { 1.0 } else { q.powf(0.5 * (p - 2.0)) };
    Ok(inner_product(&metric.ginv, &dp, &dp)?.max(0.0).sqrt()
        + w * inner_product(&metric.ginv, &d, &d)?.max(0.0).sqrt())
}

/// Wrap d^∇ψ as a field of its own. Values and first derivatives are exact
/// (from ψ's 2-jet and the analytic Γ- and A-jets); second derivatives are
/// not populated.
pub fn exterior_derivative_form(
    space: &ModelSpace,
    conn: &ConnectionField,
    psi: &BundleForm,
) -> BundleForm {
    let space2 = space.clone();
    let conn2 = conn.clone();
    let psi2 = psi.clone();
    let n = space.dim();
    let rank = psi.bundle.rank;
    let degree = psi.degree + 1;
    BundleForm::new(
        space.clone(),
        psi.bundle,
        degree,
        Arc::new(move |x: &ChartPoint| {
            let jet = psi2.jet(x).expect("in-domain point");
            let (gamma, dgamma) = space2.christoffel_jet(x).expect("in-domain point");
            let cj = conn2.eval(x);
            let value = exterior_derivative_at(&space2, &jet, &gamma, &cj)
                .expect("degree < n")
                .comps;
            // ∂_d (d^∇ψ): differentiate the assembly through ψ's 2-jet,
            // ∂Γ and ∂A.
            let hess = jet.hess.as_ref().expect("supplied fields carry 2-jets");
            let mut grad = Vec::with_capacity(n);
            for d in 0..n {
                let shifted = FormJet {
                    n,
                    rank,
                    degree: jet.degree,
                    value: jet.grad[d].clone(),
                    grad: (0..n).map(|e| hess[d * n + e].clone()).collect(),
                    hess: None,
                };
                let term1 = exterior_derivative_at(&space2, &shifted, &gamma, &cj)
                    .expect("degree < n")
                    .comps;
                // variation of Γ and A at fixed ψ-jet
                let zero_jet = FormJet {
                    n,
                    rank,
                    degree: jet.degree,
                    value: jet.value.clone(),
                    grad: vec![DMatrix::zeros(rank, jet.value.ncols()); n],
                    hess: None,
                };
                let dconn = ConnJet {
                    a: cj.da[d].clone(),
                    da: vec![vec![DMatrix::zeros(rank, rank); n]; n],
                };
                let term2 = exterior_derivative_at(&space2, &zero_jet, &dgamma[d], &dconn)
                    .expect("degree < n")
                    .comps;
                grad.push(term1 + term2);
            }
            FormJet {
                n,
                rank,
                degree,
                value,
                grad,
                hess: None,
            }
        }),
    )
}

/// A coordinate box for compactly supported integration-by-parts checks.
#[derive(Debug, Clone)]
pub struct BoxSpec {
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
    pub nodes_per_axis: usize,
}

impl BoxSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, nodes_per_axis: usize) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::InvalidConfig("box bounds must satisfy lo < hi".into()));
        }
        if nodes_per_axis < 4 {
            return Err(Error::InvalidConfig("box quadrature needs >= 4 nodes".into()));
        }
        Ok(BoxSpec {
            lo: DVector::from_vec(lo),
            hi: DVector::from_vec(hi),
            nodes_per_axis,
        })
    }
}

/// L² adjointness residual |∫⟨d^∇ψ₁, ψ₂⟩ dvol − ∫⟨ψ₁, δ^∇ψ₂⟩ dvol| over a
/// coordinate box, by tensor-product Gauss-Legendre quadrature.
///
/// Both fields must be compactly supported inside the box (bump-localised);
/// a boundary sample check rejects leaking support.
pub fn adjointness_residual(
    space: &ModelSpace,
    conn: &ConnectionField,
    psi1: &BundleForm,
    psi2: &BundleForm,
    box_spec: &BoxSpec,
) -> Result<f64> {
    let n = space.dim();
    if psi1.degree + 1 != psi2.degree {
        return Err(Error::ShapeMismatch(format!(
            "adjointness pairs degree k−1 with k, got {} and {}",
            psi1.degree, psi2.degree
        )));
    }

    // Boundary leak check: sample each face on a coarse grid.
    let face_grid = 6usize;
    let mut interior_scale = 0.0f64;
    let mut boundary_max = 0.0f64;
    let mut probe = |x: &ChartPoint, boundary: bool| -> Result<()> {
        if !space.contains(x) {
            return Ok(()); // outside the chart, field is irrelevant there
        }
        let m = psi1.value(x)?.comp_norm() + psi2.value(x)?.comp_norm();
        if boundary {
            boundary_max = boundary_max.max(m);
        } else {
            interior_scale = interior_scale.max(m);
        }
        Ok(())
    };
    let grid_point = |t: &[usize], axis: usize, side: f64| -> ChartPoint {
        let mut c = DVector::zeros(n);
        let mut ti = 0;
        for i in 0..n {
            if i == axis {
                c[i] = side;
            } else {
                let frac = (t[ti] as f64 + 0.5) / face_grid as f64;
                c[i] = box_spec.lo[i] + frac * (box_spec.hi[i] - box_spec.lo[i]);
                ti += 1;
            }
        }
        ChartPoint(c)
    };
    // interior scale from the box centre region
    for axis in 0..n {
        let mut t = vec![0usize; n - 1];
        loop {
            probe(&grid_point(&t, axis, box_spec.lo[axis]), true)?;
            probe(&grid_point(&t, axis, box_spec.hi[axis]), true)?;
            // advance odometer
            let mut i = 0;
            loop {
                if i == t.len() {
                    break;
                }
                t[i] += 1;
                if t[i] < face_grid {
                    break;
                }
                t[i] = 0;
                i += 1;
            }
            if t.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    let centre = ChartPoint((&box_spec.lo + &box_spec.hi) * 0.5);
    probe(&centre, false)?;
    if boundary_max > 1e-10 * (1.0 + interior_scale) {
        return Err(Error::SupportLeak {
            magnitude: boundary_max,
        });
    }

    // Tensor-product Gauss-Legendre quadrature.
    let (nodes, weights) = gauss_legendre(box_spec.nodes_per_axis);
    let mut axis_nodes = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (box_spec.lo[i], box_spec.hi[i]);
        let scaled: Vec<(f64, f64)> = nodes
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| (0.5 * (a + b) + 0.5 * (b - a) * t, 0.5 * (b - a) * w))
            .collect();
        axis_nodes.push(scaled);
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let mut c = DVector::zeros(n);
        let mut w = 1.0;
        for i in 0..n {
            let (x, wx) = axis_nodes[i][idx[i]];
            c[i] = x;
            w *= wx;
        }
        let x = ChartPoint(c);
        if space.contains(&x) {
            let metric = space.metric_jet(&x)?;
            let d1 = exterior_covariant_derivative(space, conn, psi1, &x)?;
            let v2 = psi2.value(&x)?;
            let v1 = psi1.value(&x)?;
            let del2 = codifferential(space, conn, psi2, &x)?;
            lhs += w * metric.sqrt_det * inner_product(&metric.ginv, &d1, &v2)?;
            rhs += w * metric.sqrt_det * inner_product(&metric.ginv, &v1, &del2)?;
        }
        // advance odometer
        let mut i = 0;
        loop {
            if i == n {
                return Ok((lhs - rhs).abs());
            }
            idx[i] += 1;
            if idx[i] < box_spec.nodes_per_axis {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Curvature-style FD completion: wrap a value-only derived form with
/// finite-difference jets (used by tests that need jets of operator
/// outputs).
pub fn form_from_values(
    space: &ModelSpace,
    rank: usize,
    degree: usize,
    step_scale: f64,
    f: Arc<dyn Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync>,
) -> BundleForm {
    let n = space.dim();
    BundleForm::new(
        space.clone(),
        crate::forms::BundleSpec { rank },
        degree,
        Arc::new(move |x: &ChartPoint| fd_form_jet(n, rank, degree, step_scale, &*f, x)),
    )
}

/// Smooth bump ω(x) = exp(1 − 1/(1 − s)) for s = Σ((x_i−c_i)/w_i)² < 1,
/// zero outside; equals 1 at the centre. All derivatives vanish at the
/// support boundary.
pub fn bump_jet(center: &[f64], widths: &[f64], vars: &[crate::jet::Jet2]) -> crate::jet::Jet2 {
    let n = vars.len();
    let mut s = crate::jet::Jet2::constant(0.0, n);
    for i in 0..n {
        let t = vars[i].add_const(-center[i]).scale(1.0 / widths[i]);
        s = s + &t * &t;
    }
    if s.v >= 1.0 {
        return crate::jet::Jet2::constant(0.0, n);
    }
    let one = crate::jet::Jet2::constant(1.0, n);
    ((&one - &(&one - &s).recip()).exp()).clone()
}

/// 1-jet of |ψ|² exposed for stress-tensor construction.
pub fn weight_dual(space: &ModelSpace, x: &ChartPoint, psi: &FormJet, p: f64) -> Result<Dual> {
    let q = norm_sq_dual(space, x, psi);
    if q.v <= 0.0 {
        if p >= 2.0 {
            return Ok(Dual::constant(0.0, space.dim()));
        }
        return Err(Error::SingularWeight { p });
    }
    Ok(q.powf(0.5 * (p - 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{BundleSpec, MultiIndex};
    use crate::jet::Jet2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat(n: usize) -> ModelSpace {
        ModelSpace::euclidean(n).unwrap()
    }

    #[test]
    fn covariant_derivative_flat_cases() {
        let space = flat(3);
        let conn = ConnectionField::trivial(3, 1);
        // constant dx¹: ∇ψ = 0
        let dx1 = BundleForm::coordinate_form(space.clone(), &[0]).unwrap();
        let x = ChartPoint::new(vec![0.2, 0.4, -0.1]);
        for dir in 0..3 {
            let d = covariant_derivative(&space, &conn, &dx1, &x, dir).unwrap();
            assert_eq!(d.comp_norm(), 0.0);
        }
        // ψ = x² dx¹ (second coordinate times dx¹): ∇_{∂₂}ψ = dx¹
        let psi = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            |vars| vec![vec![vars[1].clone(), Jet2::constant(0.0, 3), Jet2::constant(0.0, 3)]],
        );
        let d = covariant_derivative(&space, &conn, &psi, &x, 1).unwrap();
        assert_eq!(d.comps[(0, 0)], 1.0);
        assert_eq!(d.comps[(0, 1)], 0.0);
    }

    #[test]
    fn covariant_derivative_hyperbolic_matches_finite_differences() {
        // ψ = dy/y on the half-plane; compare the formula against central
        // differences of the parallel-transport-free components combined
        // with the Christoffel action, evaluated through exact jets.
        let space = ModelSpace::hyperbolic(2, 1.0).unwrap();
        let conn = ConnectionField::trivial(2, 1);
        let psi = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            |vars| vec![vec![Jet2::constant(0.0, 2), vars[1].recip()]],
        );
        let x = ChartPoint::new(vec![0.3, 1.4]);
        for dir in 0..2 {
            let ours = covariant_derivative(&space, &conn, &psi, &x, dir).unwrap();
            // finite-difference oracle: ∂ψ_J via FD, Γ-terms exact
            let h = 1e-5;
            let mut fd = DMatrix::zeros(1, 2);
            for col in 0..2 {
                let f = |t: f64| {
                    let mut q = x.0.clone();
                    q[dir] = t;
                    psi.value(&ChartPoint(q)).unwrap().comps[(0, col)]
                };
                fd[(0, col)] = crate::jet::central_diff(f, x.0[dir], h);
            }
            let gamma = space.christoffel(&x).unwrap();
            let mut expect = fd;
            for col in 0..2 {
                for l in 0..2 {
                    expect[(0, col)] -= gamma[l][(dir, col)] * psi.value(&x).unwrap().comps[(0, l)];
                }
            }
            assert!(
                (ours.comps - expect).norm() < 1e-8,
                "direction {dir} mismatch"
            );
        }
    }

    #[test]
    fn exterior_derivative_classical() {
        // ψ = x² dx¹ on ℝ³ → dψ = dx²∧dx¹ = −dx¹∧dx²
        let space = flat(3);
        let conn = ConnectionField::trivial(3, 1);
        let psi = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            |vars| vec![vec![vars[1].clone(), Jet2::constant(0.0, 3), Jet2::constant(0.0, 3)]],
        );
        let x = ChartPoint::new(vec![0.7, -0.4, 0.9]);
        let d = exterior_covariant_derivative(&space, &conn, &psi, &x).unwrap();
        let idx01 = MultiIndex::new(vec![0, 1]).unwrap();
        assert_eq!(d.component(0, &idx01), -1.0);
        let idx02 = MultiIndex::new(vec![0, 2]).unwrap();
        assert_eq!(d.component(0, &idx02), 0.0);
    }

    #[test]
    fn d_squared_vanishes_on_scalar_forms() {
        let space = flat(3);
        let conn = ConnectionField::trivial(3, 1);
        let psi = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::trivial(),
            1,
            3,
            0.8,
            0.0,
            21,
        );
        let dpsi = exterior_derivative_form(&space, &conn, &psi);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = ChartPoint::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let dd = exterior_covariant_derivative(&space, &conn, &dpsi, &x).unwrap();
            assert!(dd.comp_norm() < 1e-12, "d∘d = {:e}", dd.comp_norm());
        }
    }

    #[test]
    fn codifferential_flat_divergence() {
        let space = flat(3);
        let conn = ConnectionField::trivial(3, 1);
        // ψ = x¹ dx¹ → δψ = −1
        let psi = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            |vars| vec![vec![vars[0].clone(), Jet2::constant(0.0, 3), Jet2::constant(0.0, 3)]],
        );
        let x = ChartPoint::new(vec![0.5, 0.1, 0.2]);
        let d = codifferential(&space, &conn, &psi, &x).unwrap();
        assert!((d.comps[(0, 0)] + 1.0).abs() < 1e-14);

        let dx1 = BundleForm::coordinate_form(space.clone(), &[0]).unwrap();
        let d = codifferential(&space, &conn, &dx1, &x).unwrap();
        assert_eq!(d.comps[(0, 0)], 0.0);
    }

    #[test]
    fn hyperbolic_harmonic_function() {
        // u = y^{n−1} on ℍⁿ is harmonic: δ(du) = 0. Oracle: the closed
        // form δ(du) = −κ²·a(a−n+1)·y^a for u = y^a.
        let n = 3;
        let space = ModelSpace::hyperbolic(n, 1.0).unwrap();
        let conn = ConnectionField::trivial(n, 1);
        let a = (n - 1) as f64;
        let du = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            move |vars| {
                let nvars = vars.len();
                let mut row = vec![Jet2::constant(0.0, nvars); nvars];
                row[nvars - 1] = vars[nvars - 1].powf(a - 1.0).scale(a);
                vec![row]
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let mut c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            c[n - 1] = rng.gen_range(0.5..2.0);
            let x = ChartPoint::new(c);
            let d = codifferential(&space, &conn, &du, &x).unwrap();
            assert!(d.comp_norm() < 1e-9, "δ(du) = {:e}", d.comp_norm());
        }
        // non-harmonic exponent cross-check against the oracle
        let b = 3.0f64;
        let dub = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            move |vars| {
                let nvars = vars.len();
                let mut row = vec![Jet2::constant(0.0, nvars); nvars];
                row[nvars - 1] = vars[nvars - 1].powf(b - 1.0).scale(b);
                vec![row]
            },
        );
        let x = ChartPoint::new(vec![0.0, 0.0, 1.3]);
        let d = codifferential(&space, &conn, &dub, &x).unwrap();
        let oracle = -1.0 * b * (b - (n as f64) + 1.0) * 1.3f64.powf(b);
        assert!((d.comps[(0, 0)] - oracle).abs() < 1e-10);
    }

    #[test]
    fn p_codifferential_reduces_to_codifferential_at_p2() {
        let space = flat(4);
        let conn = ConnectionField::random_polynomial_skew(&space, 2, 2, 0.4, 5);
        let psi = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::new(2).unwrap(),
            2,
            2,
            0.5,
            1.0,
            6,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let x = ChartPoint::new((0..4).map(|_| rng.gen_range(-0.8..0.8)).collect());
            let a = p_codifferential(&space, &conn, &psi, &x, 2.0).unwrap();
            let b = codifferential(&space, &conn, &psi, &x).unwrap();
            assert!((a.comps - b.comps).norm() < 1e-12);
        }
    }

    #[test]
    fn radial_p_harmonic_field_is_p_coclosed() {
        // u = |x|^{(p−n)/(p−1)} on ℝ⁴∖{0} with p = 3: δ(|du|^{p−2} du) = 0.
        let n = 4usize;
        let p = 3.0f64;
        let space = flat(n);
        let conn = ConnectionField::trivial(n, 1);
        let alpha = (p - n as f64) / (p - 1.0);
        let du = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            move |vars| {
                let nv = vars.len();
                let mut r2 = Jet2::constant(0.0, nv);
                for v in vars {
                    r2 = r2 + v * v;
                }
                // d(r^α) = α r^{α−2} x_i dx^i
                let w = r2.powf(0.5 * alpha - 1.0).scale(alpha);
                vec![(0..nv).map(|i| &w * &vars[i]).collect()]
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let mut c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let norm: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(0.5..=2.0).contains(&norm) {
                c.iter_mut().for_each(|v| *v *= 1.2 / norm.max(1e-9));
            }
            let x = ChartPoint::new(c);
            let d = p_codifferential(&space, &conn, &du, &x, p).unwrap();
            assert!(d.comp_norm() < 1e-9, "residual {:e}", d.comp_norm());
        }
    }

    #[test]
    fn p_codifferential_hand_example() {
        // ψ = x¹dx¹, p = 4 on ℝ³ at (1,0,0): δ(|ψ|²ψ) = −∂₁((x¹)³) = −3
        let space = flat(3);
        let conn = ConnectionField::trivial(3, 1);
        let psi = BundleForm::from_jet2_components(
            space.clone(),
            BundleSpec::trivial(),
            1,
            |vars| vec![vec![vars[0].clone(), Jet2::constant(0.0, 3), Jet2::constant(0.0, 3)]],
        );
        let x = ChartPoint::new(vec![1.0, 0.0, 0.0]);
        let d = p_codifferential(&space, &conn, &psi, &x, 4.0).unwrap();
        assert!((d.comps[(0, 0)] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_weight_handling() {
        let space = flat(3);
        let conn = ConnectionField::trivial(3, 1);
        let zero = BundleForm::zero(space.clone(), BundleSpec::trivial(), 1);
        let x = ChartPoint::new(vec![0.0, 0.0, 0.0]);
        assert!(matches!(
            p_codifferential(&space, &conn, &zero, &x, 1.5),
            Err(Error::SingularWeight { .. })
        ));
        let v = p_codifferential(&space, &conn, &zero, &x, 3.0).unwrap();
        assert_eq!(v.comp_norm(), 0.0);
    }

    #[test]
    fn leibniz_rule_for_scalar_multiples() {
        // d^∇(fψ) = df ∧ ψ + f d^∇ψ
        let space = flat(3);
        let conn = ConnectionField::random_polynomial_skew(&space, 2, 1, 0.4, 33);
        let psi = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::new(2).unwrap(),
            1,
            2,
            0.7,
            0.0,
            34,
        );
        // f = x₀² − x₂, df assembled as a coordinate 1-form
        let fpsi = psi.scaled_by(|vars| &(&vars[0] * &vars[0]) - &vars[2]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..15 {
            let x = ChartPoint::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let lhs = exterior_covariant_derivative(&space, &conn, &fpsi, &x).unwrap();
            let fval = x.0[0] * x.0[0] - x.0[2];
            let mut df = FormValue::zeros(3, 1, 1);
            df.comps[(0, 0)] = 2.0 * x.0[0];
            df.comps[(0, 2)] = -1.0;
            let term1 = crate::forms::wedge_values(&df, &psi.value(&x).unwrap()).unwrap();
            let term2 = exterior_covariant_derivative(&space, &conn, &psi, &x).unwrap();
            let rhs = &term1.comps + &term2.comps * fval;
            assert!((lhs.comps - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn codifferential_is_frame_independent() {
        // Computing −Σ ι_{ε̃_i} ∇_{ε̃_i} ψ in a rotated orthonormal frame
        // ε̃ = ε·Q reproduces the diagonal-frame codifferential.
        let space = ModelSpace::hyperbolic(3, 1.0).unwrap();
        let conn = ConnectionField::random_polynomial_skew(&space, 2, 1, 0.3, 44);
        let psi = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::new(2).unwrap(),
            2,
            2,
            0.6,
            0.0,
            45,
        );
        // fixed rotation
        let theta: f64 = 0.6;
        let mut q = DMatrix::identity(3, 3);
        q[(0, 0)] = theta.cos();
        q[(0, 1)] = -theta.sin();
        q[(1, 0)] = theta.sin();
        q[(1, 1)] = theta.cos();
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        for _ in 0..10 {
            let mut c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            c[2] = rng.gen_range(0.5..2.0);
            let x = ChartPoint::new(c);
            let f = space.frame_factor(&x);
            let jet = psi.jet(&x).unwrap();
            let gamma = space.christoffel(&x).unwrap();
            let cj = conn.eval(&x);
            // rotated-frame evaluation
            let nablas: Vec<FormValue> = (0..3)
                .map(|d| covariant_derivative_at(&jet, &gamma, &cj, d))
                .collect();
            let mut rotated = FormValue::zeros(3, 2, 1);
            for i in 0..3 {
                // ε̃_i = Σ_μ Q[(μ, i)]·f·∂_μ
                let dir = DVector::from_fn(3, |mu, _| q[(mu, i)] * f);
                let mut nabla_dir = FormValue::zeros(3, 2, 2);
                for mu in 0..3 {
                    nabla_dir.comps += &nablas[mu].comps * dir[mu];
                }
                rotated.comps -= interior_product(&dir, &nabla_dir).unwrap().comps;
            }
            let diagonal = codifferential(&space, &conn, &psi, &x).unwrap();
            assert!(
                (rotated.comps - diagonal.comps).norm() < 1e-8,
                "frame dependence detected"
            );
        }
    }

    #[test]
    fn adjointness_of_d_and_delta() {
        // bump-localised polynomial forms on a flat box and a hyperbolic box
        let flat_space = flat(2);
        let conn = ConnectionField::trivial(2, 1);
        let mk_bump = |space: &ModelSpace, center: [f64; 2], seed: u64, degree: usize| {
            BundleForm::random_polynomial(
                space.clone(),
                BundleSpec::trivial(),
                degree,
                2,
                0.8,
                0.3,
                seed,
            )
            .scaled_by(move |vars| bump_jet(&center, &[0.8, 0.8], vars))
        };
        let psi1 = mk_bump(&flat_space, [0.0, 0.0], 51, 0);
        let psi2 = mk_bump(&flat_space, [0.0, 0.0], 52, 1);
        let bx = BoxSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 96).unwrap();
        let r = adjointness_residual(&flat_space, &conn, &psi1, &psi2, &bx).unwrap();
        assert!(r < 1e-6, "flat adjointness residual {r:e}");

        let hyp = ModelSpace::hyperbolic(2, 1.0).unwrap();
        let psi1 = mk_bump(&hyp, [0.0, 1.5], 53, 0);
        let psi2 = mk_bump(&hyp, [0.0, 1.5], 54, 1);
        let bx = BoxSpec::new(vec![-1.0, 0.5], vec![1.0, 2.5], 96).unwrap();
        let r = adjointness_residual(&hyp, &conn, &psi1, &psi2, &bx).unwrap();
        assert!(r < 1e-6, "hyperbolic adjointness residual {r:e}");
    }

    #[test]
    fn adjointness_flags_support_leak() {
        let space = flat(2);
        let conn = ConnectionField::trivial(2, 1);
        let psi1 = BundleForm::coordinate_form(space.clone(), &[])
            .unwrap();
        let psi2 = BundleForm::coordinate_form(space.clone(), &[0]).unwrap();
        let bx = BoxSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 8).unwrap();
        assert!(matches!(
            adjointness_residual(&space, &conn, &psi1, &psi2, &bx),
            Err(Error::SupportLeak { .. })
        ));
    }

    #[test]
    fn adjointness_zero_field_is_exact() {
        let space = flat(2);
        let conn = ConnectionField::trivial(2, 1);
        let zero = BundleForm::zero(space.clone(), BundleSpec::trivial(), 0);
        let psi2 = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::trivial(),
            1,
            1,
            0.5,
            0.0,
            3,
        )
        .scaled_by(|vars| bump_jet(&[0.0, 0.0], &[0.7, 0.7], vars));
        let bx = BoxSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 16).unwrap();
        let r = adjointness_residual(&space, &conn, &zero, &psi2, &bx).unwrap();
        assert_eq!(r, 0.0);
    }
}

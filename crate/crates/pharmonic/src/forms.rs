//! Bundle-valued k-forms, connections and multi-index combinatorics.
//!
//! A field ψ: M → E ⊗ Λᵏ T*M is represented by a 2-jet-evaluable map from
//! chart points to its components ψ^a_I over increasing multi-indices I,
//! taken in the coordinate coframe. Suppliers either build the jets out of
//! [`Jet2`] arithmetic (exact) or fall back to Richardson-extrapolated
//! central differences.

use crate::error::{Error, Result};
use crate::jet::{Dual, Jet2};
use crate::manifold::{ChartPoint, MetricJet, ModelSpace};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// A strictly increasing tuple of axis indices (0-based), the labelling of
/// independent components of a k-form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if !entries.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::ShapeMismatch(format!(
                "multi-index must be strictly increasing, got {entries:?}"
            )));
        }
        Ok(MultiIndex(entries))
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

/// Binomial coefficient (small arguments only).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All increasing k-multi-indices over n axes, in lexicographic order.
pub fn multi_indices(n: usize, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut current = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if current.len() == k {
            out.push(MultiIndex(current.clone()));
            return;
        }
        for i in start..n {
            current.push(i);
            rec(n, k, i + 1, current, out);
            current.pop();
        }
    }
    rec(n, k, 0, &mut current, &mut out);
    out
}

/// Lexicographic rank of an increasing multi-index among all C(n,k) of them.
pub fn index_rank(n: usize, idx: &MultiIndex) -> usize {
    let k = idx.degree();
    let mut rank = 0;
    let mut prev: isize = -1;
    for (j, &c) in idx.entries().iter().enumerate() {
        for t in (prev + 1) as usize..c {
            rank += binomial(n - 1 - t, k - 1 - j);
        }
        prev = c as isize;
    }
    rank
}

/// Sort an arbitrary index tuple into increasing order, tracking the sign of
/// the permutation. Returns `None` when an index repeats.
pub fn sort_signed(indices: &[usize]) -> Option<(f64, MultiIndex)> {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((sign, MultiIndex(v)))
    }
}

/// Fibre data of the vector bundle E: rank and (identity) fibre metric in
/// the working gauge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleSpec {
    pub rank: usize,
}

impl BundleSpec {
    pub fn new(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidConfig("bundle rank must be >= 1".into()));
        }
        Ok(BundleSpec { rank })
    }

    pub fn trivial() -> Self {
        BundleSpec { rank: 1 }
    }
}

/// Pointwise value of an E-valued k-form: components ψ^a_I as a rank × C(n,k)
/// matrix, rows indexed by the fibre, columns by increasing multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FormValue {
    pub n: usize,
    pub rank: usize,
    pub degree: usize,
    pub comps: DMatrix<f64>,
}

impl FormValue {
    pub fn zeros(n: usize, rank: usize, degree: usize) -> Self {
        FormValue {
            n,
            rank,
            degree,
            comps: DMatrix::zeros(rank, binomial(n, degree)),
        }
    }

    pub fn component(&self, a: usize, idx: &MultiIndex) -> f64 {
        self.comps[(a, index_rank(self.n, idx))]
    }

    /// Frobenius norm of the raw component matrix (coordinate coframe).
    pub fn comp_norm(&self) -> f64 {
        self.comps.norm()
    }
}

/// 2-jet of a form's components at a point. The Hessian block is optional:
/// derived forms (exterior derivatives of supplied fields) carry exact
/// values and gradients but no second derivatives.
#[derive(Debug, Clone)]
pub struct FormJet {
    pub n: usize,
    pub rank: usize,
    pub degree: usize,
    pub value: DMatrix<f64>,
    /// grad[d] holds ∂_d ψ^a_I.
    pub grad: Vec<DMatrix<f64>>,
    /// hess[d1 * n + d2] holds ∂_d1 ∂_d2 ψ^a_I.
    pub hess: Option<Vec<DMatrix<f64>>>,
}

impl FormJet {
    pub fn value_form(&self) -> FormValue {
        FormValue {
            n: self.n,
            rank: self.rank,
            degree: self.degree,
            comps: self.value.clone(),
        }
    }

    pub fn component_jet(&self, a: usize, col: usize) -> Jet2 {
        let n = self.n;
        let g = DVector::from_fn(n, |d, _| self.grad[d][(a, col)]);
        let h = match &self.hess {
            Some(hs) => DMatrix::from_fn(n, n, |d1, d2, | hs[d1 * n + d2][(a, col)]),
            None => DMatrix::zeros(n, n),
        };
        Jet2 {
            v: self.value[(a, col)],
            g,
            h,
        }
    }

    pub fn component_dual(&self, a: usize, col: usize) -> Dual {
        Dual {
            v: self.value[(a, col)],
            g: DVector::from_fn(self.n, |d, _| self.grad[d][(a, col)]),
        }
    }

    fn from_jet2_table(n: usize, rank: usize, degree: usize, table: &[Vec<Jet2>]) -> Self {
        let cols = binomial(n, degree);
        let mut value = DMatrix::zeros(rank, cols);
        let mut grad = vec![DMatrix::zeros(rank, cols); n];
        let mut hess = vec![DMatrix::zeros(rank, cols); n * n];
        for a in 0..rank {
            for c in 0..cols {
                let j = &table[a][c];
                value[(a, c)] = j.v;
                for d in 0..n {
                    grad[d][(a, c)] = j.g[d];
                    for e in 0..n {
                        hess[d * n + e][(a, c)] = j.h[(d, e)];
                    }
                }
            }
        }
        FormJet {
            n,
            rank,
            degree,
            value,
            grad,
            hess: Some(hess),
        }
    }
}

/// An E-valued k-form field: a thread-safe 2-jet-evaluable component map.
#[derive(Clone)]
pub struct BundleForm {
    pub space: ModelSpace,
    pub bundle: BundleSpec,
    pub degree: usize,
    jet_fn: Arc<dyn Fn(&ChartPoint) -> FormJet + Send + Sync>,
}

impl std::fmt::Debug for BundleForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BundleForm")
            .field("space", &self.space)
            .field("bundle", &self.bundle)
            .field("degree", &self.degree)
            .finish()
    }
}

impl BundleForm {
    pub fn new(
        space: ModelSpace,
        bundle: BundleSpec,
        degree: usize,
        jet_fn: Arc<dyn Fn(&ChartPoint) -> FormJet + Send + Sync>,
    ) -> Self {
        BundleForm {
            space,
            bundle,
            degree,
            jet_fn,
        }
    }

    pub fn jet(&self, x: &ChartPoint) -> Result<FormJet> {
        self.space.check_point(x)?;
        Ok((self.jet_fn)(x))
    }

    pub fn value(&self, x: &ChartPoint) -> Result<FormValue> {
        Ok(self.jet(x)?.value_form())
    }

    /// Build a field from per-component `Jet2` expressions of the seeded
    /// coordinates: `f` returns the table [fibre][multi-index column].
    pub fn from_jet2_components<F>(
        space: ModelSpace,
        bundle: BundleSpec,
        degree: usize,
        f: F,
    ) -> Self
    where
        F: Fn(&[Jet2]) -> Vec<Vec<Jet2>> + Send + Sync + 'static,
    {
        let n = space.dim();
        let rank = bundle.rank;
        BundleForm::new(
            space,
            bundle,
            degree,
            Arc::new(move |x: &ChartPoint| {
                let vars = Jet2::vars(&x.0);
                let table = f(&vars);
                FormJet::from_jet2_table(n, rank, degree, &table)
            }),
        )
    }

    /// Build a field from a value-only component map with the default
    /// finite-difference step scale of 1e−3.
    pub fn from_values<F>(space: ModelSpace, bundle: BundleSpec, degree: usize, f: F) -> Self
    where
        F: Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync + 'static,
    {
        BundleForm::from_value_fn(space, bundle, degree, 1e-3, f)
    }

    /// Build a field from a value-only component map; the jets are completed
    /// by Richardson-extrapolated central differences with step
    /// h = `step_scale`·(1 + |x|) per axis.
    pub fn from_value_fn<F>(
        space: ModelSpace,
        bundle: BundleSpec,
        degree: usize,
        step_scale: f64,
        f: F,
    ) -> Self
    where
        F: Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let n = space.dim();
        let rank = bundle.rank;
        let f = Arc::new(f);
        BundleForm::new(
            space,
            bundle,
            degree,
            Arc::new(move |x: &ChartPoint| fd_form_jet(n, rank, degree, step_scale, &*f, x)),
        )
    }

    pub fn constant(space: ModelSpace, bundle: BundleSpec, degree: usize, comps: DMatrix<f64>) -> Self {
        let n = space.dim();
        let rank = bundle.rank;
        assert_eq!(comps.nrows(), rank);
        assert_eq!(comps.ncols(), binomial(n, degree));
        BundleForm::new(
            space,
            bundle,
            degree,
            Arc::new(move |_x: &ChartPoint| FormJet {
                n,
                rank,
                degree,
                value: comps.clone(),
                grad: vec![DMatrix::zeros(rank, comps.ncols()); n],
                hess: Some(vec![DMatrix::zeros(rank, comps.ncols()); n * n]),
            }),
        )
    }

    /// The constant coordinate form dx^I with scalar fibre.
    pub fn coordinate_form(space: ModelSpace, entries: &[usize]) -> Result<Self> {
        let n = space.dim();
        let idx = MultiIndex::new(entries.to_vec())?;
        let k = idx.degree();
        let mut comps = DMatrix::zeros(1, binomial(n, k));
        comps[(0, index_rank(n, &idx))] = 1.0;
        Ok(BundleForm::constant(space, BundleSpec::trivial(), k, comps))
    }

    pub fn zero(space: ModelSpace, bundle: BundleSpec, degree: usize) -> Self {
        let n = space.dim();
        BundleForm::constant(space, bundle, degree, DMatrix::zeros(bundle.rank, binomial(n, degree)))
    }

    /// Multiply every component by a scalar weight supplied as a `Jet2`
    /// expression of the coordinates (used for bump localisation).
    pub fn scaled_by<F>(&self, weight: F) -> Self
    where
        F: Fn(&[Jet2]) -> Jet2 + Send + Sync + 'static,
    {
        let inner = self.jet_fn.clone();
        let n = self.space.dim();
        let rank = self.bundle.rank;
        let degree = self.degree;
        BundleForm::new(
            self.space.clone(),
            self.bundle,
            degree,
            Arc::new(move |x: &ChartPoint| {
                let base = inner(x);
                let w = weight(&Jet2::vars(&x.0));
                let cols = base.value.ncols();
                let mut table = vec![vec![Jet2::constant(0.0, n); cols]; rank];
                for a in 0..rank {
                    for c in 0..cols {
                        table[a][c] = &base.component_jet(a, c) * &w;
                    }
                }
                FormJet::from_jet2_table(n, rank, degree, &table)
            }),
        )
    }

    /// Pointwise sum of two fields of identical shape.
    pub fn plus(&self, other: &BundleForm) -> Result<Self> {
        if self.degree != other.degree || self.bundle != other.bundle {
            return Err(Error::ShapeMismatch(
                "cannot add forms of different degree or rank".into(),
            ));
        }
        let f1 = self.jet_fn.clone();
        let f2 = other.jet_fn.clone();
        Ok(BundleForm::new(
            self.space.clone(),
            self.bundle,
            self.degree,
            Arc::new(move |x: &ChartPoint| {
                let a = f1(x);
                let b = f2(x);
                FormJet {
                    n: a.n,
                    rank: a.rank,
                    degree: a.degree,
                    value: &a.value + &b.value,
                    grad: a
                        .grad
                        .iter()
                        .zip(&b.grad)
                        .map(|(x, y)| x + y)
                        .collect(),
                    hess: match (&a.hess, &b.hess) {
                        (Some(ha), Some(hb)) => {
                            Some(ha.iter().zip(hb).map(|(x, y)| x + y).collect())
                        }
                        _ => None,
                    },
                }
            }),
        ))
    }

    /// Random polynomial field: every component is `offset`·δ_{c,0} plus a
    /// polynomial of total degree ≤ `poly_degree` with coefficients drawn
    /// uniformly from [−amplitude, amplitude]. A positive offset on the
    /// first component keeps |ψ| bounded away from zero on moderate boxes.
    pub fn random_polynomial(
        space: ModelSpace,
        bundle: BundleSpec,
        degree: usize,
        poly_degree: usize,
        amplitude: f64,
        offset: f64,
        seed: u64,
    ) -> Self {
        let n = space.dim();
        let rank = bundle.rank;
        let cols = binomial(n, degree);
        let monomials = monomial_exponents(n, poly_degree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<Vec<Vec<f64>>> = (0..rank)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        monomials
                            .iter()
                            .map(|_| rng.gen_range(-amplitude..amplitude))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let max_e = monomials
            .iter()
            .flat_map(|m| m.iter())
            .copied()
            .max()
            .unwrap_or(0);
        // Direct coefficient evaluation: polynomial jets are a hot path in
        // the quadrature sweeps, so avoid jet arithmetic allocations.
        BundleForm::new(
            space,
            bundle,
            degree,
            Arc::new(move |x: &ChartPoint| {
                // powers[i][e] = x_i^e
                let powers: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        let mut row = vec![1.0; max_e + 1];
                        for e in 1..=max_e {
                            row[e] = row[e - 1] * x.0[i];
                        }
                        row
                    })
                    .collect();
                // product of x^β with the exponents of `adjust` lowered
                let mono = |expo: &[usize], adjust: &[(usize, usize)]| -> f64 {
                    let mut prod = 1.0;
                    for i in 0..n {
                        let mut e = expo[i];
                        for &(j, drop) in adjust {
                            if j == i {
                                if e < drop {
                                    return 0.0;
                                }
                                e -= drop;
                            }
                        }
                        prod *= powers[i][e];
                    }
                    prod
                };
                let mut value = DMatrix::zeros(rank, cols);
                let mut grad = vec![DMatrix::zeros(rank, cols); n];
                let mut hess = vec![DMatrix::zeros(rank, cols); n * n];
                value[(0, 0)] = offset;
                for a in 0..rank {
                    for c in 0..cols {
                        for (m, expo) in monomials.iter().enumerate() {
                            let coeff = coeffs[a][c][m];
                            if coeff == 0.0 {
                                continue;
                            }
                            value[(a, c)] += coeff * mono(expo, &[]);
                            for d in 0..n {
                                let ed = expo[d];
                                if ed == 0 {
                                    continue;
                                }
                                grad[d][(a, c)] += coeff * ed as f64 * mono(expo, &[(d, 1)]);
                                // diagonal second derivative
                                if ed >= 2 {
                                    hess[d * n + d][(a, c)] +=
                                        coeff * (ed * (ed - 1)) as f64 * mono(expo, &[(d, 2)]);
                                }
                                for e in (d + 1)..n {
                                    let ee = expo[e];
                                    if ee == 0 {
                                        continue;
                                    }
                                    let v = coeff
                                        * (ed * ee) as f64
                                        * mono(expo, &[(d, 1), (e, 1)]);
                                    hess[d * n + e][(a, c)] += v;
                                    hess[e * n + d][(a, c)] += v;
                                }
                            }
                        }
                    }
                }
                FormJet {
                    n,
                    rank,
                    degree,
                    value,
                    grad,
                    hess: Some(hess),
                }
            }),
        )
    }
}

/// Exponent tuples of all monomials in n variables with total degree ≤ d
/// (constant excluded).
fn monomial_exponents(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fn rec(i: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == current.len() {
            if current.iter().any(|&e| e > 0) {
                out.push(current.clone());
            }
            return;
        }
        for e in 0..=remaining {
            current[i] = e;
            rec(i + 1, remaining - e, current, out);
        }
        current[i] = 0;
    }
    rec(0, d, &mut current, &mut out);
    out
}

/// Finite-difference 2-jet of a value-only component map.
pub fn fd_form_jet(
    n: usize,
    rank: usize,
    degree: usize,
    step_scale: f64,
    f: &(dyn Fn(&ChartPoint) -> DMatrix<f64> + Sync),
    x: &ChartPoint,
) -> FormJet {
    let h = step_scale * (1.0 + x.0.norm());
    let cols = binomial(n, degree);
    let at = |shift: &[(usize, f64)]| -> DMatrix<f64> {
        let mut q = x.0.clone();
        for &(i, s) in shift {
            q[i] += s;
        }
        f(&ChartPoint(q))
    };
    let value = f(x);
    let mut grad = vec![DMatrix::zeros(rank, cols); n];
    let mut hess = vec![DMatrix::zeros(rank, cols); n * n];
    for i in 0..n {
        // Richardson first derivative
        let d1 = (at(&[(i, h)]) - at(&[(i, -h)])) / (2.0 * h);
        let d2 = (at(&[(i, 0.5 * h)]) - at(&[(i, -0.5 * h)])) / h;
        grad[i] = (d2 * 4.0 - d1) / 3.0;
        // Richardson second derivative (diagonal)
        let s1 = (at(&[(i, h)]) - &value * 2.0 + at(&[(i, -h)])) / (h * h);
        let s2 = (at(&[(i, 0.5 * h)]) - &value * 2.0 + at(&[(i, -0.5 * h)])) / (0.25 * h * h);
        hess[i * n + i] = (s2 * 4.0 - s1) / 3.0;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let cross = |s: f64| {
                (at(&[(i, s), (j, s)]) - at(&[(i, s), (j, -s)]) - at(&[(i, -s), (j, s)])
                    + at(&[(i, -s), (j, -s)]))
                    / (4.0 * s * s)
            };
            let c1 = cross(h);
            let c2 = cross(0.5 * h);
            let c = (c2 * 4.0 - c1) / 3.0;
            hess[i * n + j] = c.clone();
            hess[j * n + i] = c;
        }
    }
    FormJet {
        n,
        rank,
        degree,
        value,
        grad,
        hess: Some(hess),
    }
}

/// Connection-coefficient matrices A_i(x) on E, metric-compatible (skew), as
/// a 1-jet-evaluable field.
#[derive(Clone)]
pub struct ConnectionField {
    pub rank: usize,
    f: Arc<dyn Fn(&ChartPoint) -> ConnJet + Send + Sync>,
}

/// 1-jet of the connection coefficients at a point.
#[derive(Debug, Clone)]
pub struct ConnJet {
    /// a[i] is the m×m matrix A_i.
    pub a: Vec<DMatrix<f64>>,
    /// da[j][i] holds ∂_j A_i.
    pub da: Vec<Vec<DMatrix<f64>>>,
}

impl std::fmt::Debug for ConnectionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConnectionField").field("rank", &self.rank).finish()
    }
}

impl ConnectionField {
    pub fn new(rank: usize, f: Arc<dyn Fn(&ChartPoint) -> ConnJet + Send + Sync>) -> Self {
        ConnectionField { rank, f }
    }

    /// The flat connection: all coefficient matrices vanish.
    pub fn trivial(n: usize, rank: usize) -> Self {
        ConnectionField::new(
            rank,
            Arc::new(move |_x: &ChartPoint| ConnJet {
                a: vec![DMatrix::zeros(rank, rank); n],
                da: vec![vec![DMatrix::zeros(rank, rank); n]; n],
            }),
        )
    }

    pub fn eval(&self, x: &ChartPoint) -> ConnJet {
        (self.f)(x)
    }

    /// Random polynomial skew-symmetric connection (metric-compatible in the
    /// orthonormal gauge).
    pub fn random_polynomial_skew(
        space: &ModelSpace,
        rank: usize,
        poly_degree: usize,
        amplitude: f64,
        seed: u64,
    ) -> Self {
        let n = space.dim();
        let monomials = monomial_exponents(n, poly_degree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // coefficients for the strict upper triangle of each A_i
        let coeffs: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| {
                (0..rank * rank)
                    .map(|_| {
                        monomials
                            .iter()
                            .map(|_| rng.gen_range(-amplitude..amplitude))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ConnectionField::new(
            rank,
            Arc::new(move |x: &ChartPoint| {
                let vars = Dual::vars(&x.0);
                let mut a = vec![DMatrix::zeros(rank, rank); n];
                let mut da = vec![vec![DMatrix::zeros(rank, rank); n]; n];
                for i in 0..n {
                    for r in 0..rank {
                        for c in (r + 1)..rank {
                            let mut acc = Dual::constant(0.0, n);
                            for (m, expo) in monomials.iter().enumerate() {
                                let mut term = Dual::constant(coeffs[i][r * rank + c][m], n);
                                for (vi, &e) in expo.iter().enumerate() {
                                    for _ in 0..e {
                                        term = &term * &vars[vi];
                                    }
                                }
                                acc = acc + term;
                            }
                            a[i][(r, c)] = acc.v;
                            a[i][(c, r)] = -acc.v;
                            for d in 0..n {
                                da[d][i][(r, c)] = acc.g[d];
                                da[d][i][(c, r)] = -acc.g[d];
                            }
                        }
                    }
                }
                ConnJet { a, da }
            }),
        )
    }
}

/// Interior product ι_X ψ of a pointwise form value with a coordinate vector:
/// (ι_X ψ)_J = Σ_i X^i ψ_{iJ} with reordering signs.
pub fn interior_product(v: &DVector<f64>, psi: &FormValue) -> Result<FormValue> {
    if psi.degree == 0 {
        return Err(Error::ZeroDegree);
    }
    let n = psi.n;
    let k = psi.degree;
    let out_indices = multi_indices(n, k - 1);
    let mut out = FormValue::zeros(n, psi.rank, k - 1);
    for (col, j_idx) in out_indices.iter().enumerate() {
        for i in 0..n {
            if v[i] == 0.0 || j_idx.contains(i) {
                continue;
            }
            // ψ_{i, J}: move i into sorted position within (i, J)
            let mut full = Vec::with_capacity(k);
            full.push(i);
            full.extend_from_slice(j_idx.entries());
            if let Some((sign, sorted)) = sort_signed(&full) {
                let src = index_rank(n, &sorted);
                for a in 0..psi.rank {
                    out.comps[(a, col)] += v[i] * sign * psi.comps[(a, src)];
                }
            }
        }
    }
    Ok(out)
}

/// Gram-determinant inner product ⟨ψ₁, ψ₂⟩ at a point:
/// Σ_a Σ_{I,J} ψ₁^a_I ψ₂^a_J det(g^{i_r j_s}), with the identity fibre
/// metric. Works for any (possibly non-diagonal) inverse metric, which the
/// metric-variation check relies on.
pub fn inner_product(ginv: &DMatrix<f64>, psi1: &FormValue, psi2: &FormValue) -> Result<f64> {
    if psi1.degree != psi2.degree || psi1.rank != psi2.rank || psi1.n != psi2.n {
        return Err(Error::ShapeMismatch(format!(
            "inner product needs matching shapes, got (k={}, m={}) vs (k={}, m={})",
            psi1.degree, psi1.rank, psi2.degree, psi2.rank
        )));
    }
    let n = psi1.n;
    let k = psi1.degree;
    let indices = multi_indices(n, k);
    let mut total = 0.0;
    for (ci, idx_i) in indices.iter().enumerate() {
        for (cj, idx_j) in indices.iter().enumerate() {
            let mut pair = 0.0;
            for a in 0..psi1.rank {
                pair += psi1.comps[(a, ci)] * psi2.comps[(a, cj)];
            }
            if pair == 0.0 {
                continue;
            }
            total += pair * gram_det(ginv, idx_i.entries(), idx_j.entries());
        }
    }
    Ok(total)
}

/// det of the k×k block (g^{i_r j_s}).
pub fn gram_det(ginv: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => ginv[(rows[0], cols[0])],
        2 => {
            ginv[(rows[0], cols[0])] * ginv[(rows[1], cols[1])]
                - ginv[(rows[0], cols[1])] * ginv[(rows[1], cols[0])]
        }
        3 => {
            let m = |r: usize, c: usize| ginv[(rows[r], cols[c])];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
        _ => {
            let k = rows.len();
            DMatrix::from_fn(k, k, |r, c| ginv[(rows[r], cols[c])]).determinant()
        }
    }
}

/// Pointwise norm² of a form value via the Gram inner product.
pub fn norm_sq(metric: &MetricJet, psi: &FormValue) -> f64 {
    inner_product(&metric.ginv, psi, psi).expect("matching shapes")
}

/// Norm² through the diagonal orthonormal frame: |ψ|² = f^{2k} Σ (ψ^a_I)².
/// Valid for the conformally flat model spaces; cheaper than the Gram route
/// and cross-checked against it in the tests.
pub fn norm_sq_frame(space: &ModelSpace, x: &ChartPoint, psi: &FormValue) -> f64 {
    let f = space.frame_factor(x);
    f.powi(2 * psi.degree as i32) * psi.comps.iter().map(|v| v * v).sum::<f64>()
}

/// 1-jet of |ψ|² through the frame route, for weighting by |ψ|^{p−2} and its
/// gradient without numerical differentiation.
pub fn norm_sq_dual(space: &ModelSpace, x: &ChartPoint, psi: &FormJet) -> Dual {
    let n = space.dim();
    let fj = space.frame_factor_jet(x).dual();
    let f2k = fj.powi(2 * psi.degree as i32);
    let mut acc = Dual::constant(0.0, n);
    for a in 0..psi.rank {
        for c in 0..psi.value.ncols() {
            let d = psi.component_dual(a, c);
            acc = acc + &d * &d;
        }
    }
    f2k * acc
}

/// Orthonormal frame and dual coframe at a point, as matrices:
/// frame[(μ, i)] gives the μ-th coordinate component of ε_i, and
/// coframe[(i, μ)] the components of ω^i; coframe · frame = identity.
pub fn orthonormal_frame(space: &ModelSpace, x: &ChartPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    space.check_point(x)?;
    let n = space.dim();
    let f = space.frame_factor(x);
    Ok((
        DMatrix::identity(n, n) * f,
        DMatrix::identity(n, n) / f,
    ))
}

/// Wedge product of a scalar-valued form with an E-valued form, with jets
/// combined by the product rule.
pub fn wedge(alpha: &BundleForm, beta: &BundleForm) -> Result<BundleForm> {
    if alpha.bundle.rank != 1 {
        return Err(Error::ShapeMismatch(
            "wedge: left factor must be scalar-valued".into(),
        ));
    }
    let n = alpha.space.dim();
    let (k1, k2) = (alpha.degree, beta.degree);
    if k1 + k2 > n {
        return Err(Error::DegreeOverflow { k1, k2, n });
    }
    // combination table: out column -> [(alpha col, beta col, sign)]
    let out_indices = multi_indices(n, k1 + k2);
    let mut table: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); out_indices.len()];
    let alpha_indices = multi_indices(n, k1);
    let beta_indices = multi_indices(n, k2);
    for (ca, ia) in alpha_indices.iter().enumerate() {
        for (cb, ib) in beta_indices.iter().enumerate() {
            let mut joined = ia.entries().to_vec();
            joined.extend_from_slice(ib.entries());
            if let Some((sign, sorted)) = sort_signed(&joined) {
                table[index_rank(n, &sorted)].push((ca, cb, sign));
            }
        }
    }
    let fa = alpha.jet_fn.clone();
    let fb = beta.jet_fn.clone();
    let rank = beta.bundle.rank;
    let degree = k1 + k2;
    Ok(BundleForm::new(
        beta.space.clone(),
        beta.bundle,
        degree,
        Arc::new(move |x: &ChartPoint| {
            let ja = fa(x);
            let jb = fb(x);
            let cols = table.len();
            let mut out = vec![vec![Jet2::constant(0.0, n); cols]; rank];
            for (col, contributions) in table.iter().enumerate() {
                for &(ca, cb, sign) in contributions {
                    let va = ja.component_jet(0, ca);
                    for (a, row) in out.iter_mut().enumerate() {
                        let vb = jb.component_jet(a, cb);
                        row[col] = &row[col] + (&va * &vb).scale(sign);
                    }
                }
            }
            FormJet::from_jet2_table(n, rank, degree, &out)
        }),
    ))
}

/// Pointwise wedge of two form values (scalar left factor).
pub fn wedge_values(alpha: &FormValue, beta: &FormValue) -> Result<FormValue> {
    if alpha.rank != 1 {
        return Err(Error::ShapeMismatch(
            "wedge: left factor must be scalar-valued".into(),
        ));
    }
    let n = alpha.n;
    let (k1, k2) = (alpha.degree, beta.degree);
    if k1 + k2 > n {
        return Err(Error::DegreeOverflow { k1, k2, n });
    }
    let mut out = FormValue::zeros(n, beta.rank, k1 + k2);
    for (ca, ia) in multi_indices(n, k1).iter().enumerate() {
        for (cb, ib) in multi_indices(n, k2).iter().enumerate() {
            let mut joined = ia.entries().to_vec();
            joined.extend_from_slice(ib.entries());
            if let Some((sign, sorted)) = sort_signed(&joined) {
                let col = index_rank(n, &sorted);
                for a in 0..beta.rank {
                    out.comps[(a, col)] +=
                        sign * alpha.comps[(0, ca)] * beta.comps[(a, cb)];
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ModelSpace;
    use proptest::prelude::{prop_assert, prop_assume, proptest, ProptestConfig};
    use rand::Rng;

    fn flat(n: usize) -> ModelSpace {
        ModelSpace::euclidean(n).unwrap()
    }

    #[test]
    fn multi_index_enumeration_is_total_and_ordered() {
        let list = multi_indices(5, 2);
        assert_eq!(list.len(), 10);
        for w in list.windows(2) {
            assert!(w[0] < w[1], "not lexicographic: {:?} !< {:?}", w[0], w[1]);
        }
        for (i, idx) in list.iter().enumerate() {
            assert_eq!(index_rank(5, idx), i);
        }
    }

    #[test]
    fn sort_signed_detects_repeats_and_swaps() {
        assert!(sort_signed(&[1, 1]).is_none());
        let (s, idx) = sort_signed(&[2, 1]).unwrap();
        assert_eq!(s, -1.0);
        assert_eq!(idx.entries(), &[1, 2]);
        let (s, _) = sort_signed(&[3, 0, 1]).unwrap();
        assert_eq!(s, 1.0); // two transpositions
    }

    #[test]
    fn wedge_of_coordinate_forms() {
        let space = flat(3);
        let dx1 = BundleForm::coordinate_form(space.clone(), &[0]).unwrap();
        let dx2 = BundleForm::coordinate_form(space.clone(), &[1]).unwrap();
        let w = wedge(&dx1, &dx2).unwrap();
        let x = ChartPoint::new(vec![0.3, 0.1, -0.2]);
        let v = w.value(&x).unwrap();
        let idx01 = MultiIndex::new(vec![0, 1]).unwrap();
        assert_eq!(v.component(0, &idx01), 1.0);

        let w_rev = wedge(&dx2, &dx1).unwrap();
        assert_eq!(w_rev.value(&x).unwrap().component(0, &idx01), -1.0);
    }

    #[test]
    fn wedge_degree_overflow_rejected() {
        let space = flat(2);
        let dx12 = BundleForm::coordinate_form(space.clone(), &[0, 1]).unwrap();
        let dx1 = BundleForm::coordinate_form(space, &[0]).unwrap();
        assert!(matches!(
            wedge(&dx1, &dx12),
            Err(Error::DegreeOverflow { .. })
        ));
    }

    /// Brute-force wedge over all permutations, as an independent oracle.
    fn wedge_brute(alpha: &FormValue, beta: &FormValue) -> FormValue {
        let n = alpha.n;
        let (k1, k2) = (alpha.degree, beta.degree);
        let k = k1 + k2;
        let mut out = FormValue::zeros(n, beta.rank, k);
        // antisymmetric extension of components to arbitrary tuples
        let comp = |f: &FormValue, tuple: &[usize], a: usize| -> f64 {
            match sort_signed(tuple) {
                None => 0.0,
                Some((s, idx)) => s * f.comps[(a, index_rank(n, &idx))],
            }
        };
        // all permutations of 0..k, with parity from sort_signed
        fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
            let mut out = Vec::new();
            let mut current = Vec::new();
            let mut used = vec![false; k];
            fn rec(
                k: usize,
                current: &mut Vec<usize>,
                used: &mut Vec<bool>,
                out: &mut Vec<(Vec<usize>, f64)>,
            ) {
                if current.len() == k {
                    let (sign, _) = sort_signed(current).expect("distinct entries");
                    out.push((current.clone(), sign));
                    return;
                }
                for i in 0..k {
                    if !used[i] {
                        used[i] = true;
                        current.push(i);
                        rec(k, current, used, out);
                        current.pop();
                        used[i] = false;
                    }
                }
            }
            rec(k, &mut current, &mut used, &mut out);
            out
        }
        let perms = permutations(k);
        for (col, idx) in multi_indices(n, k).iter().enumerate() {
            let entries = idx.entries();
            // 1/(k1! k2!) Σ_σ sgn(σ) α(v_{σ(1..k1)}) β(v_{σ(k1+1..k)})
            for a in 0..beta.rank {
                let mut acc = 0.0;
                for (p, sign) in &perms {
                    let first: Vec<usize> = p[..k1].iter().map(|&t| entries[t]).collect();
                    let rest: Vec<usize> = p[k1..].iter().map(|&t| entries[t]).collect();
                    acc += sign * comp(alpha, &first, 0) * comp(beta, &rest, a);
                }
                out.comps[(a, col)] = acc / (factorial(k1) * factorial(k2)) as f64;
            }
        }
        out
    }

    fn factorial(k: usize) -> usize {
        (1..=k).product::<usize>().max(1)
    }

    #[test]
    fn wedge_matches_permutation_oracle() {
        // (dx¹ + dx²) ∧ dx¹∧dx³ on ℝ⁴, plus a random-coefficient case
        let mut alpha = FormValue::zeros(4, 1, 1);
        alpha.comps[(0, 0)] = 1.0;
        alpha.comps[(0, 1)] = 1.0;
        let mut beta = FormValue::zeros(4, 1, 2);
        let idx02 = MultiIndex::new(vec![0, 2]).unwrap();
        beta.comps[(0, index_rank(4, &idx02))] = 1.0;
        let ours = wedge_values(&alpha, &beta).unwrap();
        let brute = wedge_brute(&alpha, &beta);
        assert!((ours.comps - brute.comps).norm() < 1e-12);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (k1, k2) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let mut a = FormValue::zeros(4, 1, k1);
            let mut b = FormValue::zeros(4, 2, k2);
            for v in a.comps.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            for v in b.comps.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let ours = wedge_values(&a, &b).unwrap();
            let brute = wedge_brute(&a, &b);
            assert!(
                (ours.comps - brute.comps).norm() < 1e-12,
                "mismatch at k1={k1} k2={k2}"
            );
        }
    }

    #[test]
    fn interior_product_signs() {
        let space = flat(2);
        let dx12 = BundleForm::coordinate_form(space, &[0, 1]).unwrap();
        let x = ChartPoint::new(vec![0.0, 0.0]);
        let v = dx12.value(&x).unwrap();

        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let r = interior_product(&e1, &v).unwrap();
        assert_eq!(r.comps[(0, 1)], 1.0); // ι_∂1 (dx¹∧dx²) = dx²
        assert_eq!(r.comps[(0, 0)], 0.0);

        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let r = interior_product(&e2, &v).unwrap();
        assert_eq!(r.comps[(0, 0)], -1.0); // ι_∂2 (dx¹∧dx²) = −dx¹
    }

    #[test]
    fn interior_of_zero_form_rejected() {
        let v = FormValue::zeros(3, 1, 0);
        let e = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(matches!(interior_product(&e, &v), Err(Error::ZeroDegree)));
    }

    #[test]
    fn interior_antiderivation_law() {
        // ι_X(α∧β) = ι_Xα ∧ β + (−1)^{deg α} α ∧ ι_Xβ
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = 4;
            let (k1, k2) = (1, 2);
            let mut a = FormValue::zeros(n, 1, k1);
            let mut b = FormValue::zeros(n, 1, k2);
            for v in a.comps.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            for v in b.comps.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let x_vec = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let lhs = interior_product(&x_vec, &wedge_values(&a, &b).unwrap()).unwrap();
            let t1 = wedge_values(&interior_product(&x_vec, &a).unwrap(), &b).unwrap();
            let t2 = wedge_values(&a, &interior_product(&x_vec, &b).unwrap()).unwrap();
            let rhs = &t1.comps + &t2.comps * (-1.0f64).powi(k1 as i32);
            assert!((lhs.comps - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn inner_product_euclidean_and_hyperbolic() {
        let space = flat(3);
        let x = ChartPoint::new(vec![0.0, 0.0, 0.0]);
        let m = space.metric_jet(&x).unwrap();
        let dx12 = BundleForm::coordinate_form(space, &[0, 1])
            .unwrap()
            .value(&x)
            .unwrap();
        assert!((inner_product(&m.ginv, &dx12, &dx12).unwrap() - 1.0).abs() < 1e-14);

        // hyperbolic n=2 at y=2: ⟨dx∧dy, dx∧dy⟩ = (y²)² = 16
        let hyp = ModelSpace::hyperbolic(2, 1.0).unwrap();
        let xh = ChartPoint::new(vec![0.0, 2.0]);
        let mh = hyp.metric_jet(&xh).unwrap();
        let dxdy = BundleForm::coordinate_form(hyp.clone(), &[0, 1])
            .unwrap()
            .value(&xh)
            .unwrap();
        assert!((inner_product(&mh.ginv, &dxdy, &dxdy).unwrap() - 16.0).abs() < 1e-12);
        assert!((norm_sq_frame(&hyp, &xh, &dxdy) - 16.0).abs() < 1e-12);
    }

    /// Brute-force inner product: sum over *all* k-tuples divided by k!.
    fn inner_product_brute(ginv: &DMatrix<f64>, a: &FormValue, b: &FormValue) -> f64 {
        let n = a.n;
        let k = a.degree;
        let comp = |f: &FormValue, tuple: &[usize], row: usize| -> f64 {
            match sort_signed(tuple) {
                None => 0.0,
                Some((s, idx)) => s * f.comps[(row, index_rank(n, &idx))],
            }
        };
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..k {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    (0..n).map(move |i| {
                        let mut t2 = t.clone();
                        t2.push(i);
                        t2
                    })
                })
                .collect();
        }
        let mut total = 0.0;
        for ti in &tuples {
            for tj in &tuples {
                let mut pair = 0.0;
                for row in 0..a.rank {
                    pair += comp(a, ti, row) * comp(b, tj, row);
                }
                if pair == 0.0 {
                    continue;
                }
                let mut weight = pair;
                for (r, &ir) in ti.iter().enumerate() {
                    let _ = r;
                    let _ = ir;
                }
                // product g^{i_r j_r} over slots, summed over tuples, equals
                // k! times the Gram determinant form
                let mut prod = 1.0;
                for r in 0..k {
                    prod *= ginv[(ti[r], tj[r])];
                }
                weight *= prod;
                total += weight;
            }
        }
        total / factorial(k) as f64
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn inner_product_matches_brute_force(seed in 0u64..500) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 4usize;
            let k = 1 + (seed as usize) % 3; // 1..=3
            let mut a = FormValue::zeros(n, 2, k);
            let mut b = FormValue::zeros(n, 2, k);
            for v in a.comps.iter_mut() { *v = rng.gen_range(-1.0..1.0); }
            for v in b.comps.iter_mut() { *v = rng.gen_range(-1.0..1.0); }
            // random SPD inverse metric
            let mut l = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    l[(i, j)] = rng.gen_range(-0.6..0.6);
                }
                l[(i, i)] += 1.5;
            }
            let ginv = &l * l.transpose();
            let ours = inner_product(&ginv, &a, &b).unwrap();
            let brute = inner_product_brute(&ginv, &a, &b);
            prop_assert!((ours - brute).abs() < 1e-10 * (1.0 + brute.abs()));
        }

        #[test]
        fn positivity_of_inner_product(seed in 0u64..200) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 4usize;
            let mut a = FormValue::zeros(n, 2, 2);
            for v in a.comps.iter_mut() { *v = rng.gen_range(-1.0..1.0); }
            prop_assume!(a.comp_norm() > 1e-3);
            let space = ModelSpace::hyperbolic(4, 1.0).unwrap();
            let x = ChartPoint::new(vec![0.1, 0.2, -0.1, 0.8]);
            let m = space.metric_jet(&x).unwrap();
            let q = inner_product(&m.ginv, &a, &a).unwrap();
            prop_assert!(q > 0.0);
            // frame route agrees
            prop_assert!((q - norm_sq_frame(&space, &x, &a)).abs() < 1e-10 * (1.0 + q));
        }
    }

    #[test]
    fn orthonormal_frame_duality() {
        let hyp = ModelSpace::hyperbolic(3, 1.0).unwrap();
        let x = ChartPoint::new(vec![0.4, -0.2, 1.7]);
        let (frame, coframe) = orthonormal_frame(&hyp, &x).unwrap();
        let prod = &coframe * &frame;
        assert!((prod - DMatrix::identity(3, 3)).norm() < 1e-14);
        // g(ε_i, ε_j) = δ_ij
        let m = hyp.metric_jet(&x).unwrap();
        let gram = frame.transpose() * &m.g * &frame;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn connection_skewness() {
        let space = flat(3);
        let conn = ConnectionField::random_polynomial_skew(&space, 3, 2, 0.5, 99);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let x = ChartPoint::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let j = conn.eval(&x);
            for a in &j.a {
                assert!((a + a.transpose()).norm() == 0.0);
            }
        }
    }

    #[test]
    fn fd_jets_match_analytic_jets() {
        let space = flat(3);
        let analytic = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::new(2).unwrap(),
            1,
            2,
            0.5,
            0.0,
            4,
        );
        let an2 = analytic.clone();
        let fd = BundleForm::from_value_fn(space, BundleSpec::new(2).unwrap(), 1, 1e-3, move |x| {
            an2.jet(x).unwrap().value
        });
        let x = ChartPoint::new(vec![0.3, -0.5, 0.8]);
        let ja = analytic.jet(&x).unwrap();
        let jf = fd.jet(&x).unwrap();
        assert!((&ja.value - &jf.value).norm() < 1e-12);
        for d in 0..3 {
            assert!((&ja.grad[d] - &jf.grad[d]).norm() < 1e-9);
        }
        let (ha, hf) = (ja.hess.unwrap(), jf.hess.unwrap());
        for c in 0..9 {
            assert!((&ha[c] - &hf[c]).norm() < 1e-6);
        }
    }

    #[test]
    fn random_polynomial_offset_keeps_norm_positive() {
        let space = flat(4);
        let psi = BundleForm::random_polynomial(
            space.clone(),
            BundleSpec::trivial(),
            2,
            2,
            0.03,
            1.0,
            11,
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x = ChartPoint::new((0..4).map(|_| rng.gen_range(-0.8..0.8)).collect());
            let v = psi.value(&x).unwrap();
            let m = space.metric_jet(&x).unwrap();
            assert!(norm_sq(&m, &v) > 0.2);
        }
    }
}

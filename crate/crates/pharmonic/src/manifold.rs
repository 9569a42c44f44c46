//! Model Riemannian geometries.
//!
//! Two chart-described spaces are supported:
//!
//! * Euclidean ℝⁿ with the flat metric, and
//! * hyperbolic upper half-space ℍⁿ with constant sectional curvature −κ²,
//!   charted on { x ∈ ℝⁿ : xₙ > 0 } with metric g = (κ·xₙ)⁻² δ.
//!
//! Both admit closed forms for everything the verification pipeline needs:
//! metric 1-jets, Christoffel symbols, geodesic distance 2-jets, the Hessian
//! of ½r², geodesic polar coordinates with analytic volume data, and the
//! two-sided comparison bounds on g − ∇²(½r²).

use crate::error::{Error, Result};
use crate::jet::Jet2;
use nalgebra::{DMatrix, DVector};

/// A point in the chart of a model space.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint(pub DVector<f64>);

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        ChartPoint(DVector::from_vec(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        ChartPoint(DVector::from_column_slice(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Euclidean,
    Hyperbolic,
}

/// A model Riemannian manifold with analytic chart data.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpace {
    kind: ModelKind,
    dim: usize,
    kappa: f64,
}

/// Metric 1-jet at a chart point: components, exact inverse, coordinate
/// partials and the volume density √det g.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    /// dg[d] holds ∂_d g_{ij}.
    pub dg: Vec<DMatrix<f64>>,
    pub sqrt_det: f64,
}

/// 2-jet of the geodesic distance r = d(x₀, ·) at a chart point.
#[derive(Debug, Clone)]
pub struct DistanceJet {
    pub r: f64,
    /// Coordinate partials ∂_i r (components of the covector dr).
    pub grad: DVector<f64>,
    /// Coordinate second partials ∂_i ∂_j r.
    pub hess: DMatrix<f64>,
}

impl DistanceJet {
    /// The metric gradient vector ∇r (unit length when the jet is exact).
    pub fn grad_vector(&self, metric: &MetricJet) -> DVector<f64> {
        &metric.ginv * &self.grad
    }
}

/// Covariant Hessian of ½r² together with the comparison tensor
/// g − ∇²(½r²), both in coordinate components.
#[derive(Debug, Clone)]
pub struct HessianHalfR2 {
    pub hess: DMatrix<f64>,
    pub comparison: DMatrix<f64>,
}

/// Constants bounding the comparison tensor on a ball of a given radius:
/// Λ̲ r² g_r ≤ g − ∇²(½r²) ≤ Λ̄ r² g_r, and the derived monotonicity
/// constant Λ = −½·(kp·Λ̲⁻ − (n−1)·Λ̄)₋ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryBounds {
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub lambda: f64,
    pub radius: f64,
}

/// The radial factor ρ(z) = 1 − z·coth(z) of the hyperbolic comparison
/// tensor, evaluated stably (series for small z).
pub fn radial_comparison_factor(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else if z.abs() < 1e-3 {
        let z2 = z * z;
        -z2 / 3.0 + z2 * z2 / 45.0
    } else {
        1.0 - z / z.tanh()
    }
}

impl ModelSpace {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "model spaces require dim >= 2, got {dim}"
            )));
        }
        Ok(ModelSpace {
            kind: ModelKind::Euclidean,
            dim,
            kappa: 0.0,
        })
    }

    pub fn hyperbolic(dim: usize, kappa: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "model spaces require dim >= 2, got {dim}"
            )));
        }
        if !(kappa > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "hyperbolic space requires kappa > 0, got {kappa}"
            )));
        }
        Ok(ModelSpace {
            kind: ModelKind::Hyperbolic,
            dim,
            kappa,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_flat(&self) -> bool {
        self.kind == ModelKind::Euclidean
    }

    pub fn contains(&self, x: &ChartPoint) -> bool {
        x.dim() == self.dim
            && x.0.iter().all(|c| c.is_finite())
            && (self.is_flat() || x.0[self.dim - 1] > 0.0)
    }

    pub fn check_point(&self, x: &ChartPoint) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(format!("{:?}", x.0.as_slice())))
        }
    }

    /// Conformal scale c(x) with g = c² δ in chart coordinates.
    pub fn conformal_scale(&self, x: &ChartPoint) -> f64 {
        match self.kind {
            ModelKind::Euclidean => 1.0,
            ModelKind::Hyperbolic => 1.0 / (self.kappa * x.0[self.dim - 1]),
        }
    }

    /// Frame factor f(x) = 1/c(x); the orthonormal frame is ε_i = f·∂_i.
    pub fn frame_factor(&self, x: &ChartPoint) -> f64 {
        match self.kind {
            ModelKind::Euclidean => 1.0,
            ModelKind::Hyperbolic => self.kappa * x.0[self.dim - 1],
        }
    }

    /// 2-jet of the frame factor (linear in the last coordinate).
    pub fn frame_factor_jet(&self, x: &ChartPoint) -> Jet2 {
        let n = self.dim;
        match self.kind {
            ModelKind::Euclidean => Jet2::constant(1.0, n),
            ModelKind::Hyperbolic => Jet2::var(x.0[n - 1], n - 1, n).scale(self.kappa),
        }
    }

    /// Metric 1-jet: g_{ij}, exact inverse, coordinate partials, √det g.
    pub fn metric_jet(&self, x: &ChartPoint) -> Result<MetricJet> {
        self.check_point(x)?;
        let n = self.dim;
        match self.kind {
            ModelKind::Euclidean => Ok(MetricJet {
                g: DMatrix::identity(n, n),
                ginv: DMatrix::identity(n, n),
                dg: vec![DMatrix::zeros(n, n); n],
                sqrt_det: 1.0,
            }),
            ModelKind::Hyperbolic => {
                let y = x.0[n - 1];
                let c2 = 1.0 / (self.kappa * self.kappa * y * y);
                let g = DMatrix::identity(n, n) * c2;
                let ginv = DMatrix::identity(n, n) / c2;
                let mut dg = vec![DMatrix::zeros(n, n); n];
                dg[n - 1] = DMatrix::identity(n, n) * (-2.0 * c2 / y);
                Ok(MetricJet {
                    g,
                    ginv,
                    dg,
                    sqrt_det: c2.powf(n as f64 / 2.0),
                })
            }
        }
    }

    /// Christoffel symbols Γ^l_{ij} from the defining formula
    /// ½ g^{lm} (∂_i g_{jm} + ∂_j g_{im} − ∂_m g_{ij}).
    ///
    /// Returned as one matrix per upper index l.
    pub fn christoffel(&self, x: &ChartPoint) -> Result<Vec<DMatrix<f64>>> {
        let m = self.metric_jet(x)?;
        let n = self.dim;
        let mut out = vec![DMatrix::zeros(n, n); n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for mm in 0..n {
                        s += m.ginv[(l, mm)]
                            * (m.dg[i][(j, mm)] + m.dg[j][(i, mm)] - m.dg[mm][(i, j)]);
                    }
                    out[l][(i, j)] = 0.5 * s;
                }
            }
        }
        Ok(out)
    }

    /// Christoffel symbols together with their coordinate partials
    /// (∂_d Γ^l_{ij}); closed form for both model spaces.
    pub fn christoffel_jet(&self, x: &ChartPoint) -> Result<(Vec<DMatrix<f64>>, Vec<Vec<DMatrix<f64>>>)> {
        let gamma = self.christoffel(x)?;
        let n = self.dim;
        let mut dgamma = vec![vec![DMatrix::zeros(n, n); n]; n];
        if let ModelKind::Hyperbolic = self.kind {
            // Γ ∝ 1/y, so ∂_y Γ = −Γ/y and all other partials vanish.
            let y = x.0[n - 1];
            for l in 0..n {
                dgamma[n - 1][l] = &gamma[l] * (-1.0 / y);
            }
        }
        Ok((gamma, dgamma))
    }

    /// 2-jet of the geodesic distance r = d(x₀, x).
    ///
    /// Euclidean: r = |x − x₀|. Hyperbolic: r = κ⁻¹·acosh(1 + w) with
    /// w = |x − x₀|² / (2·y·y₀), pushed through exact jets.
    pub fn distance_jet(&self, x0: &ChartPoint, x: &ChartPoint) -> Result<DistanceJet> {
        self.check_point(x0)?;
        self.check_point(x)?;
        let n = self.dim;
        let diff = &x.0 - &x0.0;
        let scale = 1.0 + x.0.norm();
        if diff.norm() <= 1e-14 * scale {
            return Err(Error::DegeneratePoint);
        }
        match self.kind {
            ModelKind::Euclidean => {
                let r = diff.norm();
                let grad = &diff / r;
                let hess = (DMatrix::identity(n, n) - &grad * grad.transpose()) / r;
                Ok(DistanceJet { r, grad, hess })
            }
            ModelKind::Hyperbolic => {
                let y0 = x0.0[n - 1];
                let vars = Jet2::vars(&x.0);
                let mut sq = Jet2::constant(0.0, n);
                for i in 0..n {
                    let d = vars[i].add_const(-x0.0[i]);
                    sq = sq + &d * &d;
                }
                let w = sq * (vars[n - 1].scale(2.0 * y0)).recip();
                let r = w.acosh1p().scale(1.0 / self.kappa);
                Ok(DistanceJet {
                    r: r.v,
                    grad: r.g,
                    hess: r.h,
                })
            }
        }
    }

    /// Covariant Hessian of ½r² and the comparison tensor g − ∇²(½r²),
    /// from the closed forms: zero comparison on flat space and
    /// (1 − κr·coth(κr))·g_r on hyperbolic space, with g_r = g − dr⊗dr.
    pub fn hessian_half_r2(&self, x0: &ChartPoint, x: &ChartPoint) -> Result<HessianHalfR2> {
        let dj = self.distance_jet(x0, x)?;
        let m = self.metric_jet(x)?;
        match self.kind {
            ModelKind::Euclidean => Ok(HessianHalfR2 {
                hess: m.g.clone(),
                comparison: DMatrix::zeros(self.dim, self.dim),
            }),
            ModelKind::Hyperbolic => {
                let rho = radial_comparison_factor(self.kappa * dj.r);
                let dr_dr = &dj.grad * dj.grad.transpose();
                let g_r = &m.g - &dr_dr;
                let comparison = &g_r * rho;
                Ok(HessianHalfR2 {
                    hess: &m.g - &comparison,
                    comparison,
                })
            }
        }
    }

    /// Covariant Hessian of ½r² computed from the distance 2-jet instead of
    /// the closed form: ∂∂(½r²) − Γ·∂(½r²). Used to cross-check
    /// [`Self::hessian_half_r2`].
    pub fn hessian_half_r2_from_jets(&self, x0: &ChartPoint, x: &ChartPoint) -> Result<DMatrix<f64>> {
        let dj = self.distance_jet(x0, x)?;
        let gamma = self.christoffel(x)?;
        let n = self.dim;
        // ∂(½r²) = r ∂r, ∂∂(½r²) = ∂r⊗∂r + r ∂∂r
        let grad_half = &dj.grad * dj.r;
        let mut hess = &dj.grad * dj.grad.transpose() + &dj.hess * dj.r;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += gamma[l][(i, j)] * grad_half[l];
                }
                hess[(i, j)] -= s;
            }
        }
        Ok(hess)
    }

    /// Comparison-tensor bounds on the ball of radius `r_max`, plus the
    /// monotonicity constant Λ = −½·(kp·Λ̲⁻ − (n−1)·Λ̄)₋ for the given
    /// form degree k and exponent p.
    ///
    /// Euclidean: Λ̲ = Λ̄ = Λ = 0. Hyperbolic: Λ̄ = 0 and Λ̲ is the minimum
    /// of the sampled radial factor ρ(κr) = 1 − κr·coth(κr) on (0, r_max]
    /// (ρ is strictly decreasing, so the minimum sits at r = r_max),
    /// expressed in the r²-scaled form Λ̲ = ρ(κ·r_max)/r_max².
    pub fn geometry_bounds(&self, r_max: f64, k: usize, p: f64) -> Result<GeometryBounds> {
        let n = self.dim;
        let kp = k as f64 * p;
        if !(r_max > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {r_max}")));
        }
        if (n as f64) <= kp {
            return Err(Error::InvalidConfig(format!(
                "geometry bounds require dimension n > k·p (n = {n}, k·p = {kp})"
            )));
        }
        let (lambda_lower, lambda_upper) = match self.kind {
            ModelKind::Euclidean => (0.0, 0.0),
            ModelKind::Hyperbolic => {
                let samples = 256;
                let mut min_factor = f64::INFINITY;
                for q in 1..=samples {
                    let r = r_max * q as f64 / samples as f64;
                    min_factor = min_factor.min(radial_comparison_factor(self.kappa * r));
                }
                (min_factor / (r_max * r_max), 0.0)
            }
        };
        let lambda = -0.5 * (kp * lambda_lower.min(0.0) - (n as f64 - 1.0) * lambda_upper).min(0.0);
        Ok(GeometryBounds {
            lambda_lower,
            lambda_upper,
            lambda,
            radius: r_max,
        })
    }

    /// Geodesic from x₀ with unit initial direction `v` (components in the
    /// orthonormal frame at x₀), evaluated at arclength s ≥ 0.
    ///
    /// Hyperbolic geodesics are computed in the 2-plane spanned by the
    /// vertical direction and the horizontal part of v, via the standard
    /// Möbius parametrisation of the half-plane.
    pub fn exp_map(&self, x0: &ChartPoint, s: f64, v: &DVector<f64>) -> ChartPoint {
        let n = self.dim;
        debug_assert_eq!(v.len(), n);
        match self.kind {
            ModelKind::Euclidean => ChartPoint(&x0.0 + v * s),
            ModelKind::Hyperbolic => {
                let y0 = x0.0[n - 1];
                let t = self.kappa * s; // arclength in the curvature −1 scaling
                let vy = v[n - 1];
                let mut horiz = v.rows(0, n - 1).into_owned();
                let eta = horiz.norm();
                let mut out = x0.0.clone();
                if eta < 1e-14 {
                    out[n - 1] = y0 * (vy.signum() * t).exp();
                    return ChartPoint(out);
                }
                horiz /= eta;
                // half-plane geodesic from (0, y0) with frame direction
                // (cos α, sin α) = (η, v_y): z(t) = y0·(i e^t cos φ + sin φ)
                // / (−i e^t sin φ + cos φ), φ = (α − π/2)/2
                let alpha = vy.atan2(eta);
                let phi = 0.5 * (alpha - std::f64::consts::FRAC_PI_2);
                let (sp, cp) = phi.sin_cos();
                let e = t.exp();
                // complex division (num_re + i num_im) / (den_re + i den_im)
                let (num_re, num_im) = (sp, e * cp);
                let (den_re, den_im) = (cp, -e * sp);
                let den_sq = den_re * den_re + den_im * den_im;
                let u = y0 * (num_re * den_re + num_im * den_im) / den_sq;
                let y = y0 * (num_im * den_re - num_re * den_im) / den_sq;
                for i in 0..n - 1 {
                    out[i] = x0.0[i] + u * horiz[i];
                }
                out[n - 1] = y;
                ChartPoint(out)
            }
        }
    }

    /// Geodesic polar volume factor: the area element of the geodesic
    /// sphere of radius s is jac(s)·dσ(v) with jac = s^{n−1} (flat) or
    /// (sinh(κs)/κ)^{n−1} (hyperbolic).
    pub fn polar_jacobian(&self, s: f64) -> f64 {
        let m = (self.dim - 1) as i32;
        match self.kind {
            ModelKind::Euclidean => s.powi(m),
            ModelKind::Hyperbolic => ((self.kappa * s).sinh() / self.kappa).powi(m),
        }
    }

    /// Exact volume of the geodesic ball of radius r.
    pub fn ball_volume(&self, r: f64) -> f64 {
        let n = self.dim;
        match self.kind {
            ModelKind::Euclidean => unit_ball_volume(n) * r.powi(n as i32),
            ModelKind::Hyperbolic => {
                let m = n - 1;
                unit_sphere_area(n) * sinh_power_integral(m, self.kappa * r)
                    / self.kappa.powi(m as i32 + 1)
            }
        }
    }

    /// Exact area of the geodesic sphere of radius r.
    pub fn sphere_area(&self, r: f64) -> f64 {
        unit_sphere_area(self.dim) * self.polar_jacobian(r)
    }
}

/// Volume of the unit ball in ℝⁿ via ω₀ = 1, ω₁ = 2, ωₙ = 2π ωₙ₋₂ / n.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI * unit_ball_volume(n - 2) / n as f64,
    }
}

/// Area of the unit sphere S^{n−1} ⊂ ℝⁿ.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// ∫₀^z sinh^m(t) dt by the standard reduction formula.
pub fn sinh_power_integral(m: usize, z: f64) -> f64 {
    match m {
        0 => z,
        1 => z.cosh() - 1.0,
        _ => {
            let mf = m as f64;
            (z.sinh().powi(m as i32 - 1) * z.cosh() - (mf - 1.0) * sinh_power_integral(m - 2, z))
                / mf
        }
    }
}

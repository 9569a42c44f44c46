//! Forward-mode scalar jets.
//!
//! `Dual` carries a value together with its coordinate gradient; `Jet2`
//! additionally carries the (symmetric) Hessian. Field suppliers build
//! exact 2-jets compositionally out of `Jet2` arithmetic, while pointwise
//! formulas (stress tensor components, squared norms) are differentiated
//! once by evaluating them in `Dual` arithmetic instead of differencing
//! their outputs.
//!
//! Finite-difference fallbacks with Richardson extrapolation live at the
//! bottom of the module; they are used by suppliers without closed-form
//! jets and by the jet self-tests.

use nalgebra::{DMatrix, DVector};

/// First-order jet: value and gradient with respect to chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: DVector<f64>,
}

/// Second-order jet: value, gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
}

impl Dual {
    pub fn constant(v: f64, n: usize) -> Self {
        Dual {
            v,
            g: DVector::zeros(n),
        }
    }

    /// Seed the i-th coordinate variable.
    pub fn var(v: f64, i: usize, n: usize) -> Self {
        let mut g = DVector::zeros(n);
        g[i] = 1.0;
        Dual { v, g }
    }

    pub fn vars(x: &DVector<f64>) -> Vec<Dual> {
        (0..x.len()).map(|i| Dual::var(x[i], i, x.len())).collect()
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Chain rule through a scalar function with known derivative.
    pub fn chain(&self, f: f64, df: f64) -> Self {
        Dual {
            v: f,
            g: &self.g * df,
        }
    }

    pub fn recip(&self) -> Self {
        self.chain(1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn powf(&self, p: f64) -> Self {
        self.chain(self.v.powf(p), p * self.v.powf(p - 1.0))
    }

    pub fn powi(&self, p: i32) -> Self {
        self.chain(self.v.powi(p), f64::from(p) * self.v.powi(p - 1))
    }

    pub fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    pub fn scale(&self, c: f64) -> Self {
        Dual {
            v: self.v * c,
            g: &self.g * c,
        }
    }
}

impl Jet2 {
    pub fn constant(v: f64, n: usize) -> Self {
        Jet2 {
            v,
            g: DVector::zeros(n),
            h: DMatrix::zeros(n, n),
        }
    }

    /// Seed the i-th coordinate variable.
    pub fn var(v: f64, i: usize, n: usize) -> Self {
        let mut g = DVector::zeros(n);
        g[i] = 1.0;
        Jet2 {
            v,
            g,
            h: DMatrix::zeros(n, n),
        }
    }

    /// Seed all coordinates of a chart point.
    pub fn vars(x: &DVector<f64>) -> Vec<Jet2> {
        (0..x.len()).map(|i| Jet2::var(x[i], i, x.len())).collect()
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn dual(&self) -> Dual {
        Dual {
            v: self.v,
            g: self.g.clone(),
        }
    }

    /// Chain rule through f with f' = df and f'' = ddf at self.v.
    pub fn chain(&self, f: f64, df: f64, ddf: f64) -> Self {
        Jet2 {
            v: f,
            g: &self.g * df,
            h: &self.h * df + (&self.g * self.g.transpose()) * ddf,
        }
    }

    pub fn recip(&self) -> Self {
        let v = self.v;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powf(&self, p: f64) -> Self {
        let v = self.v;
        self.chain(
            v.powf(p),
            p * v.powf(p - 1.0),
            p * (p - 1.0) * v.powf(p - 2.0),
        )
    }

    pub fn powi(&self, p: i32) -> Self {
        let v = self.v;
        let pf = f64::from(p);
        self.chain(
            v.powi(p),
            pf * v.powi(p - 1),
            pf * (pf - 1.0) * v.powi(p - 2),
        )
    }

    pub fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.v;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    /// acosh(1 + w) evaluated on a jet of w ≥ 0, stable near w = 0 where
    /// the naive form loses both the value and the derivatives.
    ///
    /// Derivatives: d/dw acosh(1+w) = (w² + 2w)^(−1/2),
    /// d²/dw² = −(1+w)·(w² + 2w)^(−3/2).
    pub fn acosh1p(&self) -> Self {
        let w = self.v;
        let s = (w * (w + 2.0)).sqrt();
        let f = (w + s).ln_1p();
        self.chain(f, 1.0 / s, -(1.0 + w) / (s * s * s))
    }

    pub fn scale(&self, c: f64) -> Self {
        Jet2 {
            v: self.v * c,
            g: &self.g * c,
            h: &self.h * c,
        }
    }

    pub fn add_const(&self, c: f64) -> Self {
        Jet2 {
            v: self.v + c,
            g: self.g.clone(),
            h: self.h.clone(),
        }
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $ty:ident, $f:expr) => {
        impl std::ops::$trait<$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                $f(&self, &rhs)
            }
        }
        impl std::ops::$trait<&$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                $f(&self, rhs)
            }
        }
        impl std::ops::$trait<$ty> for &$ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                $f(self, &rhs)
            }
        }
        impl std::ops::$trait<&$ty> for &$ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                $f(self, rhs)
            }
        }
    };
}

fn dual_add(a: &Dual, b: &Dual) -> Dual {
    Dual {
        v: a.v + b.v,
        g: &a.g + &b.g,
    }
}

fn dual_sub(a: &Dual, b: &Dual) -> Dual {
    Dual {
        v: a.v - b.v,
        g: &a.g - &b.g,
    }
}

fn dual_mul(a: &Dual, b: &Dual) -> Dual {
    Dual {
        v: a.v * b.v,
        g: &a.g * b.v + &b.g * a.v,
    }
}

fn dual_div(a: &Dual, b: &Dual) -> Dual {
    dual_mul(a, &b.recip())
}

impl_binop!(Add, add, Dual, dual_add);
impl_binop!(Sub, sub, Dual, dual_sub);
impl_binop!(Mul, mul, Dual, dual_mul);
impl_binop!(Div, div, Dual, dual_div);

impl std::ops::Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.scale(-1.0)
    }
}

impl std::ops::Neg for &Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.scale(-1.0)
    }
}

fn jet2_add(a: &Jet2, b: &Jet2) -> Jet2 {
    Jet2 {
        v: a.v + b.v,
        g: &a.g + &b.g,
        h: &a.h + &b.h,
    }
}

fn jet2_sub(a: &Jet2, b: &Jet2) -> Jet2 {
    Jet2 {
        v: a.v - b.v,
        g: &a.g - &b.g,
        h: &a.h - &b.h,
    }
}

fn jet2_mul(a: &Jet2, b: &Jet2) -> Jet2 {
    let cross = &a.g * b.g.transpose();
    Jet2 {
        v: a.v * b.v,
        g: &a.g * b.v + &b.g * a.v,
        h: &a.h * b.v + &b.h * a.v + &cross + cross.transpose(),
    }
}

fn jet2_div(a: &Jet2, b: &Jet2) -> Jet2 {
    jet2_mul(a, &b.recip())
}

impl_binop!(Add, add, Jet2, jet2_add);
impl_binop!(Sub, sub, Jet2, jet2_sub);
impl_binop!(Mul, mul, Jet2, jet2_mul);
impl_binop!(Div, div, Jet2, jet2_div);

impl std::ops::Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl std::ops::Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

/// Central difference with one Richardson step (h and h/2).
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    (4.0 * d2 - d1) / 3.0
}

/// Second central difference with one Richardson step.
pub fn central_diff2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let at = |s: f64| (f(x + s) - 2.0 * f(x) + f(x - s)) / (s * s);
    let d1 = at(h);
    let d2 = at(0.5 * h);
    (4.0 * d2 - d1) / 3.0
}

/// Five-point central first derivative, error O(h⁴).
pub fn five_point_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

//! Numerical verification toolkit for the energy-momentum tensor of
//! p-harmonic vector-bundle-valued k-forms on model Riemannian spaces.
//!
//! The crate evaluates the exterior covariant calculus of bundle-valued
//! forms (`d^∇`, `δ^∇`, the p-weighted codifferential), builds the
//! energy-momentum tensor `T` of the energy density `e(ψ) = |ψ|^p / p`,
//! and checks — pointwise and by geodesic-ball quadrature — the identities
//! that the tensor satisfies:
//!
//! * the divergence formula relating `div T` to `δ^∇(|ψ|^{p−2}ψ)` and `d^∇ψ`,
//! * the conservation law `div T = 0` for p-harmonic fields,
//! * the trace identity `tr_g T = (kp − n) e(ψ)`,
//! * the contraction rule `div ι_X S = ⟨S, ∇X♭⟩ + ι_X div S`,
//! * the radial monotonicity identity for ball averages of the energy,
//!   its inhomogeneous variant, and the Yang-Mills-Higgs analogue.
//!
//! Supported geometries are Euclidean space and hyperbolic upper half-space
//! (constant curvature `−κ²`), where distance, Hessian comparison and polar
//! volume data are available in closed form.
//!
//! The `book/` directory of the repository contains a guide with worked
//! examples; its code snippets are compiled as doc-tests.

pub mod calculus;
pub mod catalog;
pub mod error;
pub mod forms;
pub mod integrate;
pub mod jet;
pub mod manifold;
pub mod stress;
pub mod ymh;

pub use error::{Error, Result};

//! Compiles the guide in `book/` as rustdoc doc-tests.
//!
//! mdBook renders the chapters but cannot execute their Rust snippets
//! against the workspace crates; including each chapter as a module doc
//! makes `cargo test --doc` run every code block, keeping the book and the
//! library in sync. One module per chapter so a failure names its origin.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model-spaces.md")]
pub mod model_spaces {}

#[doc = include_str!("../../../book/src/forms-and-operators.md")]
pub mod forms_and_operators {}

#[doc = include_str!("../../../book/src/stress-tensor.md")]
pub mod stress_tensor {}

#[doc = include_str!("../../../book/src/ball-quadrature.md")]
pub mod ball_quadrature {}

#[doc = include_str!("../../../book/src/monotonicity.md")]
pub mod monotonicity {}

#[doc = include_str!("../../../book/src/yang-mills-higgs.md")]
pub mod yang_mills_higgs {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}

// SPDX-License-Identifier: Apache-2.0

//! Numerical verification toolkit for indefinite globally framed
//! f-manifolds (g.f.f.-manifolds) and indefinite S-manifolds.
//!
//! The crate is layered:
//!
//! * [`tensor`] – metrics and tensors in one tangent space, index
//!   gymnastics, indefinite orthonormalisation.
//! * [`gff`] – algebraic structure `(φ, ξ_α, η^α, g)` at a point, axiom
//!   residuals and adapted frames.
//! * [`spaceform`] – the model curvature tensor of constant φ-sectional
//!   curvature, sectional curvatures, Ricci, the η-Einstein fit.
//! * [`chart`] – structures given by closed-form component fields, their
//!   connection and curvature by automatic differentiation, and the S-gates.
//! * [`schur`] – Schur-type constancy checks over sampled points.

// Tensor code indexes several arrays with the same component index.
#![allow(clippy::needless_range_loop)]

pub mod chart;
pub mod error;
pub mod gff;
pub mod scalar;
pub mod schur;
pub mod spaceform;
pub mod tensor;
pub mod tolerance;

pub use error::{GeomError, Result};
pub use tensor::{MetricAtPoint, Sign, TensorAtPoint, Variance};

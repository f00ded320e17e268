// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error(
        "metric is degenerate (smallest singular value {smallest:.3e} relative to {largest:.3e})"
    )]
    DegenerateMetric { smallest: f64, largest: f64 },

    #[error("metric is not symmetric (max deviation {deviation:.3e})")]
    AsymmetricMetric { deviation: f64 },

    #[error("declared signature ({declared_pos}, {declared_neg}) does not match eigenvalue signs ({pos}, {neg})")]
    SignatureMismatch {
        declared_pos: usize,
        declared_neg: usize,
        pos: usize,
        neg: usize,
    },

    #[error("slot {slot} out of range for a tensor of rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },

    #[error("slot {slot} has the wrong variance for this operation")]
    WrongVariance { slot: usize },

    #[error("span is degenerate for the metric after exhausting all pivots ({found} of {wanted} frame vectors built)")]
    DegenerateSpan { found: usize, wanted: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("structure does not match the requested parameters: {0}")]
    StructureMismatch(String),

    #[error("plane is degenerate (|Δ| = {delta:.3e})")]
    DegeneratePlane { delta: f64 },

    #[error("vector is not in Im(φ) (projector residual {residual:.3e})")]
    NotInImagePhi { residual: f64 },

    #[error("vector is lightlike (g(x,x) = {norm:.3e})")]
    LightlikeVector { norm: f64 },

    #[error("frame is not orthonormal for the curvature's metric (residual {residual:.3e})")]
    FrameMismatch { residual: f64 },

    #[error("least-squares design is singular: g(φ·,φ·) and η̄⊗η̄ are linearly dependent")]
    SingularDesign,

    #[error("unknown built-in example '{0}'")]
    UnknownExample(String),

    #[error("gate failure: {0}")]
    GateFailure(String),

    #[error("point lies outside the chart domain")]
    OutsideDomain,

    #[error("expression error: {0}")]
    Expression(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

// SPDX-License-Identifier: Apache-2.0

//! Run-wide numerical thresholds.

use serde::{Deserialize, Serialize};

/// Algebraic identities on a single tangent space.
pub const ALGEBRAIC: f64 = 1e-10;

/// Chart-level identities computed through nested AD.
pub const DIFFERENTIAL: f64 = 1e-6;

/// Field-level S-gates (normality, almost-S, ∇φ, ∇ξ, Killing).
pub const GATE: f64 = 1e-7;

/// Third-order quantities (Schur scans, contracted Bianchi identity).
pub const SCHUR: f64 = 1e-5;

/// Smallest singular value, relative to the largest, below which a metric
/// counts as degenerate.
pub const DEGENERACY: f64 = 1e-9;

/// Number of random argument tuples per randomized identity check.
pub const SAMPLES_PER_IDENTITY: usize = 64;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub differential: f64,
    pub schur: f64,
    pub gate: f64,
    pub degeneracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: ALGEBRAIC,
            differential: DIFFERENTIAL,
            schur: SCHUR,
            gate: GATE,
            degeneracy: DEGENERACY,
        }
    }
}

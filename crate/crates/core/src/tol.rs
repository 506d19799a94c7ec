//! Tolerance policy shared by the whole crate.
//!
//! Three levels, by provenance of the numbers being compared:
//! exact algebra, closed-form evaluations, optimization-derived values.
//! Inequality checks allow additive slack equal to the comparison
//! tolerance; a sampled check only *fails* when the violation exceeds
//! ten times that slack, so bracket slack never produces false alarms.

use serde::{Deserialize, Serialize};

/// Exact linear algebra (reconstruction identities, idempotence).
pub const EXACT: f64 = 1e-12;

/// Closed-form comparisons (norm formulas versus direct evaluation).
pub const CLOSED: f64 = 1e-9;

/// Optimization-derived comparisons (bracket endpoints from search).
pub const OPT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub exact: f64,
    pub closed: f64,
    pub opt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: EXACT, closed: CLOSED, opt: OPT }
    }
}

impl Tolerances {
    /// Failure threshold for a sampled inequality check at slack `tol`.
    pub fn violation_threshold(tol: f64) -> f64 {
        10.0 * tol
    }
}

//! Pass thresholds, one per derivative order.

/// Purely algebraic identities (no derivatives involved).
pub const ALGEBRAIC: f64 = 1e-12;
/// Identities involving first or second derivatives of the structure.
pub const DIFFERENTIAL: f64 = 1e-9;
/// Agreement with central finite-difference oracles (relative).
pub const FINITE_DIFFERENCE: f64 = 1e-5;
/// Central-difference step used by oracles.
pub const FD_STEP: f64 = 1e-5;
/// Below this |k| a vertical potential counts as vanishing.
pub const NONZERO_POTENTIAL: f64 = 1e-9;
/// A tensor with all components below this is treated as zero.
pub const ZERO_TENSOR: f64 = 1e-12;
/// Norm bound on the generating form for "γ = 0".
pub const GENERATING_FORM_ZERO: f64 = 1e-10;

/// |a − b| / max(1, |a|, |b|)
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Thresholds in force for one run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub differential: f64,
    pub finite_difference: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: ALGEBRAIC,
            differential: DIFFERENTIAL,
            finite_difference: FINITE_DIFFERENCE,
        }
    }
}

impl Tolerances {
    /// One threshold for every check.
    pub fn uniform(t: f64) -> Self {
        Self {
            algebraic: t,
            differential: t,
            finite_difference: t,
        }
    }
}

//! Reference detectors used to validate the closed-form metrics.
//!
//! [`quadrature`] integrates the exact likelihood over the phase-error PDF.
//! [`discrete_map`] runs forward-backward over a discretized Wiener phase.

pub mod discrete_map;
pub mod quadrature;

pub use discrete_map::{discrete_map_detect, MapOutput, PhaseGrid};
pub use quadrature::{quadrature_ml, PhasePdf, QuadratureMl};

/// Terms this far below the maximum underflow to zero after `exp`.
const UNDERFLOW_GAP: f64 = 746.0;

/// `ln Σ exp(x)` with max subtraction; `-inf` for an empty or all `-inf` input.
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = xs
        .filter(|&x| x - max > -UNDERFLOW_GAP)
        .map(|x| (x - max).exp())
        .sum();
    max + sum.ln()
}

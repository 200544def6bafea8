//! Closed-form symbol error probability of the Gaussian-phase (GAP) detector.
//!
//! For a transmitted `s_i`, the cost difference `η_ij` between hypotheses `i`
//! and `j` is approximately Gaussian. Its mean and variance are functions of
//!
//! ```text
//! a_ij = (|s_i| - |s_j|)² / (N0/2)
//! b_ij = Δarg² / (σ_p² + N0/(2|s_j|²))
//! c_ij = (σ_p² + N0/(2|s_i|²)) / (σ_p² + N0/(2|s_j|²))
//! y_ij = log((|s_i|² σ_p² + N0/2) / (|s_j|² σ_p² + N0/2))
//! E[η]   = 1 - (a + b + c)
//! Var[η] = 2 + 4a + 2c² + 4bc - 4c
//! ```
//!
//! and the pairwise error probability is `Q((y - E[η]) / √Var[η])`. The
//! union bound averages the pairwise terms over all ordered pairs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::error::{invalid, Error, Result};
use crate::phase::wrap;

/// Gaussian tail probability `Q(x) = P(Z > x) = erfc(x/√2)/2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseStats {
    pub a_ij: f64,
    pub b_ij: f64,
    pub c_ij: f64,
    pub y_ij: f64,
    pub mean_eta: f64,
    pub var_eta: f64,
}

impl PairwiseStats {
    /// Argument of the Q-function for this pair.
    pub fn q_argument(&self) -> f64 {
        (self.y_ij - self.mean_eta) / self.var_eta.sqrt()
    }
}

fn check_pair_inputs(amp_i: f64, amp_j: f64, n0: f64, sigma_p2: f64) -> Result<()> {
    if !(amp_i > 0.0 && amp_j > 0.0) {
        return Err(invalid("symbol", "amplitudes must be positive"));
    }
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(invalid("n0", format!("must be positive, got {n0}")));
    }
    if !(sigma_p2 >= 0.0 && sigma_p2.is_finite()) {
        return Err(invalid("sigma_p2", format!("must be non-negative, got {sigma_p2}")));
    }
    Ok(())
}

/// Statistics of `η_ij` given `s_i` transmitted.
pub fn pairwise_stats(
    s_i: Complex64,
    s_j: Complex64,
    n0: f64,
    sigma_p2: f64,
) -> Result<PairwiseStats> {
    let (amp_i, amp_j) = (s_i.norm(), s_j.norm());
    check_pair_inputs(amp_i, amp_j, n0, sigma_p2)?;
    Ok(stats_polar(amp_i, s_i.arg(), amp_j, s_j.arg(), n0, sigma_p2))
}

fn stats_polar(amp_i: f64, arg_i: f64, amp_j: f64, arg_j: f64, n0: f64, sp2: f64) -> PairwiseStats {
    let half = n0 / 2.0;
    let var_i = sp2 + half / (amp_i * amp_i);
    let var_j = sp2 + half / (amp_j * amp_j);
    let d_arg = wrap(arg_i - arg_j);
    let a = (amp_i - amp_j).powi(2) / half;
    let b = d_arg * d_arg / var_j;
    let c = var_i / var_j;
    let y = ((amp_i * amp_i * sp2 + half) / (amp_j * amp_j * sp2 + half)).ln();
    PairwiseStats {
        a_ij: a,
        b_ij: b,
        c_ij: c,
        y_ij: y,
        mean_eta: 1.0 - (a + b + c),
        var_eta: 2.0 + 4.0 * a + 2.0 * c * c + 4.0 * b * c - 4.0 * c,
    }
}

/// One draw of `η_ij` (without the `y_ij` offset) from the linearized
/// polar model `|r| = |s_i| + Re n'`, `arg r = Im n'/|s_i| + θ + arg s_i`,
/// with `n' ~ CN(0, N0)` and `θ ~ N(0, σ_p²)`.
///
/// Its exact mean and variance are `mean_eta` and `var_eta` of
/// [`pairwise_stats`].
pub fn sample_eta<R: Rng + ?Sized>(s_i: Complex64, s_j: Complex64, n0: f64, sigma_p2: f64, rng: &mut R) -> f64 {
    let (amp_i, amp_j) = (s_i.norm(), s_j.norm());
    let half = n0 / 2.0;
    let var_i = sigma_p2 + half / (amp_i * amp_i);
    let var_j = sigma_p2 + half / (amp_j * amp_j);
    let d_arg = wrap(s_i.arg() - s_j.arg());
    let n_re = half.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let n_im = half.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let theta = sigma_p2.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let d_amp = amp_i - amp_j;
    let v1 = (2.0 * d_amp * n_re + d_amp * d_amp) / half;
    let x = n_im / amp_i + theta;
    let v2 = x * x / var_i;
    let v3 = (x + d_arg).powi(2) / var_j;
    -v1 + v2 - v3
}

/// Pairwise error matrix, union bound and error floor for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SepBound {
    /// `per_pair[i][j]`, zero on the diagonal.
    pub per_pair: Vec<Vec<f64>>,
    pub total: f64,
    pub floor: f64,
}

/// Union bound on the GAP detector's SEP.
pub fn union_bound(constellation: &Constellation, n0: f64, sigma_p2: f64) -> Result<SepBound> {
    let m = constellation.len();
    let amps = constellation.amplitudes();
    let args = constellation.phases();
    check_pair_inputs(amps.iter().cloned().fold(f64::INFINITY, f64::min), 1.0, n0, sigma_p2)?;

    let per_pair: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        return Ok(0.0);
                    }
                    let st = stats_polar(amps[i], args[i], amps[j], args[j], n0, sigma_p2);
                    if st.var_eta.is_finite() && st.var_eta > 0.0 {
                        Ok(q_function(st.q_argument()))
                    } else {
                        Err(Error::DegeneratePair {
                            i,
                            j,
                            var: st.var_eta,
                        })
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let total = per_pair.iter().flatten().sum::<f64>() / m as f64;
    let floor = if sigma_p2 > 0.0 {
        error_floor(constellation, sigma_p2)?
    } else {
        0.0
    };
    Ok(SepBound {
        per_pair,
        total,
        floor,
    })
}

/// High-SNR limit of the union bound: only equal-amplitude pairs survive,
/// each contributing `Q(|Δarg| / (2 σ_p))`.
pub fn error_floor(constellation: &Constellation, sigma_p2: f64) -> Result<f64> {
    if !(sigma_p2 > 0.0 && sigma_p2.is_finite()) {
        return Err(invalid("sigma_p2", format!("must be positive, got {sigma_p2}")));
    }
    let sigma_p = sigma_p2.sqrt();
    let args = constellation.phases();
    let m = constellation.len();
    let mut sum = 0.0;
    for ring in constellation.rings() {
        for &i in &ring.members {
            for &j in &ring.members {
                if i != j {
                    sum += q_function(wrap(args[j] - args[i]).abs() / (2.0 * sigma_p));
                }
            }
        }
    }
    Ok(sum / m as f64)
}

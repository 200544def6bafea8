//! Symbol-by-symbol soft metrics for phase-compensated observations.
//!
//! Each metric scores a hypothesis `s_i` for the compensated sample
//! `r = s e^{jθ} + n`, where the residual phase error `θ` has variance `σ_p²`
//! known to the detector. The metric functions reproduce the decision rules
//! exactly as derived; [`soft_decide`] turns them into a-posteriori symbol
//! probabilities.
//!
//! | kind | rule                                                                 |
//! |------|----------------------------------------------------------------------|
//! | EUC  | `-|r - s|²`                                                          |
//! | FOS  | `-|s|²/2 + √((Re{r s*} + N0/σ_p²)² + Im{r s*}²)` (Tikhonov phase PDF) |
//! | VB   | `-|r - s|² + |s|² σ_p² / 2`                                          |
//! | GAP  | amplitude/phase cost under a Gaussian phase PDF (smaller is better)  |
//! | TSD  | nearest amplitude ring, then nearest phase inside it                 |
//! | SOM  | `f(θ̂) + f''(θ̂) σ_p² / 2`, second-order moment series of the likelihood |
//!
//! Posteriors are normalized exponentials of log-likelihoods. The metrics are
//! defined only up to a positive scale, so each is rescaled to a
//! log-likelihood under `CN(0, N0)` noise before exponentiation: EUC and VB
//! by `1/N0`, FOS by `2/N0` (large-argument Bessel form), GAP by `-1/2` (its
//! cost is a doubled negative log-density), SOM through the log of its value.
//! Scaling never changes the hard decision.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{invalid, Error, Result};
use crate::phase::wrap;

/// Default lower clip for SOM values before normalization.
pub const DEFAULT_SOM_FLOOR: f64 = 1e-300;

/// A compensated observation together with the statistics the detector knows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedSample {
    pub r: Complex64,
    /// Complex AWGN variance, `E|n|² = N0`.
    pub n0: f64,
    /// Variance of the residual phase error, rad².
    pub sigma_p2: f64,
}

impl ReceivedSample {
    pub fn new(r: Complex64, n0: f64, sigma_p2: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(invalid("n0", format!("must be positive and finite, got {n0}")));
        }
        if !(sigma_p2 >= 0.0 && sigma_p2.is_finite()) {
            return Err(invalid("sigma_p2", format!("must be non-negative, got {sigma_p2}")));
        }
        Ok(Self { r, n0, sigma_p2 })
    }
}

/// Per-symbol probabilities and the resulting hard decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftDecision {
    /// Log-likelihood of every hypothesis (up to a common constant).
    pub log_metrics: Vec<f64>,
    pub posteriors: Vec<f64>,
    pub hard_index: usize,
    /// Set when `r = 0`, where `arg r` is taken as 0.
    pub zero_observation: bool,
}

impl SoftDecision {
    /// Posterior mean `Σ s P(s)`.
    pub fn soft_symbol(&self, constellation: &Constellation) -> Complex64 {
        constellation
            .points()
            .iter()
            .zip(&self.posteriors)
            .map(|(s, p)| s * p)
            .sum()
    }

    fn one_hot(size: usize, index: usize, zero_observation: bool) -> Self {
        let mut log_metrics = vec![f64::NEG_INFINITY; size];
        let mut posteriors = vec![0.0; size];
        log_metrics[index] = 0.0;
        posteriors[index] = 1.0;
        Self {
            log_metrics,
            posteriors,
            hard_index: index,
            zero_observation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "EUC")]
    Euc,
    #[serde(rename = "FOS")]
    Fos,
    #[serde(rename = "VB")]
    Vb,
    #[serde(rename = "GAP")]
    Gap,
    #[serde(rename = "TSD")]
    Tsd,
    #[serde(rename = "SOM")]
    Som,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::Euc,
        DetectorKind::Fos,
        DetectorKind::Vb,
        DetectorKind::Gap,
        DetectorKind::Tsd,
        DetectorKind::Som,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Euc => "EUC",
            DetectorKind::Fos => "FOS",
            DetectorKind::Vb => "VB",
            DetectorKind::Gap => "GAP",
            DetectorKind::Tsd => "TSD",
            DetectorKind::Som => "SOM",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let upper = upper.strip_suffix("-D").unwrap_or(&upper);
        Self::ALL
            .into_iter()
            .find(|k| k.name() == upper || (upper == "TS" && *k == DetectorKind::Tsd))
            .ok_or_else(|| invalid("detector", format!("unknown detector `{s}`")))
    }
}

/// Knobs for [`soft_decide`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecideOptions {
    /// Keep GAP's `log(σ_p² + N0/(2|s|²))` term.
    pub include_log_term: bool,
    /// SOM values below this are clipped before normalization.
    pub som_floor: f64,
    /// Expansion point of the SOM series (mean phase error).
    pub theta_hat: f64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        Self {
            include_log_term: true,
            som_floor: DEFAULT_SOM_FLOOR,
            theta_hat: 0.0,
        }
    }
}

pub fn euc_metric(sample: &ReceivedSample, s: Complex64) -> f64 {
    -(sample.r - s).norm_sqr()
}

/// Tikhonov-PDF detector, implemented term for term as printed.
pub fn fos_metric(sample: &ReceivedSample, s: Complex64) -> Result<f64> {
    if sample.sigma_p2 <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let rs = sample.r * s.conj();
    let v = (rs.re + sample.n0 / sample.sigma_p2).hypot(rs.im);
    Ok(-s.norm_sqr() / 2.0 + v)
}

pub fn vb_metric(sample: &ReceivedSample, s: Complex64) -> f64 {
    -(sample.r - s).norm_sqr() + s.norm_sqr() / 2.0 * sample.sigma_p2
}

/// Joint amplitude-phase cost under a Gaussian phase-error PDF; smaller is
/// better. The phase difference is wrapped to `[-π, π)` and `arg 0 = 0`.
pub fn gap_metric(sample: &ReceivedSample, s: Complex64, include_log_term: bool) -> f64 {
    gap_cost(sample, s.norm(), s.arg(), include_log_term)
}

#[inline]
fn gap_cost(sample: &ReceivedSample, amp: f64, arg: f64, include_log_term: bool) -> f64 {
    let r_amp = sample.r.norm();
    let r_arg = if r_amp == 0.0 { 0.0 } else { sample.r.arg() };
    let half_n0 = sample.n0 / 2.0;
    let phase_var = sample.sigma_p2 + half_n0 / (amp * amp);
    let d = wrap(r_arg - arg);
    let cost = (r_amp - amp).powi(2) / half_n0 + d * d / phase_var;
    if include_log_term {
        cost + phase_var.ln()
    } else {
        cost
    }
}

/// Two-step detector: pick the amplitude ring nearest `|r|`, then the
/// ring member nearest in phase. Ties go to the lower ring / lower index.
pub fn tsd_detect(sample: &ReceivedSample, constellation: &Constellation) -> SoftDecision {
    let r_amp = sample.r.norm();
    let zero = r_amp == 0.0;
    let r_arg = if zero { 0.0 } else { sample.r.arg() };
    let ring = constellation
        .rings()
        .iter()
        .min_by(|a, b| (r_amp - a.amplitude).abs().total_cmp(&(r_amp - b.amplitude).abs()))
        .expect("constellation has rings");
    let phases = constellation.phases();
    let best = ring
        .members
        .iter()
        .copied()
        .min_by(|&a, &b| {
            wrap(r_arg - phases[a])
                .abs()
                .total_cmp(&wrap(r_arg - phases[b]).abs())
        })
        .expect("ring has members");
    SoftDecision::one_hot(constellation.len(), best, zero)
}

/// `w = r s* e^{-jθ}`; the SOM likelihood and its derivatives are functions of it.
#[inline]
fn som_w(sample: &ReceivedSample, s: Complex64, theta: f64) -> Complex64 {
    sample.r * s.conj() * Complex64::cis(-theta)
}

/// Exponent `g(θ) = -|r - s e^{jθ}|² / (2 N0)` of the SOM likelihood.
#[inline]
fn som_exponent(sample: &ReceivedSample, s: Complex64, theta: f64) -> f64 {
    -(sample.r - s * Complex64::cis(theta)).norm_sqr() / (2.0 * sample.n0)
}

/// Factor `1 + (g'' + g'²) σ_p² / 2` with `g' = Im w / N0`, `g'' = -Re w / N0`.
#[inline]
fn som_factor(sample: &ReceivedSample, s: Complex64, theta: f64) -> f64 {
    let w = som_w(sample, s, theta);
    let n0 = sample.n0;
    1.0 + (w.im * w.im / (n0 * n0) - w.re / n0) * sample.sigma_p2 / 2.0
}

/// `f(θ) = exp(-|r - s e^{jθ}|² / (2 N0))`, without the normalizing constant.
pub fn som_likelihood(sample: &ReceivedSample, s: Complex64, theta: f64) -> f64 {
    som_exponent(sample, s, theta).exp()
}

/// Closed-form `f''(θ) = f(θ) · ((Im w)²/N0² - Re w / N0)`.
pub fn som_second_derivative(sample: &ReceivedSample, s: Complex64, theta: f64) -> f64 {
    let w = som_w(sample, s, theta);
    let n0 = sample.n0;
    som_likelihood(sample, s, theta) * (w.im * w.im / (n0 * n0) - w.re / n0)
}

/// Second-order moment-series metric `f(θ̂) + f''(θ̂) σ_p² / 2`. May be negative.
pub fn som_metric(sample: &ReceivedSample, s: Complex64, theta_hat: f64) -> f64 {
    som_likelihood(sample, s, theta_hat) * som_factor(sample, s, theta_hat)
}

/// `ln(max(som_metric, floor))` computed without underflow.
fn som_log_metric(sample: &ReceivedSample, s: Complex64, theta_hat: f64, floor: f64) -> f64 {
    let log_floor = floor.ln();
    let factor = som_factor(sample, s, theta_hat);
    if factor > 0.0 {
        (som_exponent(sample, s, theta_hat) + factor.ln()).max(log_floor)
    } else {
        log_floor
    }
}

/// Evaluates the chosen metric for every hypothesis and normalizes.
pub fn soft_decide(
    sample: &ReceivedSample,
    constellation: &Constellation,
    kind: DetectorKind,
    options: &DecideOptions,
) -> Result<SoftDecision> {
    let zero = sample.r.norm() == 0.0;
    if kind == DetectorKind::Tsd {
        return Ok(tsd_detect(sample, constellation));
    }
    let n0 = sample.n0;
    let points = constellation.points();
    let log_metrics: Vec<f64> = match kind {
        DetectorKind::Euc => points.iter().map(|&s| euc_metric(sample, s) / n0).collect(),
        DetectorKind::Vb => points.iter().map(|&s| vb_metric(sample, s) / n0).collect(),
        DetectorKind::Fos => points
            .iter()
            .map(|&s| fos_metric(sample, s).map(|m| 2.0 * m / n0))
            .collect::<Result<_>>()?,
        DetectorKind::Gap => constellation
            .amplitudes()
            .iter()
            .zip(constellation.phases())
            .map(|(&a, &p)| -0.5 * gap_cost(sample, a, p, options.include_log_term))
            .collect(),
        DetectorKind::Som => points
            .iter()
            .map(|&s| som_log_metric(sample, s, options.theta_hat, options.som_floor))
            .collect(),
        DetectorKind::Tsd => unreachable!(),
    };
    normalize(log_metrics, zero).ok_or_else(|| Error::NonFiniteMetrics {
        r: sample.r.to_string(),
    })
}

/// Max-subtracted softmax; non-finite entries get zero mass. Returns `None`
/// if nothing is finite.
pub(crate) fn normalize(log_metrics: Vec<f64>, zero_observation: bool) -> Option<SoftDecision> {
    let mut hard_index = None;
    let mut best = f64::NEG_INFINITY;
    for (i, &m) in log_metrics.iter().enumerate() {
        if m.is_finite() && (hard_index.is_none() || m > best) {
            best = m;
            hard_index = Some(i);
        }
    }
    let hard_index = hard_index?;
    let mut posteriors: Vec<f64> = log_metrics
        .iter()
        .map(|&m| if m.is_finite() { (m - best).exp() } else { 0.0 })
        .collect();
    let total: f64 = posteriors.iter().sum();
    posteriors.iter_mut().for_each(|p| *p /= total);
    Some(SoftDecision {
        log_metrics,
        posteriors,
        hard_index,
        zero_observation,
    })
}

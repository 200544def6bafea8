//! Extended Kalman filter phase tracker with pilots and soft-symbol feedback.
//!
//! The state is the scalar unwrapped carrier phase under a random-walk model.
//! The observation `y = s e^{jφ} + n`, `n ~ CN(0, N0)`, is handled as a
//! two-dimensional real vector with covariance `(N0/2) I`, which gives the
//! closed-form scalar update used here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelOutput, Frame};
use crate::constellation::Constellation;
use crate::detectors::{soft_decide, DecideOptions, DetectorKind, ReceivedSample, SoftDecision};
use crate::error::{invalid, Error, Result};

/// Phase estimate and its error variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfState {
    /// Unwrapped phase estimate in radians.
    pub phase_est: f64,
    pub variance: f64,
}

impl EkfState {
    pub fn new(phase_est: f64, variance: f64) -> Result<Self> {
        if !phase_est.is_finite() {
            return Err(invalid("phase_est", format!("must be finite, got {phase_est}")));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(invalid("variance", format!("must be finite and positive, got {variance}")));
        }
        Ok(Self {
            phase_est,
            variance,
        })
    }

    /// Time update for the random-walk phase.
    pub fn predict(self, sigma_delta2: f64) -> Result<Self> {
        if !(sigma_delta2.is_finite() && sigma_delta2 >= 0.0) {
            return Err(invalid(
                "sigma_delta2",
                format!("must be finite and non-negative, got {sigma_delta2}"),
            ));
        }
        Ok(Self {
            phase_est: self.phase_est,
            variance: self.variance + sigma_delta2,
        })
    }

    /// Measurement update linearized about the current estimate.
    pub fn update(self, observation: Complex64, symbol: Complex64, n0: f64) -> Result<Self> {
        if !(observation.re.is_finite() && observation.im.is_finite()) {
            return Err(invalid("observation", format!("must be finite, got {observation}")));
        }
        if !(symbol.re.is_finite() && symbol.im.is_finite()) || symbol.norm_sqr() == 0.0 {
            return Err(invalid("symbol", format!("must be finite and non-zero, got {symbol}")));
        }
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(invalid("n0", format!("must be finite and positive, got {n0}")));
        }
        let information = 1.0 / self.variance + 2.0 * symbol.norm_sqr() / n0;
        let variance = 1.0 / information;
        let innovation = (observation * symbol.conj() * Complex64::cis(-self.phase_est)).im;
        let phase_est = self.phase_est + variance * (2.0 / n0) * innovation;
        EkfState::new(phase_est, variance)
    }
}

/// One predict-then-update cycle.
pub fn ekf_step(
    state: EkfState,
    observation: Complex64,
    symbol_hypothesis: Complex64,
    n0: f64,
    sigma_delta2: f64,
) -> Result<EkfState> {
    state.predict(sigma_delta2)?.update(observation, symbol_hypothesis, n0)
}

/// Steady-state variance of the update under a constant symbol energy,
/// found by iterating the scalar Riccati map.
pub fn riccati_fixed_point(energy: f64, n0: f64, sigma_delta2: f64, iterations: usize) -> f64 {
    let r = n0 / (2.0 * energy);
    let mut v = 1.0;
    for _ in 0..iterations {
        let p = v + sigma_delta2;
        v = p * r / (p + r);
    }
    v
}

/// Which EKF variance the detector sees on each feedback iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorVariance {
    /// Predicted variance on the first pass, refreshed posterior afterwards.
    #[default]
    PredictedThenUpdated,
    /// Predicted variance on every pass.
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub sigma_delta2: f64,
    /// Detector and estimator passes per data symbol.
    pub max_iterations: usize,
    pub initial_variance: f64,
    pub detector_variance: DetectorVariance,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            sigma_delta2: 1e-2,
            max_iterations: 3,
            initial_variance: 1.0,
            detector_variance: DetectorVariance::PredictedThenUpdated,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be at least 1"));
        }
        if !(self.sigma_delta2.is_finite() && self.sigma_delta2 >= 0.0) {
            return Err(invalid(
                "sigma_delta2",
                format!("must be finite and non-negative, got {}", self.sigma_delta2),
            ));
        }
        if !(self.initial_variance.is_finite() && self.initial_variance > 0.0) {
            return Err(invalid(
                "initial_variance",
                format!("must be finite and positive, got {}", self.initial_variance),
            ));
        }
        Ok(())
    }
}

/// Decision for one data position of a tracked frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedDecision {
    pub position: usize,
    pub decision: SoftDecision,
    /// Phase estimate used to compensate the observation for the final pass.
    pub phase_est: f64,
    /// Phase-error variance handed to the detector on the final pass.
    pub sigma_p2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    /// Data positions only, in frame order.
    pub decisions: Vec<TrackedDecision>,
    /// Filter state after processing each position.
    pub states: Vec<EkfState>,
}

/// Runs the detector/estimator loop over one frame.
///
/// The initial estimate is taken from the first observation when position 0
/// is a pilot (phase 0 otherwise) with `initial_variance`, and then refined
/// by the ordinary filter pass over the head pilots.
pub fn run_receiver(
    channel_output: &ChannelOutput,
    frame: &Frame,
    constellation: &Constellation,
    detector: DetectorKind,
    config: &TrackerConfig,
    n0: f64,
    options: &DecideOptions,
) -> Result<ReceiverOutput> {
    config.validate()?;
    if channel_output.received.len() != frame.len() {
        return Err(Error::LengthMismatch {
            what: "received",
            got: channel_output.received.len(),
            expected: frame.len(),
        });
    }
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(invalid("n0", format!("must be finite and positive, got {n0}")));
    }
    let at = |index: usize| move |source: Error| Error::Tracker {
        index,
        source: Box::new(source),
    };

    let initial_phase = match (frame.pilot_mask.first(), channel_output.received.first()) {
        (Some(true), Some(&r)) if r.norm_sqr() > 0.0 => {
            (r * constellation.point(frame.symbols[0]).conj()).arg()
        }
        _ => 0.0,
    };
    let mut state = EkfState::new(initial_phase, config.initial_variance)?;
    let mut decisions = Vec::with_capacity(frame.len());
    let mut states = Vec::with_capacity(frame.len());

    for (k, &y) in channel_output.received.iter().enumerate() {
        let predicted = if k == 0 {
            state
        } else {
            state.predict(config.sigma_delta2).map_err(at(k))?
        };
        if frame.pilot_mask[k] {
            let pilot = constellation.point(frame.symbols[k]);
            state = predicted.update(y, pilot, n0).map_err(at(k))?;
        } else {
            let mut current = predicted;
            let mut last = None;
            for iteration in 0..config.max_iterations {
                let sigma_p2 = match config.detector_variance {
                    DetectorVariance::PredictedThenUpdated if iteration > 0 => current.variance,
                    _ => predicted.variance,
                };
                let compensated = y * Complex64::cis(-current.phase_est);
                let sample = ReceivedSample::new(compensated, n0, sigma_p2).map_err(at(k))?;
                let decision =
                    soft_decide(&sample, constellation, detector, options).map_err(at(k))?;
                let soft = decision.soft_symbol(constellation);
                let phase_used = current.phase_est;
                current = if soft.norm_sqr() > 0.0 {
                    predicted.update(y, soft, n0).map_err(at(k))?
                } else {
                    predicted
                };
                last = Some(TrackedDecision {
                    position: k,
                    decision,
                    phase_est: phase_used,
                    sigma_p2,
                });
            }
            decisions.extend(last);
            state = current;
        }
        states.push(state);
    }
    Ok(ReceiverOutput { decisions, states })
}

//! Frame generation and the two phase-noise channel scenarios.
//!
//! * `gaussian_iid`: the receiver already compensated the phase; each sample
//!   carries an independent residual error `θ_k ~ N(0, σ_p²)`.
//! * `wiener`: the raw received signal `r''_k = m_k e^{jφ_k} + n''_k` with a
//!   random-walk phase `φ_k = φ_{k-1} + Δ_k`, `Δ_k ~ N(0, σ_Δ²)`, and `φ_0`
//!   uniform. Phases are stored unwrapped.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::detectors::ReceivedSample;
use crate::error::{invalid, Error, Result};

/// Where known pilot symbols are inserted in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotSchedule {
    /// Pilots transmitted back to back at the start of the frame.
    pub head: usize,
    /// Data symbols between consecutive periodic pilots; 0 disables them.
    pub spacing: usize,
}

impl Default for PilotSchedule {
    /// Five head pilots, then one pilot after every 15 data symbols.
    fn default() -> Self {
        Self {
            head: 5,
            spacing: 15,
        }
    }
}

impl PilotSchedule {
    pub const NONE: PilotSchedule = PilotSchedule {
        head: 0,
        spacing: 0,
    };

    pub fn is_pilot(&self, position: usize) -> bool {
        if position < self.head {
            return true;
        }
        self.spacing > 0 && (position - self.head) % (self.spacing + 1) == self.spacing
    }

    pub fn mask(&self, len: usize) -> Vec<bool> {
        (0..len).map(|k| self.is_pilot(k)).collect()
    }
}

/// Transmitted symbol indices and the pilot positions among them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub symbols: Vec<usize>,
    pub pilot_mask: Vec<bool>,
}

impl Frame {
    pub fn new(symbols: Vec<usize>, pilot_mask: Vec<bool>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(invalid("frame", "length must be at least 1"));
        }
        if symbols.len() != pilot_mask.len() {
            return Err(Error::LengthMismatch {
                what: "pilot mask",
                got: pilot_mask.len(),
                expected: symbols.len(),
            });
        }
        Ok(Self { symbols, pilot_mask })
    }

    /// Uniform data symbols with `pilot_index` at every pilot position.
    pub fn random<R: Rng + ?Sized>(
        len: usize,
        constellation: &Constellation,
        schedule: PilotSchedule,
        pilot_index: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mask = schedule.mask(len);
        let size = constellation.len();
        let symbols = mask
            .iter()
            .map(|&pilot| if pilot { pilot_index } else { rng.random_range(0..size) })
            .collect();
        Self::new(symbols, mask)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn data_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.pilot_mask
            .iter()
            .enumerate()
            .filter_map(|(k, &p)| (!p).then_some(k))
    }
}

/// Raw received samples of the Wiener scenario with the true phase trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    pub received: Vec<Complex64>,
    pub true_phase: Vec<f64>,
}

/// Phase-noise model selector. Only the fields of the active kind are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseNoiseModel {
    GaussianIid { sigma_p2: f64 },
    Wiener { sigma_delta2: f64 },
}

impl PhaseNoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PhaseNoiseModel::GaussianIid { sigma_p2 } => check_variance("sigma_p2", sigma_p2),
            PhaseNoiseModel::Wiener { sigma_delta2 } => check_variance("sigma_delta2", sigma_delta2),
        }
    }
}

fn check_variance(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and non-negative, got {v}")))
    }
}

/// Circularly symmetric complex Gaussian sample with `E|n|² = n0`.
#[inline]
pub fn complex_noise<R: Rng + ?Sized>(n0: f64, rng: &mut R) -> Complex64 {
    let s = (n0 / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Compensated observations `r_k = m_k e^{jθ_k} + n_k` with i.i.d. Gaussian
/// phase errors.
pub fn simulate_gaussian_scenario<R: Rng + ?Sized>(
    frame: &Frame,
    constellation: &Constellation,
    n0: f64,
    sigma_p2: f64,
    rng: &mut R,
) -> Result<Vec<ReceivedSample>> {
    check_variance("sigma_p2", sigma_p2)?;
    check_variance("n0", n0)?;
    let sigma_p = sigma_p2.sqrt();
    Ok(frame
        .symbols
        .iter()
        .map(|&idx| {
            let theta = sigma_p * rng.sample::<f64, _>(StandardNormal);
            let r = constellation.point(idx) * Complex64::cis(theta) + complex_noise(n0, rng);
            ReceivedSample { r, n0, sigma_p2 }
        })
        .collect())
}

/// Raw received frame under Wiener phase noise.
pub fn simulate_wiener<R: Rng + ?Sized>(
    frame: &Frame,
    constellation: &Constellation,
    n0: f64,
    sigma_delta2: f64,
    rng: &mut R,
) -> Result<ChannelOutput> {
    check_variance("sigma_delta2", sigma_delta2)?;
    check_variance("n0", n0)?;
    let sigma_delta = sigma_delta2.sqrt();
    let mut phase = rng.random_range(-PI..PI);
    let mut received = Vec::with_capacity(frame.len());
    let mut true_phase = Vec::with_capacity(frame.len());
    for (k, &idx) in frame.symbols.iter().enumerate() {
        if k > 0 {
            phase += sigma_delta * rng.sample::<f64, _>(StandardNormal);
        }
        true_phase.push(phase);
        received.push(constellation.point(idx) * Complex64::cis(phase) + complex_noise(n0, rng));
    }
    Ok(ChannelOutput {
        received,
        true_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn qpsk_frame(len: usize, seed: u64) -> (Constellation, Frame) {
        let c = Constellation::qam(4).unwrap();
        let f = Frame::random(len, &c, PilotSchedule::NONE, 0, &mut stream(seed, 0, 0)).unwrap();
        (c, f)
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn pilot_schedule_layout() {
        let s = PilotSchedule::default();
        let mask = s.mask(60);
        let pilots: Vec<usize> = (0..60).filter(|&k| mask[k]).collect();
        assert_eq!(pilots, vec![0, 1, 2, 3, 4, 20, 36, 52]);
        let dense = s.mask(10_000).iter().filter(|&&p| p).count() as f64 / 10_000.0;
        assert!((0.06..0.07).contains(&dense), "density {dense}");
        assert!(PilotSchedule::NONE.mask(10).iter().all(|&p| !p));
    }

    #[test]
    fn frame_validation() {
        assert!(Frame::new(vec![], vec![]).is_err());
        assert!(Frame::new(vec![0, 1], vec![false]).is_err());
    }

    #[test]
    fn noiseless_gaussian_scenario_is_identity() {
        let (c, f) = qpsk_frame(64, 1);
        let out = simulate_gaussian_scenario(&f, &c, 0.0, 0.0, &mut stream(1, 1, 0)).unwrap();
        for (s, &idx) in out.iter().zip(&f.symbols) {
            assert_eq!(s.r, c.point(idx));
        }
    }

    #[test]
    fn gaussian_scenario_is_deterministic() {
        let (c, f) = qpsk_frame(256, 2);
        let a = simulate_gaussian_scenario(&f, &c, 0.1, 1e-2, &mut stream(9, 3, 1)).unwrap();
        let b = simulate_gaussian_scenario(&f, &c, 0.1, 1e-2, &mut stream(9, 3, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phase_channel_variance() {
        // arg(r/m) has variance σ_p² + N0/(2|m|²) in the high-SNR regime
        let n = 100_000;
        let (c, f) = qpsk_frame(n, 3);
        let (n0, sp2) = (1e-3, 1e-2);
        let out = simulate_gaussian_scenario(&f, &c, n0, sp2, &mut stream(3, 1, 0)).unwrap();
        let phases: Vec<f64> = out
            .iter()
            .zip(&f.symbols)
            .map(|(s, &i)| (s.r / c.point(i)).arg())
            .collect();
        let (_, var) = mean_var(&phases);
        let expected = sp2 + n0 / 2.0;
        let se = var * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - expected).abs() < 3.0 * se, "var {var} expected {expected} se {se}");
    }

    #[test]
    fn gaussian_phase_errors_are_serially_uncorrelated() {
        let n = 50_000;
        let (c, f) = qpsk_frame(n, 4);
        let out = simulate_gaussian_scenario(&f, &c, 0.0, 1e-2, &mut stream(4, 1, 0)).unwrap();
        let th: Vec<f64> = out
            .iter()
            .zip(&f.symbols)
            .map(|(s, &i)| (s.r / c.point(i)).arg())
            .collect();
        let (m, v) = mean_var(&th);
        let lag1 = th.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / ((n - 1) as f64 * v);
        assert!(lag1.abs() < 3.0 / (n as f64).sqrt(), "lag-1 autocorrelation {lag1}");
    }

    #[test]
    fn additive_noise_covariance() {
        let n = 200_000;
        let n0 = 0.3;
        let mut rng = stream(5, 0, 0);
        let draws: Vec<Complex64> = (0..n).map(|_| complex_noise(n0, &mut rng)).collect();
        let power = draws.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let pseudo = draws.iter().map(|z| z * z).sum::<Complex64>() / n as f64;
        // |n|² is exponential with mean N0: standard error N0/√n
        let se = n0 / (n as f64).sqrt();
        assert!((power - n0).abs() < 3.0 * se, "E|n|² = {power}");
        // E[n²] = 0 for circular noise; each component has sd ≈ N0/√(2n)
        assert!(pseudo.norm() < 3.0 * n0 / (n as f64).sqrt());
    }

    #[test]
    fn wiener_without_innovation_is_constant() {
        let (c, f) = qpsk_frame(100, 6);
        let out = simulate_wiener(&f, &c, 0.01, 0.0, &mut stream(6, 0, 0)).unwrap();
        assert!(out.true_phase.iter().all(|&p| p == out.true_phase[0]));
        assert!((-PI..PI).contains(&out.true_phase[0]));
    }

    #[test]
    fn wiener_random_walk_variance() {
        let frames = 4000;
        let (c, f) = qpsk_frame(101, 7);
        let d: Vec<f64> = (0..frames)
            .map(|i| {
                let out = simulate_wiener(&f, &c, 0.01, 1e-2, &mut stream(7, 0, i)).unwrap();
                out.true_phase[100] - out.true_phase[0]
            })
            .collect();
        let (_, var) = mean_var(&d);
        let se = var * (2.0 / (frames as f64 - 1.0)).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "var {var} se {se}");
    }

    #[test]
    fn wiener_compensation_identity() {
        let (c, f) = qpsk_frame(50, 8);
        let out = simulate_wiener(&f, &c, 0.0, 1e-2, &mut stream(8, 0, 0)).unwrap();
        for ((r, &phi), &idx) in out.received.iter().zip(&out.true_phase).zip(&f.symbols) {
            assert!((r * Complex64::cis(-phi) - c.point(idx)).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_negative_variances() {
        let (c, f) = qpsk_frame(4, 9);
        assert!(simulate_gaussian_scenario(&f, &c, 0.1, -1.0, &mut stream(0, 0, 0)).is_err());
        assert!(simulate_wiener(&f, &c, 0.1, -1e-3, &mut stream(0, 0, 0)).is_err());
        assert!(PhaseNoiseModel::Wiener { sigma_delta2: f64::NAN }.validate().is_err());
    }
}

//! Forward-backward detection over a discretized Wiener phase.
//!
//! The phase takes `D` equally spaced values and evolves as a Markov chain
//! whose kernel is a wrapped Gaussian with the random-walk increment variance.
//! Messages live in the linear domain and are renormalized at every step;
//! each step forms `ln message + ln emission` before exponentiating so that
//! sharp high-SNR emissions cannot underflow the product.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::log_sum_exp;
use crate::channel::{ChannelOutput, Frame};
use crate::constellation::Constellation;
use crate::detectors::{normalize, SoftDecision};
use crate::error::{invalid, Error, Result};

/// Smallest accepted number of phase bins.
pub const MIN_BINS: usize = 8;

/// Uniform phase grid `{0, 2π/D, …, 2π(D-1)/D}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    d: usize,
    values: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(d: usize) -> Result<Self> {
        if d < 4 {
            return Err(invalid("d", format!("phase grid needs at least 4 bins, got {d}")));
        }
        let values = (0..d).map(|k| 2.0 * PI * k as f64 / d as f64).collect();
        Ok(Self { d, values })
    }

    /// `D = 8C`.
    pub fn for_constellation(constellation: &Constellation) -> Result<Self> {
        Self::new(8 * constellation.len())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.d as f64
    }

    /// Bin whose value is circularly closest to `phase`.
    pub fn nearest(&self, phase: f64) -> usize {
        let k = (phase.rem_euclid(2.0 * PI) / self.spacing()).round() as usize;
        k % self.d
    }
}

/// Sparse circular transition kernel, indexed by bin offset.
#[derive(Debug, Clone)]
struct Kernel {
    offsets: Vec<(isize, f64)>,
}

impl Kernel {
    /// Wrapped Gaussian over offsets within ±4σ, image terms included.
    fn new(grid: &PhaseGrid, sigma_delta2: f64) -> Self {
        if sigma_delta2 == 0.0 {
            return Self {
                offsets: vec![(0, 1.0)],
            };
        }
        let sigma = sigma_delta2.sqrt();
        let d = grid.d as isize;
        let reach = ((4.0 * sigma / grid.spacing()).floor() as isize).min(d / 2);
        let lo = -reach;
        let hi = if 2 * reach >= d { lo + d - 1 } else { reach };
        let mut offsets: Vec<(isize, f64)> = (lo..=hi)
            .map(|m| {
                let base = m as f64 * grid.spacing();
                let images = (4.0 * sigma / (2.0 * PI)).ceil() as i64 + 1;
                let w: f64 = (-images..=images)
                    .map(|l| base + 2.0 * PI * l as f64)
                    .filter(|x| x.abs() <= 4.0 * sigma)
                    .map(|x| (-x * x / (2.0 * sigma_delta2)).exp())
                    .sum();
                (m, w)
            })
            .collect();
        let total: f64 = offsets.iter().map(|(_, w)| w).sum();
        offsets.iter_mut().for_each(|(_, w)| *w /= total);
        Self { offsets }
    }

    /// Forward propagation `out[d] = Σ_m K(m) in[d - m]`.
    fn forward(&self, input: &[f64], out: &mut [f64]) {
        let d = input.len() as isize;
        out.iter_mut().for_each(|x| *x = 0.0);
        for (j, o) in out.iter_mut().enumerate() {
            for &(m, w) in &self.offsets {
                *o += w * input[(j as isize - m).rem_euclid(d) as usize];
            }
        }
    }

    /// Backward propagation `out[d] = Σ_m K(m) in[d + m]`.
    fn backward(&self, input: &[f64], out: &mut [f64]) {
        let d = input.len() as isize;
        for (j, o) in out.iter_mut().enumerate() {
            *o = self
                .offsets
                .iter()
                .map(|&(m, w)| w * input[(j as isize + m).rem_euclid(d) as usize])
                .sum();
        }
    }
}

/// Per-position results of the forward-backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    /// Symbol posteriors at every position; pilots are one-hot on the pilot.
    pub decisions: Vec<SoftDecision>,
    /// Phase posterior over the grid at every position.
    pub phase_posteriors: Vec<Vec<f64>>,
}

struct Emissions<'a> {
    rotations: Vec<Complex64>,
    constellation: &'a Constellation,
    n0: f64,
}

impl Emissions<'_> {
    /// `ln p(r | s, φ_d)` up to a constant, for every bin.
    fn symbol(&self, r: Complex64, s: Complex64, out: &mut [f64]) {
        for (o, rot) in out.iter_mut().zip(&self.rotations) {
            *o = -(r - s * rot).norm_sqr() / self.n0;
        }
    }

    /// Log emission for every bin: a pilot likelihood or the average over
    /// the constellation.
    fn log_emission(&self, r: Complex64, pilot: Option<usize>, scratch: &mut [Vec<f64>], out: &mut [f64]) {
        match pilot {
            Some(p) => self.symbol(r, self.constellation.point(p), out),
            None => {
                let c = self.constellation.len();
                for (i, &s) in self.constellation.points().iter().enumerate() {
                    self.symbol(r, s, &mut scratch[i]);
                }
                let log_c = (c as f64).ln();
                for (d, o) in out.iter_mut().enumerate() {
                    *o = log_sum_exp(scratch.iter().map(|row| row[d])) - log_c;
                }
            }
        }
    }
}

/// `out = message ⊙ exp(log_emission)`, renormalized. Fails when the product
/// carries no mass.
fn absorb(message: &[f64], log_emission: &[f64], out: &mut [f64], position: usize) -> Result<()> {
    let combined = |d: usize| {
        if message[d] > 0.0 {
            message[d].ln() + log_emission[d]
        } else {
            f64::NEG_INFINITY
        }
    };
    let max = (0..message.len()).map(combined).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::MessageUnderflow { position });
    }
    for (d, o) in out.iter_mut().enumerate() {
        *o = (combined(d) - max).exp();
    }
    normalize_in_place(out, position)
}

fn normalize_in_place(v: &mut [f64], position: usize) -> Result<()> {
    let total: f64 = v.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::MessageUnderflow { position });
    }
    v.iter_mut().for_each(|x| *x /= total);
    Ok(())
}

/// Symbol posteriors by forward-backward over the phase grid, with a uniform
/// phase prior at the first position.
pub fn discrete_map_detect(
    channel_output: &ChannelOutput,
    frame: &Frame,
    constellation: &Constellation,
    sigma_delta2: f64,
    n0: f64,
    d: usize,
) -> Result<MapOutput> {
    if d < MIN_BINS {
        return Err(invalid("d", format!("must be at least {MIN_BINS}, got {d}")));
    }
    if !(sigma_delta2.is_finite() && sigma_delta2 >= 0.0) {
        return Err(invalid(
            "sigma_delta2",
            format!("must be finite and non-negative, got {sigma_delta2}"),
        ));
    }
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(invalid("n0", format!("must be finite and positive, got {n0}")));
    }
    let len = frame.len();
    if channel_output.received.len() != len {
        return Err(Error::LengthMismatch {
            what: "received",
            got: channel_output.received.len(),
            expected: len,
        });
    }
    let grid = PhaseGrid::new(d)?;
    let kernel = Kernel::new(&grid, sigma_delta2);
    let em = Emissions {
        rotations: grid.values().iter().map(|&v| Complex64::cis(v)).collect(),
        constellation,
        n0,
    };
    let c = constellation.len();
    let pilot_at = |k: usize| frame.pilot_mask[k].then(|| frame.symbols[k]);
    let mut scratch = vec![vec![0.0; d]; c];

    // Forward: predicted messages before each emission.
    let mut predicted = vec![vec![0.0; d]; len];
    let mut log_emissions = vec![vec![0.0; d]; len];
    let mut filtered = vec![1.0 / d as f64; d];
    for k in 0..len {
        if k == 0 {
            predicted[0].fill(1.0 / d as f64);
        } else {
            kernel.forward(&filtered, &mut predicted[k]);
            normalize_in_place(&mut predicted[k], k)?;
        }
        em.log_emission(channel_output.received[k], pilot_at(k), &mut scratch, &mut log_emissions[k]);
        absorb(&predicted[k], &log_emissions[k], &mut filtered, k)?;
    }

    // Backward, combining with the forward messages as we go.
    let mut decisions = vec![None; len];
    let mut phase_posteriors = vec![Vec::new(); len];
    let mut beta = vec![1.0 / d as f64; d];
    let mut weighted = vec![0.0; d];
    let mut log_sym = vec![0.0; d];
    for k in (0..len).rev() {
        let r = channel_output.received[k];
        let mut prior = vec![0.0; d];
        for j in 0..d {
            prior[j] = predicted[k][j] * beta[j];
        }
        normalize_in_place(&mut prior, k)?;
        let log_prior: Vec<f64> = prior
            .iter()
            .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
            .collect();

        let decision = match pilot_at(k) {
            Some(p) => {
                let mut logs = vec![f64::NEG_INFINITY; c];
                logs[p] = 0.0;
                normalize(logs, r.norm() == 0.0)
            }
            None => {
                let logs: Vec<f64> = constellation
                    .points()
                    .iter()
                    .map(|&s| {
                        em.symbol(r, s, &mut log_sym);
                        log_sum_exp(log_sym.iter().zip(&log_prior).map(|(a, b)| a + b))
                    })
                    .collect();
                normalize(logs, r.norm() == 0.0)
            }
        };
        decisions[k] = Some(decision.ok_or(Error::MessageUnderflow { position: k })?);

        let log_e = &log_emissions[k];
        let mut posterior = vec![0.0; d];
        absorb(&prior, log_e, &mut posterior, k)?;
        phase_posteriors[k] = posterior;

        if k > 0 {
            absorb(&beta, log_e, &mut weighted, k)?;
            kernel.backward(&weighted, &mut beta);
            normalize_in_place(&mut beta, k)?;
        }
    }
    Ok(MapOutput {
        decisions: decisions.into_iter().map(|d| d.expect("every position decided")).collect(),
        phase_posteriors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate_wiener, PilotSchedule};
    use crate::constellation::eb_n0_to_n0;
    use crate::rng::stream;

    #[test]
    fn grid_layout() {
        let g = PhaseGrid::new(8).unwrap();
        assert_eq!(g.values().len(), 8);
        assert!((g.values()[2] - PI / 2.0).abs() < 1e-15);
        assert_eq!(g.nearest(-0.01), 0);
        assert_eq!(g.nearest(PI), 4);
        assert!(PhaseGrid::new(3).is_err());
        assert_eq!(PhaseGrid::for_constellation(&Constellation::qam(16).unwrap()).unwrap().d(), 128);
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let g = PhaseGrid::new(64).unwrap();
        for sd2 in [0.0, 1e-4, 1e-3, 1e-2, 1.0, 100.0] {
            let k = Kernel::new(&g, sd2);
            let total: f64 = k.offsets.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mut x = vec![0.0; 64];
            x[10] = 1.0;
            let mut y = vec![0.0; 64];
            k.forward(&x, &mut y);
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if sd2 < 1.0 {
                for m in 1..5 {
                    assert!((y[10 + m] - y[10 - m]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = Constellation::qam(4).unwrap();
        let frame = Frame::new(vec![0, 1], vec![true, false]).unwrap();
        let out = ChannelOutput {
            received: vec![Complex64::new(1.0, 0.0); 2],
            true_phase: vec![0.0; 2],
        };
        assert!(discrete_map_detect(&out, &frame, &c, 0.0, 0.1, 7).is_err());
        assert!(discrete_map_detect(&out, &frame, &c, -1.0, 0.1, 32).is_err());
        assert!(discrete_map_detect(&out, &frame, &c, 0.0, 0.0, 32).is_err());
        let short = ChannelOutput {
            received: vec![Complex64::new(1.0, 0.0)],
            true_phase: vec![0.0],
        };
        assert!(matches!(
            discrete_map_detect(&short, &frame, &c, 0.0, 0.1, 32),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_pilot_concentrates_phase() {
        let c = Constellation::qam(16).unwrap();
        let p = c.max_energy_index();
        let frame = Frame::new(vec![p], vec![true]).unwrap();
        let grid = PhaseGrid::for_constellation(&c).unwrap();
        for true_phase in [0.0, 1.0, -2.5, 3.1] {
            let out = ChannelOutput {
                received: vec![c.point(p) * Complex64::cis(true_phase)],
                true_phase: vec![true_phase],
            };
            let map = discrete_map_detect(&out, &frame, &c, 0.0, 1e-5, grid.d()).unwrap();
            let post = &map.phase_posteriors[0];
            assert!(post[grid.nearest(true_phase)] >= 0.99);
        }
    }

    #[test]
    fn no_information_gives_uniform_symbol_posteriors() {
        let c = Constellation::qam(4).unwrap();
        let frame = Frame::new(vec![0, 1, 2], vec![false; 3]).unwrap();
        let out = ChannelOutput {
            received: vec![Complex64::new(0.0, 0.0); 3],
            true_phase: vec![0.0; 3],
        };
        let map = discrete_map_detect(&out, &frame, &c, 1e-3, 0.5, 32).unwrap();
        for dec in &map.decisions {
            for p in &dec.posteriors {
                assert!((p - 0.25).abs() < 1e-12);
            }
        }
        let qam = Constellation::qam(16).unwrap();
        let frame = Frame::new(vec![0, 1, 2], vec![false; 3]).unwrap();
        let far = ChannelOutput {
            received: vec![Complex64::new(0.5, 0.1); 3],
            true_phase: vec![0.0; 3],
        };
        let map = discrete_map_detect(&far, &frame, &qam, 1e-3, 1e12, 128).unwrap();
        for dec in &map.decisions {
            for p in &dec.posteriors {
                assert!((p - 1.0 / 16.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn posteriors_are_normalized_and_track_the_phase() {
        let c = Constellation::qam(16).unwrap();
        let n0 = eb_n0_to_n0(25.0, c.bits_per_symbol()).unwrap();
        let mut rng = stream(60, 0, 0);
        let frame = Frame::random(600, &c, PilotSchedule::default(), c.max_energy_index(), &mut rng).unwrap();
        let out = simulate_wiener(&frame, &c, n0, 1e-3, &mut rng).unwrap();
        let grid = PhaseGrid::for_constellation(&c).unwrap();
        let map = discrete_map_detect(&out, &frame, &c, 1e-3, n0, grid.d()).unwrap();
        let mut errors = 0;
        for k in 0..frame.len() {
            let dec = &map.decisions[k];
            assert!((dec.posteriors.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((map.phase_posteriors[k].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if frame.pilot_mask[k] {
                assert_eq!(dec.hard_index, frame.symbols[k]);
            } else if dec.hard_index != frame.symbols[k] {
                errors += 1;
            }
        }
        assert!(errors < 20, "{errors} errors");
    }

    #[test]
    fn underflow_is_reported_with_position() {
        let c = Constellation::qam(4).unwrap();
        let frame = Frame::new(vec![0, 0], vec![true, true]).unwrap();
        // Opposite pilot phases with a frozen phase and a noise level at which
        // every emission but the exact one is zero.
        let out = ChannelOutput {
            received: vec![c.point(0), -c.point(0)],
            true_phase: vec![0.0, PI],
        };
        let err = discrete_map_detect(&out, &frame, &c, 0.0, 5e-324, 8);
        assert!(matches!(err, Err(Error::MessageUnderflow { position: 1 })));
    }
}

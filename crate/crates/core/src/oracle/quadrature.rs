//! Exact phase-averaged likelihood by numerical quadrature.
//!
//! `L_i = ∫ p(r | s_i, θ) p(θ) dθ` with `p(r | s, θ) ∝ exp(-|r - s e^{jθ}|² / N0)`,
//! evaluated in the log domain on a composite midpoint grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::log_sum_exp;
use crate::constellation::Constellation;
use crate::detectors::{normalize, ReceivedSample, SoftDecision};
use crate::error::{invalid, Error, Result};

/// Smallest accepted grid size.
pub const MIN_POINTS: usize = 256;
pub const DEFAULT_POINTS: usize = 4096;
/// Largest change of any likelihood, relative to the largest likelihood,
/// tolerated when the grid is doubled.
pub const SELF_CONSISTENCY_TOLERANCE: f64 = 1e-8;

/// Phase-error prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhasePdf {
    /// Zero-mean Gaussian truncated to `[-π, π)`.
    Gaussian { sigma_p2: f64 },
    /// Von Mises density with concentration `1/σp²`.
    Tikhonov { sigma_p2: f64 },
}

impl PhasePdf {
    pub fn sigma_p2(&self) -> f64 {
        match *self {
            PhasePdf::Gaussian { sigma_p2 } | PhasePdf::Tikhonov { sigma_p2 } => sigma_p2,
        }
    }

    fn log_density(&self, theta: f64) -> f64 {
        match *self {
            PhasePdf::Gaussian { sigma_p2 } => -theta * theta / (2.0 * sigma_p2),
            PhasePdf::Tikhonov { sigma_p2 } => (theta.cos() - 1.0) / sigma_p2,
        }
    }
}

/// Uniform nodes on `[-h, h)`, `h = min(π, 10σ)`, carrying the unnormalized
/// log prior.
#[derive(Debug, Clone)]
struct Nodes {
    cos: Vec<f64>,
    sin: Vec<f64>,
    log_prior: Vec<f64>,
    log_mass: f64,
}

impl Nodes {
    /// `n` nodes at `-h + (k + offset) Δ` with `Δ = 2h / n`.
    fn new(pdf: &PhasePdf, n: usize, offset: f64) -> Self {
        let half = PI.min(10.0 * pdf.sigma_p2().sqrt());
        let step = 2.0 * half / n as f64;
        let thetas: Vec<f64> = (0..n).map(|k| -half + (k as f64 + offset) * step).collect();
        let log_prior: Vec<f64> = thetas.iter().map(|&t| pdf.log_density(t)).collect();
        Self {
            cos: thetas.iter().map(|t| t.cos()).collect(),
            sin: thetas.iter().map(|t| t.sin()).collect(),
            log_mass: log_sum_exp(log_prior.iter().copied()),
            log_prior,
        }
    }

    /// `ln Σ_k p(θ_k) exp(-|r - s e^{jθ_k}|² / N0)` with unnormalized prior weights.
    fn log_sum(&self, r: Complex64, s: Complex64, n0: f64, buf: &mut Vec<f64>) -> f64 {
        let inv = 1.0 / n0;
        let base = -(r.norm_sqr() + s.norm_sqr()) * inv;
        // Re(r s* e^{-jθ}) = a cos θ + b sin θ
        let w = r * s.conj();
        let (a, b) = (2.0 * w.re * inv, 2.0 * w.im * inv);
        buf.clear();
        buf.extend(
            self.cos
                .iter()
                .zip(&self.sin)
                .zip(&self.log_prior)
                .map(|((c, sn), lp)| lp + a * c + b * sn),
        );
        let max = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = buf.iter().map(|x| (x - max).exp()).sum();
        base + max + sum.ln()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    log_sum_exp([a, b].into_iter())
}

/// Reusable quadrature detector; the grids are built once.
///
/// The midpoint grid is checked against the doubled grid formed by adding
/// the half-step-shifted nodes, so the check costs one extra pass.
#[derive(Debug, Clone)]
pub struct QuadratureMl {
    pdf: PhasePdf,
    n_points: usize,
    midpoints: Nodes,
    shifted: Nodes,
}

impl QuadratureMl {
    pub fn new(pdf: PhasePdf, n_points: usize) -> Result<Self> {
        let sp2 = pdf.sigma_p2();
        if !(sp2.is_finite() && sp2 > 0.0) {
            return Err(invalid("sigma_p2", format!("must be finite and positive, got {sp2}")));
        }
        if n_points < MIN_POINTS {
            return Err(invalid(
                "n_points",
                format!("must be at least {MIN_POINTS}, got {n_points}"),
            ));
        }
        Ok(Self {
            pdf,
            n_points,
            midpoints: Nodes::new(&pdf, n_points, 0.5),
            shifted: Nodes::new(&pdf, n_points, 1.0),
        })
    }

    pub fn pdf(&self) -> PhasePdf {
        self.pdf
    }

    /// Log-likelihoods on the configured grid, verified against the doubled grid.
    pub fn log_likelihoods(&self, sample: &ReceivedSample, constellation: &Constellation) -> Result<Vec<f64>> {
        let n0 = sample.n0;
        if !(n0 > 0.0) {
            return Err(invalid("n0", format!("must be positive, got {n0}")));
        }
        let mut buf = Vec::with_capacity(self.n_points);
        let coarse_mass = self.midpoints.log_mass;
        let fine_mass = log_add(coarse_mass, self.shifted.log_mass);
        let mut coarse = Vec::with_capacity(constellation.len());
        let mut fine = Vec::with_capacity(constellation.len());
        for &s in constellation.points() {
            let a = self.midpoints.log_sum(sample.r, s, n0, &mut buf);
            let b = self.shifted.log_sum(sample.r, s, n0, &mut buf);
            coarse.push(a - coarse_mass);
            fine.push(log_add(a, b) - fine_mass);
        }
        let top = fine.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (symbol, (a, b)) in coarse.iter().zip(&fine).enumerate() {
            let delta = ((a - top).exp() - (b - top).exp()).abs();
            if !(delta <= SELF_CONSISTENCY_TOLERANCE) {
                return Err(Error::QuadratureNotConverged {
                    symbol,
                    n_points: self.n_points,
                    delta,
                });
            }
        }
        Ok(coarse)
    }

    pub fn detect(&self, sample: &ReceivedSample, constellation: &Constellation) -> Result<SoftDecision> {
        let logs = self.log_likelihoods(sample, constellation)?;
        normalize(logs, sample.r.norm() == 0.0).ok_or_else(|| Error::NonFiniteMetrics {
            r: sample.r.to_string(),
        })
    }
}

/// One-shot quadrature ML decision.
pub fn quadrature_ml(
    sample: &ReceivedSample,
    constellation: &Constellation,
    phase_pdf: PhasePdf,
    n_points: usize,
) -> Result<SoftDecision> {
    QuadratureMl::new(phase_pdf, n_points)?.detect(sample, constellation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::eb_n0_to_n0;
    use crate::detectors::{soft_decide, DecideOptions, DetectorKind};
    use crate::rng::stream;
    use rand::Rng;

    fn random_sample(rng: &mut impl Rng, c: &Constellation, n0: f64, sp2: f64) -> ReceivedSample {
        let idx = rng.random_range(0..c.len());
        let theta = sp2.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal);
        let r = c.point(idx) * Complex64::cis(theta) + crate::channel::complex_noise(n0, rng);
        ReceivedSample::new(r, n0, sp2).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(QuadratureMl::new(PhasePdf::Gaussian { sigma_p2: 1e-2 }, 255).is_err());
        assert!(QuadratureMl::new(PhasePdf::Gaussian { sigma_p2: 0.0 }, 4096).is_err());
        assert!(QuadratureMl::new(PhasePdf::Tikhonov { sigma_p2: f64::NAN }, 4096).is_err());
    }

    #[test]
    fn too_coarse_grid_is_reported() {
        let c = Constellation::qam(16).unwrap();
        let q = QuadratureMl::new(PhasePdf::Gaussian { sigma_p2: 1.0 }, 256).unwrap();
        let s = ReceivedSample::new(c.point(3), 1e-6, 1.0).unwrap();
        assert!(matches!(
            q.detect(&s, &c),
            Err(Error::QuadratureNotConverged { .. })
        ));
    }

    #[test]
    fn posteriors_sum_to_one_and_are_stable_under_refinement() {
        let c = Constellation::qam(16).unwrap();
        let n0 = eb_n0_to_n0(20.0, c.bits_per_symbol()).unwrap();
        let a = QuadratureMl::new(PhasePdf::Gaussian { sigma_p2: 1e-2 }, 4096).unwrap();
        let b = QuadratureMl::new(PhasePdf::Gaussian { sigma_p2: 1e-2 }, 8192).unwrap();
        let mut rng = stream(40, 0, 0);
        for _ in 0..200 {
            let s = random_sample(&mut rng, &c, n0, 1e-2);
            let pa = a.detect(&s, &c).unwrap();
            let pb = b.detect(&s, &c).unwrap();
            assert!((pa.posteriors.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (x, y) in pa.posteriors.iter().zip(&pb.posteriors) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn delta_prior_reduces_to_euclidean() {
        let c = Constellation::qam(16).unwrap();
        let n0 = eb_n0_to_n0(15.0, c.bits_per_symbol()).unwrap();
        let q = QuadratureMl::new(PhasePdf::Gaussian { sigma_p2: 1e-12 }, 256).unwrap();
        let mut rng = stream(41, 0, 0);
        for _ in 0..10_000 {
            let s = random_sample(&mut rng, &c, n0, 1e-12);
            let euc = soft_decide(&s, &c, DetectorKind::Euc, &DecideOptions::default()).unwrap();
            assert_eq!(q.detect(&s, &c).unwrap().hard_index, euc.hard_index);
        }
    }

    /// Averaged over samples; isolated near-boundary observations reach a
    /// few 1e-3 on their own.
    #[test]
    fn gaussian_and_tikhonov_priors_agree_at_practical_variance() {
        let c = Constellation::qam(16).unwrap();
        let n0 = eb_n0_to_n0(20.0, c.bits_per_symbol()).unwrap();
        let g = QuadratureMl::new(PhasePdf::Gaussian { sigma_p2: 1e-2 }, 4096).unwrap();
        let t = QuadratureMl::new(PhasePdf::Tikhonov { sigma_p2: 1e-2 }, 4096).unwrap();
        let mut rng = stream(42, 0, 0);
        let mut total = 0.0;
        let trials = 2000;
        for _ in 0..trials {
            let s = random_sample(&mut rng, &c, n0, 1e-2);
            let pg = g.detect(&s, &c).unwrap();
            let pt = t.detect(&s, &c).unwrap();
            assert_eq!(pg.hard_index, pt.hard_index);
            total += 0.5 * pg.posteriors.iter().zip(&pt.posteriors).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
        let mean_tv = total / trials as f64;
        assert!(mean_tv <= 1e-3, "mean total variation {mean_tv}");
    }

    #[test]
    fn wide_window_matches_closed_form_for_uniform_like_prior() {
        // A very flat Tikhonov prior: the likelihood of any point on a ring
        // depends only on |r|, so all ring members share the same value.
        let c = Constellation::qam(4).unwrap();
        let q = QuadratureMl::new(PhasePdf::Tikhonov { sigma_p2: 1e6 }, 1024).unwrap();
        let s = ReceivedSample::new(Complex64::new(0.3, 0.5), 0.5, 1e6).unwrap();
        let d = q.detect(&s, &c).unwrap();
        for p in &d.posteriors {
            assert!((p - 0.25).abs() < 1e-6);
        }
    }
}

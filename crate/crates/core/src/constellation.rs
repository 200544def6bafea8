//! Signal constellations and the Eb/N0 convention.
//!
//! Every constellation is normalized to unit average symbol energy, so the
//! complex-noise variance for a given Eb/N0 depends only on the number of bits
//! carried per symbol: `N0 = 1 / (log2(C) · 10^(Eb/N0 / 10))`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Relative tolerance used to decide that two points share an amplitude ring.
pub const RING_TOLERANCE: f64 = 1e-9;

/// Energy convention recorded in every output file.
pub const ENERGY_CONVENTION: &str =
    "unit average symbol energy; N0 = 1/(log2(C)*10^(EbN0_dB/10)); noise CN(0, N0)";

/// A set of points sharing (up to [`RING_TOLERANCE`]) the same amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    pub amplitude: f64,
    pub members: Vec<usize>,
}

/// Indexed set of complex symbol points with unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
    rings: Vec<Ring>,
    name: String,
}

impl Constellation {
    /// Builds a constellation from arbitrary points, scaling them to unit
    /// average energy.
    pub fn from_points(name: impl Into<String>, points: Vec<Complex64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidConstellation(format!(
                "need at least two points, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::InvalidConstellation(format!("non-finite point {p}")));
        }
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if energy <= 0.0 {
            return Err(Error::InvalidConstellation("all points at the origin".into()));
        }
        let scale = energy.sqrt().recip();
        let points: Vec<Complex64> = points.into_iter().map(|p| p * scale).collect();

        for (i, p) in points.iter().enumerate() {
            if p.norm() <= 1e-12 {
                return Err(Error::InvalidConstellation(format!("point {i} is at the origin")));
            }
            for (j, q) in points.iter().enumerate().skip(i + 1) {
                if (p - q).norm() <= 1e-12 {
                    return Err(Error::InvalidConstellation(format!(
                        "points {i} and {j} coincide"
                    )));
                }
            }
        }

        let rings = group_rings(&points);
        Ok(Self {
            amplitudes: points.iter().map(|p| p.norm()).collect(),
            phases: points.iter().map(|p| p.arg()).collect(),
            points,
            rings,
            name: name.into(),
        })
    }

    /// Square QAM of the given order, row-major over the grid (imaginary
    /// coordinate outer, real coordinate inner, both ascending).
    pub fn qam(order: usize) -> Result<Self> {
        let side = match order {
            4 => 2,
            16 => 4,
            64 => 8,
            256 => 16,
            _ => return Err(Error::UnsupportedOrder(order)),
        };
        let level = |k: usize| (2 * k) as f64 - (side - 1) as f64;
        let points = (0..side)
            .flat_map(|im| (0..side).map(move |re| Complex64::new(level(re), level(im))))
            .collect();
        Self::from_points(format!("qam{order}"), points)
    }

    /// Fermat spiral with golden-angle increments: every point has a distinct
    /// amplitude, so no equal-energy pairs exist.
    pub fn spiral(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(invalid("order", format!("spiral needs at least 2 points, got {order}")));
        }
        let golden = PI * (3.0 - 5f64.sqrt());
        let points = (0..order)
            .map(|k| Complex64::from_polar(((k + 1) as f64).sqrt(), golden * k as f64))
            .collect();
        Self::from_points(format!("spiral{order}"), points)
    }

    /// Reads a constellation from text: one point per line as `re im`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: n + 1,
                    reason: format!("`{s}`: {e}"),
                })
            };
            match fields.as_slice() {
                [re, im] => points.push(Complex64::new(parse(re)?, parse(im)?)),
                _ => {
                    return Err(Error::Parse {
                        line: n + 1,
                        reason: format!("expected two numbers, found {}", fields.len()),
                    })
                }
            }
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        Self::from_points(name, points)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// `|s_i|` for every point.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// `arg s_i` in `(-π, π]` for every point.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.points.len() as f64).log2()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Amplitude rings, sorted by increasing amplitude.
    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    /// Lowest-index point of maximum energy; used as the pilot symbol.
    pub fn max_energy_index(&self) -> usize {
        let outer = self.rings.last().expect("constellation has at least one ring");
        outer.members[0]
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// True when `|s_i|` and `|s_j|` agree to [`RING_TOLERANCE`].
    pub fn same_amplitude(&self, i: usize, j: usize) -> bool {
        same_amplitude(self.amplitudes[i], self.amplitudes[j])
    }
}

fn same_amplitude(a: f64, b: f64) -> bool {
    (a - b).abs() <= RING_TOLERANCE * a.max(b)
}

fn group_rings(points: &[Complex64]) -> Vec<Ring> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].norm().total_cmp(&points[b].norm()).then(a.cmp(&b)));

    let mut rings: Vec<Ring> = Vec::new();
    for idx in order {
        let amp = points[idx].norm();
        match rings.last_mut() {
            Some(ring) if same_amplitude(ring.amplitude, amp) => ring.members.push(idx),
            _ => rings.push(Ring {
                amplitude: amp,
                members: vec![idx],
            }),
        }
    }
    for ring in &mut rings {
        ring.members.sort_unstable();
    }
    rings
}

/// An Eb/N0 operating point and its complex-noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    pub eb_n0_db: f64,
    pub n0: f64,
}

impl SnrSpec {
    pub fn new(eb_n0_db: f64, bits_per_symbol: f64) -> Result<Self> {
        Ok(Self {
            eb_n0_db,
            n0: eb_n0_to_n0(eb_n0_db, bits_per_symbol)?,
        })
    }
}

/// Complex-noise variance for unit average symbol energy.
pub fn eb_n0_to_n0(eb_n0_db: f64, bits_per_symbol: f64) -> Result<f64> {
    if !(bits_per_symbol > 0.0 && bits_per_symbol.is_finite()) {
        return Err(invalid(
            "bits_per_symbol",
            format!("must be positive, got {bits_per_symbol}"),
        ));
    }
    if !eb_n0_db.is_finite() {
        return Err(invalid("eb_n0_db", format!("must be finite, got {eb_n0_db}")));
    }
    Ok(1.0 / (bits_per_symbol * 10f64.powf(eb_n0_db / 10.0)))
}

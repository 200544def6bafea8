//! Monte Carlo SEP estimation.
//!
//! Every Eb/N0 point draws frames from its own RNG streams (one per frame
//! index), and all detectors at a point see the same frames. Frames are
//! simulated in fixed-size batches; a detector stops once it has both the
//! minimum symbol count and the target error count, or hits the symbol cap.
//! Stopping is only decided between batches, so the counters do not depend
//! on how many threads ran the batch.

use rayon::prelude::*;

use super::config::{Method, Scenario, ScenarioConfig};
use crate::analysis::{error_floor, union_bound};
use crate::channel::{simulate_gaussian_scenario, simulate_wiener, Frame, PilotSchedule};
use crate::constellation::{eb_n0_to_n0, Constellation, ENERGY_CONVENTION};
use crate::detectors::soft_decide;
use crate::error::Result;
use crate::oracle::discrete_map_detect;
use crate::rng::{stream, RNG_NAME};
use crate::tracker::run_receiver;

/// One point of an SEP curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SepRow {
    pub detector: Method,
    pub eb_n0_db: f64,
    pub symbols: u64,
    pub errors: u64,
    /// `errors / symbols`; absent for analysis-only rows.
    pub sep: Option<f64>,
    /// `√(sep (1 - sep) / symbols)`.
    pub stderr: Option<f64>,
    pub analytic_bound: Option<f64>,
    pub analytic_floor: Option<f64>,
    /// The symbol cap was reached before the target error count.
    pub low_confidence: bool,
}

impl SepRow {
    pub fn from_counts(detector: Method, eb_n0_db: f64, symbols: u64, errors: u64) -> Self {
        let (sep, stderr) = if symbols > 0 {
            let p = errors as f64 / symbols as f64;
            (Some(p), Some((p * (1.0 - p) / symbols as f64).sqrt()))
        } else {
            (None, None)
        };
        Self {
            detector,
            eb_n0_db,
            symbols,
            errors,
            sep,
            stderr,
            analytic_bound: None,
            analytic_floor: None,
            low_confidence: false,
        }
    }
}

/// Run metadata written alongside the rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub scenario: String,
    pub constellation: String,
    pub energy_convention: String,
    pub rng: String,
}

impl CurveMetadata {
    pub fn for_config(config: &ScenarioConfig, constellation: &Constellation) -> Self {
        Self {
            seed: config.seed,
            config_hash: config.hash(),
            scenario: config.scenario.to_string(),
            constellation: constellation.name().to_string(),
            energy_convention: ENERGY_CONVENTION.to_string(),
            rng: RNG_NAME.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SepCurve {
    pub metadata: CurveMetadata,
    pub rows: Vec<SepRow>,
}

impl SepCurve {
    /// Rows of one detector, in grid order.
    pub fn detector(&self, method: Method) -> impl Iterator<Item = &SepRow> {
        self.rows.iter().filter(move |r| r.detector == method)
    }

    pub fn row(&self, method: Method, eb_n0_db: f64) -> Option<&SepRow> {
        self.rows
            .iter()
            .find(|r| r.detector == method && r.eb_n0_db == eb_n0_db)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counter {
    symbols: u64,
    errors: u64,
    done: bool,
}

/// Runs every (detector, Eb/N0) point of the configuration.
pub fn run_experiment(config: &ScenarioConfig) -> Result<SepCurve> {
    let config = config.clone().resolved();
    config.validate()?;
    let constellation = config.build_constellation()?;
    let per_point: Vec<Vec<Counter>> = config
        .eb_n0_db
        .par_iter()
        .enumerate()
        .map(|(point, &db)| simulate_point(&config, &constellation, point as u64, db))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(config.detectors.len() * config.eb_n0_db.len());
    for (m, &method) in config.detectors.iter().enumerate() {
        for (point, &db) in config.eb_n0_db.iter().enumerate() {
            let c = per_point[point][m];
            let mut row = SepRow::from_counts(method, db, c.symbols, c.errors);
            row.low_confidence = c.errors < config.target_errors;
            if config.scenario == Scenario::GaussianIid && method == Method::Detector(crate::DetectorKind::Gap) {
                let n0 = eb_n0_to_n0(db, constellation.bits_per_symbol())?;
                row.analytic_bound = Some(union_bound(&constellation, n0, config.sigma_p2)?.total);
                if config.sigma_p2 > 0.0 {
                    row.analytic_floor = Some(error_floor(&constellation, config.sigma_p2)?);
                }
            }
            rows.push(row);
        }
    }
    Ok(SepCurve {
        metadata: CurveMetadata::for_config(&config, &constellation),
        rows,
    })
}

fn simulate_point(config: &ScenarioConfig, constellation: &Constellation, point: u64, db: f64) -> Result<Vec<Counter>> {
    let n0 = eb_n0_to_n0(db, constellation.bits_per_symbol())?;
    let mut counters = vec![Counter::default(); config.detectors.len()];
    let batch = config.batch_frames as u64;
    let mut next_frame = 0u64;
    while counters.iter().any(|c| !c.done) {
        let active: Vec<bool> = counters.iter().map(|c| !c.done).collect();
        let results: Vec<Vec<(u64, u64)>> = (next_frame..next_frame + batch)
            .into_par_iter()
            .map(|frame| simulate_frame(config, constellation, n0, point, frame, &active))
            .collect::<Result<_>>()?;
        next_frame += batch;
        for frame_counts in &results {
            for (c, &(symbols, errors)) in counters.iter_mut().zip(frame_counts) {
                c.symbols += symbols;
                c.errors += errors;
            }
        }
        for c in counters.iter_mut().filter(|c| !c.done) {
            let enough = c.symbols >= config.min_symbols && c.errors >= config.target_errors;
            c.done = enough || c.symbols >= config.max_symbols;
        }
    }
    Ok(counters)
}

/// `(data symbols, symbol errors)` per configured detector; inactive
/// detectors report zeros.
fn simulate_frame(
    config: &ScenarioConfig,
    constellation: &Constellation,
    n0: f64,
    point: u64,
    frame_index: u64,
    active: &[bool],
) -> Result<Vec<(u64, u64)>> {
    let mut rng = stream(config.seed, point, frame_index);
    let options = config.decide_options();
    let mut counts = vec![(0, 0); config.detectors.len()];
    match config.scenario {
        Scenario::GaussianIid => {
            let frame = Frame::random(config.frame_length, constellation, PilotSchedule::NONE, 0, &mut rng)?;
            let samples = simulate_gaussian_scenario(&frame, constellation, n0, config.sigma_p2, &mut rng)?;
            for (m, method) in config.detectors.iter().enumerate() {
                let Method::Detector(kind) = *method else { continue };
                if !active[m] {
                    continue;
                }
                let mut errors = 0;
                for (sample, &truth) in samples.iter().zip(&frame.symbols) {
                    if soft_decide(sample, constellation, kind, &options)?.hard_index != truth {
                        errors += 1;
                    }
                }
                counts[m] = (samples.len() as u64, errors);
            }
        }
        Scenario::WienerEkf => {
            let pilot = constellation.max_energy_index();
            let frame = Frame::random(config.frame_length, constellation, config.pilots, pilot, &mut rng)?;
            let out = simulate_wiener(&frame, constellation, n0, config.sigma_delta2, &mut rng)?;
            let data = frame.data_positions().count() as u64;
            let tracker = config.tracker();
            for (m, method) in config.detectors.iter().enumerate() {
                if !active[m] {
                    continue;
                }
                let errors = match *method {
                    Method::Detector(kind) => run_receiver(&out, &frame, constellation, kind, &tracker, n0, &options)?
                        .decisions
                        .iter()
                        .filter(|d| d.decision.hard_index != frame.symbols[d.position])
                        .count(),
                    Method::DiscreteMap => {
                        let map = discrete_map_detect(&out, &frame, constellation, config.sigma_delta2, n0, config.map_bins)?;
                        frame
                            .data_positions()
                            .filter(|&k| map.decisions[k].hard_index != frame.symbols[k])
                            .count()
                    }
                };
                counts[m] = (data, errors as u64);
            }
        }
    }
    Ok(counts)
}

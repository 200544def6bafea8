//! Experiment configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! scenario = "gaussian_iid"      # or "wiener_ekf"
//! constellation = "qam"          # or "spiral"
//! order = 16
//! detectors = ["EUC", "FOS", "VB", "GAP", "TSD", "SOM"]
//! eb_n0_db = [10, 12, 14]        # or omit for the default grid
//! sigma_p2 = 1e-2                # gaussian_iid
//! sigma_delta2 = 1e-2            # wiener_ekf
//! frame_length = 10000
//! pilots = { head = 5, spacing = 15 }
//! min_symbols = 100000
//! target_errors = 100
//! max_symbols = 10000000
//! seed = 1
//! max_iterations = 3
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::PilotSchedule;
use crate::constellation::Constellation;
use crate::detectors::{DecideOptions, DetectorKind, DEFAULT_SOM_FLOOR};
use crate::error::{Error, Result};
use crate::tracker::{DetectorVariance, TrackerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Compensated observations with i.i.d. Gaussian phase errors.
    GaussianIid,
    /// Wiener phase noise tracked by the EKF receiver.
    WienerEkf,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::GaussianIid => "gaussian_iid",
            Scenario::WienerEkf => "wiener_ekf",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_iid" => Ok(Scenario::GaussianIid),
            "wiener_ekf" => Ok(Scenario::WienerEkf),
            other => Err(Error::Config(vec![format!(
                "unknown scenario `{other}` (expected gaussian_iid or wiener_ekf)"
            )])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstellationKind {
    Qam,
    /// Distinct-amplitude Fermat spiral.
    Spiral,
}

/// A detector curve: one of the symbol-by-symbol detectors or the
/// discretized-phase forward-backward receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Detector(DetectorKind),
    DiscreteMap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Detector(kind) => kind.fmt(f),
            Method::DiscreteMap => f.write_str("MAP"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("MAP") || s.eq_ignore_ascii_case("BCJR") {
            return Ok(Method::DiscreteMap);
        }
        s.parse().map(Method::Detector)
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub constellation: ConstellationKind,
    pub order: usize,
    pub detectors: Vec<Method>,
    /// Empty means the default grid for the order.
    pub eb_n0_db: Vec<f64>,
    pub sigma_p2: f64,
    pub sigma_delta2: f64,
    pub frame_length: usize,
    pub pilots: PilotSchedule,
    /// Minimum data symbols per point.
    pub min_symbols: u64,
    pub target_errors: u64,
    /// Hard cap on data symbols per point.
    pub max_symbols: u64,
    pub seed: u64,
    pub max_iterations: usize,
    pub initial_variance: f64,
    pub detector_variance: DetectorVariance,
    pub include_log_term: bool,
    pub som_floor: f64,
    /// Phase bins for the MAP receiver; 0 means `8C`.
    pub map_bins: usize,
    /// Frames simulated per parallel batch.
    pub batch_frames: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::GaussianIid,
            constellation: ConstellationKind::Qam,
            order: 16,
            detectors: DetectorKind::ALL.iter().map(|&k| Method::Detector(k)).collect(),
            eb_n0_db: Vec::new(),
            sigma_p2: 1e-2,
            sigma_delta2: 1e-2,
            frame_length: 10_000,
            pilots: PilotSchedule::default(),
            min_symbols: 100_000,
            target_errors: 100,
            max_symbols: 10_000_000,
            seed: 1,
            max_iterations: 3,
            initial_variance: 1.0,
            detector_variance: DetectorVariance::default(),
            include_log_term: true,
            som_floor: DEFAULT_SOM_FLOOR,
            map_bins: 0,
            batch_frames: 8,
        }
    }
}

/// Default Eb/N0 grid for a constellation order: 10–40 dB in 2 dB steps up
/// to 64 points, 20–45 dB in 2.5 dB steps above.
pub fn default_grid(order: usize) -> Vec<f64> {
    if order > 64 {
        (0..=10).map(|k| 20.0 + 2.5 * k as f64).collect()
    } else {
        (0..=15).map(|k| 10.0 + 2.0 * k as f64).collect()
    }
}

/// Parses `start:step:stop` (inclusive) into a grid.
pub fn parse_grid(range: &str) -> Result<Vec<f64>> {
    let bad = |reason: &str| Error::Config(vec![format!("bad Eb/N0 range `{range}`: {reason}")]);
    let parts: Vec<f64> = range
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("expected numbers"))?;
    let (start, step, stop) = match parts[..] {
        [single] => return Ok(vec![single]),
        [a, b, c] => (a, b, c),
        _ => return Err(bad("expected start:step:stop")),
    };
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(bad("need a positive step and start <= stop"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(bad("too many points"));
    }
    Ok((0..count).map(|k| start + step * k as f64).collect())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Fills in defaults that depend on other fields.
    pub fn resolved(mut self) -> Self {
        if self.eb_n0_db.is_empty() {
            self.eb_n0_db = default_grid(self.order);
        }
        if self.map_bins == 0 {
            self.map_bins = 8 * self.order;
        }
        self
    }

    /// Every problem with the configuration, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                problems.push(msg);
            }
        };
        match self.constellation {
            ConstellationKind::Qam => check(
                [4, 16, 64, 256].contains(&self.order),
                format!("order {} is not a supported QAM order (4, 16, 64, 256)", self.order),
            ),
            ConstellationKind::Spiral => check(self.order >= 2, format!("order {} is below 2", self.order)),
        }
        check(!self.detectors.is_empty(), "detector list is empty".into());
        let mut seen = self.detectors.clone();
        seen.sort();
        seen.dedup();
        check(seen.len() == self.detectors.len(), "detector list has duplicates".into());
        check(!self.eb_n0_db.is_empty(), "Eb/N0 grid is empty".into());
        check(
            self.eb_n0_db.iter().all(|x| x.is_finite()),
            "Eb/N0 grid has non-finite entries".into(),
        );
        match self.scenario {
            Scenario::GaussianIid => {
                check(
                    self.sigma_p2.is_finite() && self.sigma_p2 >= 0.0,
                    format!("sigma_p2 must be finite and non-negative, got {}", self.sigma_p2),
                );
                check(
                    !self.detectors.contains(&Method::DiscreteMap),
                    "MAP is only available in the wiener_ekf scenario".into(),
                );
                if self.sigma_p2 == 0.0 {
                    check(
                        !self.detectors.contains(&Method::Detector(DetectorKind::Fos)),
                        "FOS needs sigma_p2 > 0".into(),
                    );
                }
            }
            Scenario::WienerEkf => {
                check(
                    self.sigma_delta2.is_finite() && self.sigma_delta2 >= 0.0,
                    format!("sigma_delta2 must be finite and non-negative, got {}", self.sigma_delta2),
                );
                check(self.pilots.head >= 1, "wiener_ekf needs at least one head pilot".into());
                check(
                    self.frame_length > self.pilots.head,
                    "frame_length must exceed the pilot head".into(),
                );
                check(self.map_bins == 0 || self.map_bins >= 8, format!("map_bins {} is below 8", self.map_bins));
            }
        }
        check(self.frame_length >= 1, "frame_length must be positive".into());
        check(
            self.min_symbols >= 10_000,
            format!("min_symbols must be at least 10000, got {}", self.min_symbols),
        );
        check(
            self.max_symbols >= self.min_symbols,
            "max_symbols must be at least min_symbols".into(),
        );
        check(self.target_errors >= 1, "target_errors must be positive".into());
        check(self.max_iterations >= 1, "max_iterations must be at least 1".into());
        check(
            self.initial_variance.is_finite() && self.initial_variance > 0.0,
            "initial_variance must be positive".into(),
        );
        check(
            self.som_floor.is_finite() && self.som_floor > 0.0,
            "som_floor must be positive".into(),
        );
        check(self.batch_frames >= 1, "batch_frames must be positive".into());
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn build_constellation(&self) -> Result<Constellation> {
        match self.constellation {
            ConstellationKind::Qam => Constellation::qam(self.order),
            ConstellationKind::Spiral => Constellation::spiral(self.order),
        }
    }

    pub fn decide_options(&self) -> DecideOptions {
        DecideOptions {
            include_log_term: self.include_log_term,
            som_floor: self.som_floor,
            ..DecideOptions::default()
        }
    }

    pub fn tracker(&self) -> TrackerConfig {
        TrackerConfig {
            sigma_delta2: self.sigma_delta2,
            max_iterations: self.max_iterations,
            initial_variance: self.initial_variance,
            detector_variance: self.detector_variance,
        }
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_once_resolved() {
        let c = ScenarioConfig::default();
        assert!(c.validate().is_err());
        let c = c.resolved();
        c.validate().unwrap();
        assert_eq!(c.eb_n0_db.first(), Some(&10.0));
        assert_eq!(c.eb_n0_db.last(), Some(&40.0));
        assert_eq!(c.map_bins, 128);
        assert_eq!(default_grid(256).first(), Some(&20.0));
        assert_eq!(default_grid(256).last(), Some(&45.0));
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let text = r#"
            scenario = "wiener_ekf"
            order = 16
            detectors = ["GAP", "EUC", "MAP"]
            eb_n0_db = [20.0, 25.0]
            sigma_delta2 = 1e-3
            pilots = { head = 5, spacing = 15 }
        "#;
        let c = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(c.scenario, Scenario::WienerEkf);
        assert_eq!(c.detectors[2], Method::DiscreteMap);
        assert_eq!(c.min_symbols, 100_000);
        let back = ScenarioConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_and_detectors_are_rejected() {
        assert!(ScenarioConfig::from_toml("ordr = 16").is_err());
        assert!(ScenarioConfig::from_toml("detectors = [\"XYZ\"]").is_err());
    }

    #[test]
    fn validation_lists_every_problem() {
        let c = ScenarioConfig {
            order: 15,
            detectors: vec![Method::DiscreteMap],
            min_symbols: 10,
            max_iterations: 0,
            ..ScenarioConfig::default()
        };
        match c.validate() {
            Err(Error::Config(list)) => assert!(list.len() >= 5, "{list:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("10:2:16").unwrap(), vec![10.0, 12.0, 14.0, 16.0]);
        assert_eq!(parse_grid("20:5:45").unwrap().len(), 6);
        assert_eq!(parse_grid("30").unwrap(), vec![30.0]);
        assert!(parse_grid("10:0:20").is_err());
        assert!(parse_grid("20:1:10").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!("map".parse::<Method>().unwrap(), Method::DiscreteMap);
        assert_eq!("GAP-D".parse::<Method>().unwrap(), Method::Detector(DetectorKind::Gap));
        assert_eq!(Method::DiscreteMap.to_string(), "MAP");
        assert_eq!(Method::Detector(DetectorKind::Tsd).to_string(), "TSD");
    }
}

//! Monte Carlo experiments, configuration and CSV output.

pub mod compare;
pub mod config;
pub mod csv;
pub mod experiment;

pub use compare::{oracle_agreement, Agreement};
pub use config::{default_grid, parse_grid, ConstellationKind, Method, Scenario, ScenarioConfig};
pub use csv::{emit_csv, parse_csv, to_csv_string, write_csv};
pub use experiment::{run_experiment, CurveMetadata, SepCurve, SepRow};

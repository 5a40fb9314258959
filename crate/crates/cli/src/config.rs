//! Experiment files.
//!
//! An experiment is a TOML document: top-level keys name the experiment and
//! pick the MCS table, `[scenario]` (with `[scenario.channel]`,
//! `[scenario.controller]`, `[scenario.power_model]`, `[scenario.decode]`)
//! overrides simulator defaults, and optional `[run]`, `[sweep]` and
//! `[shannon]` blocks describe what to execute.

use std::path::{Path, PathBuf};

use hsdpa_ee::mcs_table::McsTable;
use hsdpa_ee::{AntennaMode, ScenarioConfig, Strategy, SweepValue, SweepVariable};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// `default`, `category10` or a path to a table CSV, relative to the
    /// experiment file.
    #[serde(default = "default_table")]
    pub table: String,
    /// Geometry factor in dB at `geometry_distance_m`. Sets the inter-cell
    /// interference, which then stays fixed when the distance changes.
    #[serde(default)]
    pub geometry_db: Option<f64>,
    #[serde(default = "default_geometry_distance")]
    pub geometry_distance_m: f64,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub shannon: Option<ShannonBlock>,
}

fn default_table() -> String {
    "default".into()
}

fn default_geometry_distance() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    /// Strategies to run on the same seed; defaults to the scenario's own.
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    /// Width of the moving average written to the `ee_smoothed` trace column.
    #[serde(default = "one")]
    pub smoothing_ttis: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub variable: String,
    pub values: Vec<SweepValue>,
    #[serde(default = "default_reps")]
    pub reps: u32,
    #[serde(default = "all_strategies")]
    pub strategies: Vec<Strategy>,
    /// Repeats the sweep once per antenna mode.
    #[serde(default)]
    pub antenna_modes: Vec<AntennaMode>,
}

fn default_reps() -> u32 {
    20
}

fn all_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

/// AWGN Shannon curve over a transmit-power grid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShannonBlock {
    #[serde(default = "default_n0")]
    pub n0_w_per_hz: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_p_max")]
    pub p_max_dbm: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_n0() -> f64 {
    2e-7
}

fn default_bandwidth() -> f64 {
    5e6
}

fn default_p_max() -> f64 {
    43.0
}

fn default_points() -> usize {
    1000
}

/// A sweep ready to execute.
#[derive(Debug, Clone)]
pub struct ResolvedSweep {
    pub variable: SweepVariable,
    pub values: Vec<SweepValue>,
    pub reps: u32,
    pub strategies: Vec<Strategy>,
    pub antenna_modes: Vec<AntennaMode>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The scenario with the table loaded and the geometry applied.
    /// `base_dir` resolves relative table paths.
    pub fn scenario(&self, base_dir: &Path) -> Result<ScenarioConfig, CliError> {
        if self.name.trim().is_empty() {
            return Err(CliError::Invalid("experiment name must not be empty".into()));
        }
        let mut s = self.scenario.clone();
        s.table = match McsTable::bundled(&self.table) {
            Some(t) => t,
            None => {
                let path = base_dir.join(&self.table);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                McsTable::load_csv(&text, McsTable::DEFAULT_BER_TARGET)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
            }
        };
        if let Some(g) = self.geometry_db {
            if !(self.geometry_distance_m > 0.0) {
                return Err(CliError::Invalid("geometry_distance_m must be positive".into()));
            }
            let distance = s.channel.distance_m;
            s.channel.distance_m = self.geometry_distance_m;
            s.channel.set_geometry_db(g);
            s.channel.distance_m = distance;
        }
        s.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(s)
    }

    pub fn resolved_sweep(&self) -> Result<ResolvedSweep, CliError> {
        let block = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Invalid(format!("experiment {:?} has no [sweep] block", self.name)))?;
        let variable: SweepVariable = block
            .variable
            .parse()
            .map_err(|e: hsdpa_ee::SimError| CliError::Invalid(e.to_string()))?;
        if block.values.is_empty() {
            return Err(CliError::Invalid("sweep values must not be empty".into()));
        }
        if block.reps == 0 {
            return Err(CliError::Invalid("sweep reps must be positive".into()));
        }
        if block.strategies.is_empty() {
            return Err(CliError::Invalid("sweep strategies must not be empty".into()));
        }
        Ok(ResolvedSweep {
            variable,
            values: block.values.clone(),
            reps: block.reps,
            strategies: block.strategies.clone(),
            antenna_modes: block.antenna_modes.clone(),
        })
    }

    pub fn run_strategies(&self) -> Vec<Strategy> {
        if self.run.strategies.is_empty() {
            vec![self.scenario.strategy]
        } else {
            self.run.strategies.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults() {
        let spec = ExperimentSpec::from_toml("name = \"x\"\n").unwrap();
        assert_eq!(spec.table, "default");
        let s = spec.scenario(Path::new(".")).unwrap();
        assert_eq!(s, ScenarioConfig::default());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ExperimentSpec::from_toml("name = \"x\"\n[scenario]\nduration_ttis = = 3\n").unwrap_err();
        let CliError::Parse(msg) = err else { panic!("{err:?}") };
        assert!(msg.contains("line 3"), "{msg}");
        let err = ExperimentSpec::from_toml("name = \"x\"\nbogus = 1\n").unwrap_err();
        let CliError::Parse(msg) = err else { panic!("{err:?}") };
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn geometry_is_set_at_its_reference_distance() {
        let spec = ExperimentSpec::from_toml(
            "name = \"g\"\ngeometry_db = 8.0\ngeometry_distance_m = 200.0\n[scenario.channel]\ndistance_m = 50.0\n",
        )
        .unwrap();
        let s = spec.scenario(Path::new(".")).unwrap();
        assert_eq!(s.channel.distance_m, 50.0);
        let mut at_ref = s.channel.clone();
        at_ref.distance_m = 200.0;
        assert!((at_ref.geometry_db() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_values_accept_numbers_and_modes() {
        let spec = ExperimentSpec::from_toml(
            "name = \"s\"\n[sweep]\nvariable = \"antenna_mode\"\nvalues = [\"simo\", \"mimo\"]\n",
        )
        .unwrap();
        let sw = spec.resolved_sweep().unwrap();
        assert_eq!(
            sw.values,
            vec![SweepValue::Mode(AntennaMode::Simo), SweepValue::Mode(AntennaMode::Mimo)]
        );
        let spec =
            ExperimentSpec::from_toml("name = \"s\"\n[sweep]\nvariable = \"speed\"\nvalues = [3, 30.5]\n").unwrap();
        assert_eq!(
            spec.resolved_sweep().unwrap().values,
            vec![SweepValue::Num(3.0), SweepValue::Num(30.5)]
        );
    }

    #[test]
    fn bad_sweeps_are_invalid() {
        let spec = ExperimentSpec::from_toml("name = \"s\"\n[sweep]\nvariable = \"speed\"\nvalues = []\n").unwrap();
        assert!(matches!(spec.resolved_sweep(), Err(CliError::Invalid(_))));
        let spec = ExperimentSpec::from_toml("name = \"s\"\n[sweep]\nvariable = \"height\"\nvalues = [1]\n").unwrap();
        assert!(matches!(spec.resolved_sweep(), Err(CliError::Invalid(_))));
    }
}

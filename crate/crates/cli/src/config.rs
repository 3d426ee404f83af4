//! Scenario files: one JSON document per run, unknown keys rejected.
//!
//! Frequencies are numeric values in 2π×MHz, so `"omega_c": 11` is 2π×11 MHz.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rydswitch::blockade::BlockadeInput;
use rydswitch::{AngularFreq, LadderField, LadderParams};
use serde::Deserialize;

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Medium parameters; the gate-off set for `propagate`.
    pub params: Option<LadderParams>,
    /// Gate-on parameters for `propagate`.
    pub gate_params: Option<LadderParams>,
    pub grid: Option<Grid>,
    pub pulse: Option<PulseConfig>,
    pub blockade: Option<BlockadeConfig>,
    pub fit: Option<FitConfig>,
    pub tomography: Option<TomographyConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub bandwidth: AngularFreq,
    pub samples: usize,
    /// Sample spacing in ns.
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockadeConfig {
    /// C̄6 in 2π×GHz·μm⁶.
    pub c6: f64,
    #[serde(default)]
    pub delta_c: AngularFreq,
    pub omega_c: AngularFreq,
    /// Gate photon flux per μs.
    pub flux: Option<f64>,
    /// ns per μm.
    pub group_delay_per_length: Option<f64>,
}

impl BlockadeConfig {
    pub fn input(&self) -> BlockadeInput {
        BlockadeInput {
            c6: self.c6,
            delta_c: self.delta_c,
            omega_c: self.omega_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub free: Vec<LadderField>,
    /// Starting values that differ from `params`.
    #[serde(default)]
    pub start: HashMap<LadderField, f64>,
    /// Gaussian noise added to synthetic data (no `--data` file).
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default)]
    pub theta: f64,
    pub total_per_setting: f64,
    #[serde(default = "yes")]
    pub poisson: bool,
}

fn yes() -> bool {
    true
}

impl Scenario {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
    }

    /// Parses a scenario; errors carry the offending key path and line.
    pub fn parse(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let at = e.path().to_string();
            if at == "." {
                e.inner().to_string()
            } else {
                format!("`{at}`: {}", e.inner())
            }
        })
    }

    pub fn params(&self) -> CliResult<LadderParams> {
        let p = self.params.ok_or_else(|| missing("params"))?;
        p.validate().context("params")?;
        Ok(p)
    }

    pub fn gate_params(&self) -> CliResult<LadderParams> {
        let p = self.gate_params.ok_or_else(|| missing("gate_params"))?;
        p.validate().context("gate_params")?;
        Ok(p)
    }

    pub fn grid(&self) -> CliResult<Vec<AngularFreq>> {
        let g = self.grid.ok_or_else(|| missing("grid"))?;
        if g.points < 2 {
            return Err(CliError::physics(
                "grid.points",
                format!("need at least 2, got {}", g.points),
            ));
        }
        if !(g.start.is_finite() && g.stop.is_finite() && g.stop > g.start) {
            return Err(CliError::physics(
                "grid.stop",
                format!("must exceed grid.start ({} vs {})", g.stop, g.start),
            ));
        }
        Ok(rydswitch::optical_response::linear_grid(
            g.start, g.stop, g.points,
        ))
    }

    pub fn pulse(&self) -> CliResult<PulseConfig> {
        let p = self.pulse.ok_or_else(|| missing("pulse"))?;
        if p.samples < rydswitch::propagation::MIN_SAMPLES || !p.samples.is_power_of_two() {
            return Err(CliError::physics(
                "pulse.samples",
                format!("must be a power of two >= 64, got {}", p.samples),
            ));
        }
        if !(p.dt.is_finite() && p.dt > 0.0) {
            return Err(CliError::physics(
                "pulse.dt",
                format!("must be > 0, got {}", p.dt),
            ));
        }
        if !(p.bandwidth.0.is_finite() && p.bandwidth.0 > 0.0) {
            return Err(CliError::physics(
                "pulse.bandwidth",
                format!("must be > 0, got {}", p.bandwidth.0),
            ));
        }
        Ok(p)
    }

    pub fn blockade(&self) -> CliResult<BlockadeConfig> {
        let b = self.blockade.ok_or_else(|| missing("blockade"))?;
        if b.flux.is_some() != b.group_delay_per_length.is_some() {
            return Err(CliError::Input(
                "blockade: flux and group_delay_per_length must be given together".into(),
            ));
        }
        Ok(b)
    }
}

fn missing(section: &str) -> CliError {
    CliError::Input(format!("config has no `{section}` section"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario() {
        let s = Scenario::parse(r#"{"params": {"omega_c": 11, "gamma_e": 3, "od": 20}}"#).unwrap();
        let p = s.params().unwrap();
        assert_eq!(p.omega_c, AngularFreq(11.0));
        assert_eq!(p.length, 1.0);
        assert_eq!(s.seed, 0);
        assert!(s.grid().is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = Scenario::parse(r#"{"params": {"omega_cc": 11}}"#).unwrap_err();
        assert!(err.contains("params"), "{err}");
        assert!(err.contains("omega_cc"), "{err}");
        let err = Scenario::parse(r#"{"grid": {"start": 0, "stop": 1, "points": 2, "step": 1}}"#)
            .unwrap_err();
        assert!(err.contains("step"), "{err}");
    }

    #[test]
    fn type_errors_carry_path_and_line() {
        let err = Scenario::parse("{\n  \"grid\": {\"start\": 0, \"stop\": 1, \"points\": -1}\n}")
            .unwrap_err();
        assert!(err.contains("grid.points"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn grid_points_validated() {
        let s = Scenario::parse(r#"{"grid": {"start": 0, "stop": 1, "points": 1}}"#).unwrap();
        let err = s.grid().unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("grid.points"));
    }

    #[test]
    fn pulse_samples_power_of_two() {
        let s =
            Scenario::parse(r#"{"pulse": {"bandwidth": 5, "samples": 1000, "dt": 1}}"#).unwrap();
        assert!(s.pulse().unwrap_err().to_string().contains("pulse.samples"));
    }

    #[test]
    fn fit_fields_by_name() {
        let s = Scenario::parse(
            r#"{"fit": {"free": ["omega_c", "gamma_dr"], "start": {"omega_c": 8}}}"#,
        )
        .unwrap();
        let f = s.fit.unwrap();
        assert_eq!(f.free, vec![LadderField::OmegaC, LadderField::GammaDr]);
        assert_eq!(f.start[&LadderField::OmegaC], 8.0);
    }

    #[test]
    fn flux_needs_delay() {
        let s =
            Scenario::parse(r#"{"blockade": {"c6": 32, "omega_c": 11, "flux": 15.5}}"#).unwrap();
        assert_eq!(s.blockade().unwrap_err().exit_code(), 2);
    }
}

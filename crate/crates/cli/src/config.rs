//! Experiment configuration: one JSON document plus command-line overrides.

use std::path::{Path, PathBuf};

use antiito_core::fpe::BoundaryMode;
use antiito_core::{ModelParams, SimulationConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Stationary,
    Sweep,
    Classify,
    Fpe,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Stationary => "stationary",
            Command::Sweep => "sweep",
            Command::Classify => "classify",
            Command::Fpe => "fpe",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// One of `q`, `r`, `v`, `c`, `sigma`, `sigma_sq`.
    pub parameter: String,
    pub values: Vec<f64>,
    /// Run a Monte Carlo ensemble per value and report its extinct fraction.
    pub simulate: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: "sigma_sq".into(),
            values: Vec::new(),
            simulate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryConfig {
    pub points: usize,
    /// Right end of the table; defaults to where the density is negligible.
    pub x_max: Option<f64>,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            points: 1001,
            x_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpeConfig {
    pub n_cells: usize,
    /// Domain end; defaults to a `1e-12` tail cut of the stationary law, or 8.
    pub x_max: Option<f64>,
    pub t_final: f64,
    /// Longest time step.
    pub dt: f64,
    pub x0: f64,
    pub boundary: BoundaryMode,
    /// Extra output times before `t_final`.
    pub snapshots: Vec<f64>,
}

impl Default for FpeConfig {
    fn default() -> Self {
        Self {
            n_cells: 2048,
            x_max: None,
            t_final: 50.0,
            dt: 0.1,
            x0: 1.0,
            boundary: BoundaryMode::ZeroFlux,
            snapshots: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub params: ModelParams,
    pub sim: Option<SimulationConfig>,
    pub sweep: Option<SweepConfig>,
    pub stationary: StationaryConfig,
    pub fpe: FpeConfig,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            params: ModelParams {
                q: 2.0,
                r: 1.0,
                v: 1.0,
                c: 1.0,
                sigma: 1.0,
            },
            sim: None,
            sweep: None,
            stationary: StationaryConfig::default(),
            fpe: FpeConfig::default(),
            output_path: None,
            format: Format::Csv,
        }
    }
}

/// Command-line values that replace fields of the loaded document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub v: Option<f64>,
    pub c: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    /// Applies overrides and fixes the command, yielding the effective config.
    pub fn resolve(mut self, command: Command, o: &Overrides) -> Result<Self, CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        self.command = Some(command);
        let p = &mut self.params;
        for (slot, value) in [
            (&mut p.q, o.q),
            (&mut p.r, o.r),
            (&mut p.v, o.v),
            (&mut p.c, o.c),
            (&mut p.sigma, o.sigma),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if let Some(seed) = o.seed {
            self.sim.get_or_insert_with(SimulationConfig::default).seed = seed;
        }
        if let Some(out) = &o.out {
            self.output_path = Some(out.clone());
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        self.params.validate()?;
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        if let Some(sweep) = &self.sweep {
            SweepAxis::parse(&sweep.parameter)?;
        }
        Ok(self)
    }

    /// Whether the command draws random paths, and so has a seed to report.
    pub fn simulates(&self) -> bool {
        match self.command {
            Some(Command::Simulate | Command::Compare) => true,
            Some(Command::Sweep) => self.sweep.as_ref().is_some_and(|s| s.simulate),
            _ => self.sim.is_some(),
        }
    }

    pub fn sim_or_default(&self) -> SimulationConfig {
        self.sim.clone().unwrap_or_default()
    }

    /// Canonical serialization used for the content hash. The output path is
    /// left out so an artifact's hash does not depend on where it was written.
    pub fn canonical_json(&self) -> String {
        let unplaced = Self {
            output_path: None,
            ..self.clone()
        };
        serde_json::to_string(&unplaced).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Q,
    R,
    V,
    C,
    Sigma,
    SigmaSq,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "q" => SweepAxis::Q,
            "r" => SweepAxis::R,
            "v" => SweepAxis::V,
            "c" => SweepAxis::C,
            "sigma" => SweepAxis::Sigma,
            "sigma_sq" => SweepAxis::SigmaSq,
            other => {
                return Err(CliError::Config(format!(
                    "unknown sweep parameter `{other}` (expected q, r, v, c, sigma or sigma_sq)"
                )))
            }
        })
    }

    /// Parameters with the swept value substituted.
    pub fn apply(self, base: &ModelParams, value: f64) -> ModelParams {
        let mut p = *base;
        match self {
            SweepAxis::Q => p.q = value,
            SweepAxis::R => p.r = value,
            SweepAxis::V => p.v = value,
            SweepAxis::C => p.c = value,
            SweepAxis::Sigma => p.sigma = value,
            SweepAxis::SigmaSq => p.sigma = value.sqrt(),
        }
        p
    }

    /// σ² for classification, taken from the swept value itself when the
    /// axis is `sigma_sq` so that critical values are hit exactly.
    pub fn sigma_sq(self, params: &ModelParams, value: f64) -> f64 {
        match self {
            SweepAxis::SigmaSq => value,
            _ => params.sigma_sq(),
        }
    }
}

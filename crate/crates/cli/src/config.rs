//! Run configuration: a JSON file, optionally referencing an environment
//! file, with command-line overrides applied on top.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sharpwave::model::{Environment, SamplingGrid};
use sharpwave::phaseplane::{F0Case, ShootingConfig};
use sharpwave::renorm::RenormConfig;
use sharpwave::solver::SolverConfig;
use sharpwave::stationary::SteadyConfig;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Initial data for `simulate` and `diagnose`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Initial {
    /// The maximal steady state left of `k`, zero to the right.
    Heaviside {
        #[serde(default)]
        k: f64,
        #[serde(default = "default_window")]
        window: (f64, f64),
    },
    /// Even bump `height·(1 − (x/width)²)_+` on the half line `x ≥ 0`.
    Bump { height: f64, width: f64 },
}

fn default_window() -> (f64, f64) {
    (-10.0, 3.0)
}

impl Default for Initial {
    fn default() -> Self {
        Initial::Heaviside {
            k: 0.0,
            window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateOptions {
    /// Also build a compact subsolution and verify the domination inequality.
    pub f2: bool,
    pub case: Option<F0Case>,
    pub grid: SamplingGrid,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            f2: true,
            case: None,
            grid: SamplingGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubsolutionOptions {
    pub case: Option<F0Case>,
    #[serde(flatten)]
    pub shooting: ShootingConfig,
    /// Sample counts in x and z for the domination check.
    pub check_nx: usize,
    pub check_nz: usize,
}

impl Default for SubsolutionOptions {
    fn default() -> Self {
        Self {
            case: None,
            shooting: ShootingConfig::default(),
            check_nx: 256,
            check_nz: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOptions {
    pub initial: Initial,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub trajectory_spacing: f64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            initial: Initial::default(),
            t_end: 10.0,
            snapshot_every: 0.25,
            trajectory_spacing: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseOptions {
    /// Pairs of initial data, each run to `t_end` and compared.
    pub pairs: Vec<[Initial; 2]>,
    pub t_end: f64,
    pub snapshot_every: f64,
    /// Grazing-contact threshold; `10·dx·C1` from the runs when omitted.
    pub tol: Option<f64>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            pairs: vec![[
                Initial::Heaviside {
                    k: 0.5,
                    window: default_window(),
                },
                Initial::default(),
            ]],
            t_end: 2.0,
            snapshot_every: 1.0 / 16.0,
            tol: None,
        }
    }
}

/// File form; `environment` is either an inline object or a path relative
/// to the config file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    environment: serde_json::Value,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    steady: SteadyConfig,
    #[serde(default)]
    renorm: RenormConfig,
    #[serde(default)]
    validate: ValidateOptions,
    #[serde(default)]
    subsolution: SubsolutionOptions,
    #[serde(default)]
    simulate: SimulateOptions,
    #[serde(default)]
    diagnose: DiagnoseOptions,
    #[serde(default)]
    out: Option<PathBuf>,
}

/// Fully resolved configuration. Everything here except `out` enters the
/// run id.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub environment: Environment,
    pub solver: SolverConfig,
    pub steady: SteadyConfig,
    pub renorm: RenormConfig,
    pub validate: ValidateOptions,
    pub subsolution: SubsolutionOptions,
    pub simulate: SimulateOptions,
    pub diagnose: DiagnoseOptions,
    #[serde(skip)]
    pub out: PathBuf,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dx: Option<f64>,
    pub n_max: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// `dx` must be the reciprocal of a whole number of cells per period.
pub fn cells_from_dx(dx: f64) -> Result<usize, ConfigError> {
    if !(dx > 0.0 && dx <= 0.25) {
        return Err(ConfigError::Invalid(format!("dx = {dx} outside (0, 1/4]")));
    }
    let n = (1.0 / dx).round();
    if ((1.0 / n) - dx).abs() > 1e-9 * dx.max(1e-12) + 1e-12 {
        return Err(ConfigError::Invalid(format!(
            "dx = {dx} is not 1/N for an integer N"
        )));
    }
    Ok(n as usize)
}

/// Parses `0.00390625` or `1/256`.
pub fn parse_dx(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("dx must be positive, got {s}"))
    }
}

/// Which tolerance `--tol` sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TolTarget {
    Steady,
    Renorm,
    Diagnose,
    None,
}

impl RunConfig {
    pub fn load(
        path: &Path,
        overrides: &Overrides,
        tol_target: TolTarget,
    ) -> Result<Self, ConfigError> {
        let raw: RawConfig = read_json(path)?;
        let environment = match raw.environment {
            serde_json::Value::String(rel) => {
                let base = path.parent().unwrap_or(Path::new("."));
                read_json(&base.join(rel))?
            }
            value => serde_json::from_value(value).map_err(|source| ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            })?,
        };
        let mut cfg = RunConfig {
            environment,
            solver: raw.solver,
            steady: raw.steady,
            renorm: raw.renorm,
            validate: raw.validate,
            subsolution: raw.subsolution,
            simulate: raw.simulate,
            diagnose: raw.diagnose,
            out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
        };
        if let Some(dx) = overrides.dx {
            let n = cells_from_dx(dx)?;
            cfg.solver.cells_per_unit = n;
            cfg.steady.cells_per_unit = n;
        }
        if let Some(n) = overrides.n_max {
            cfg.renorm.n_max = n;
        }
        if let Some(tol) = overrides.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "tol = {tol} must be positive"
                )));
            }
            match tol_target {
                TolTarget::Steady => cfg.steady.tol = tol,
                TolTarget::Renorm => cfg.renorm.tol = tol,
                TolTarget::Diagnose => cfg.diagnose.tol = Some(tol),
                TolTarget::None => {}
            }
        }
        if let Some(out) = &overrides.out {
            cfg.out = out.clone();
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.solver.validate().map_err(|e| invalid(&e))?;
        self.renorm.validate().map_err(|e| invalid(&e))?;
        if self.steady.cells_per_unit < 8
            || !(self.steady.tol > 0.0)
            || !(self.steady.max_time > 0.0)
        {
            return Err(ConfigError::Invalid(
                "steady: need at least 8 cells, positive tol and max_time".into(),
            ));
        }
        let sim = &self.simulate;
        if !(sim.t_end > 0.0 && sim.snapshot_every > 0.0 && sim.trajectory_spacing > 0.0) {
            return Err(ConfigError::Invalid(
                "simulate: t_end, snapshot_every and trajectory_spacing must be positive".into(),
            ));
        }
        let diag = &self.diagnose;
        if !(diag.t_end > 0.0 && diag.snapshot_every > 0.0) || diag.tol.is_some_and(|t| !(t > 0.0))
        {
            return Err(ConfigError::Invalid(
                "diagnose: t_end, snapshot_every and tol must be positive".into(),
            ));
        }
        let sub = &self.subsolution;
        if !(sub.shooting.c > 0.0 && sub.shooting.q0_frac > 0.0 && sub.shooting.q0_frac < 1.0) {
            return Err(ConfigError::Invalid(
                "subsolution: need c > 0 and q0_frac in (0, 1)".into(),
            ));
        }
        for init in std::iter::once(&sim.initial).chain(diag.pairs.iter().flatten()) {
            match *init {
                Initial::Heaviside { k, window } if !(window.0 < k && k < window.1) => {
                    return Err(ConfigError::Invalid(format!(
                        "heaviside step k = {k} outside its window {window:?}"
                    )));
                }
                Initial::Bump { height, width } if !(height > 0.0 && width > 0.0) => {
                    return Err(ConfigError::Invalid(
                        "bump height and width must be positive".into(),
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the resolved configuration together with the command.
    pub fn hash(&self, command: &str) -> String {
        let body = serde_json::to_string(&(command, self)).expect("config serializes");
        hex(&Sha256::digest(body.as_bytes()))
    }

    pub fn environment_hash(&self) -> String {
        let body = serde_json::to_string(&self.environment).expect("environment serializes");
        hex(&Sha256::digest(body.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dx_forms() {
        assert_eq!(parse_dx("1/256").unwrap(), 1.0 / 256.0);
        assert_eq!(parse_dx("0.125").unwrap(), 0.125);
        assert!(parse_dx("-1").is_err());
        assert_eq!(cells_from_dx(1.0 / 256.0).unwrap(), 256);
        assert!(cells_from_dx(0.3).is_err());
        assert!(cells_from_dx(1.0 / 100.5).is_err());
    }
}

//! Run configuration: a JSON document plus command-line overrides.
//!
//! ```json
//! {
//!   "preset": { "name": "gaussian_quadrupole", "n": 256, "tau": 0.001, "t_final": 0.03 },
//!   "scheme": "etd2",
//!   "output_dir": "out/quadrupole",
//!   "snapshot_times": [0.003, 0.005, 0.01, 0.03],
//!   "diagnostics_every": 1,
//!   "expmv": { "tail_tolerance": 1e-14, "max_step_dimensionless": 500, "renormalize_mass": true },
//!   "compatibility_projection": false
//! }
//! ```
//!
//! Instead of `preset`, an `initial_data` section may point at snapshot CSV
//! files (`p0`, `n0`, optional `rho_f`) together with `epsilon`, `tau`,
//! `t_final` and optionally `length` and `origin`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{PnpError, Result};
use crate::expmv::ExpmvConfig;
use crate::grid::Field;
use crate::harness::output::read_field;
use crate::poisson::{check_compatibility, project_compatibility, DEFAULT_MEAN_TOLERANCE};
use crate::presets::{build_preset, PresetKind, PresetSpec};
use crate::stepper::{Scheme, SimParams};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSection {
    pub name: Option<PresetKind>,
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub rho0: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSection {
    pub p0: PathBuf,
    pub n0: PathBuf,
    pub rho_f: Option<PathBuf>,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_origin")]
    pub origin: (f64, f64),
    pub epsilon: f64,
    pub tau: f64,
    pub t_final: f64,
}

fn default_length() -> f64 {
    1.0
}

fn default_origin() -> (f64, f64) {
    (-0.5, -0.5)
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpmvSection {
    pub tail_tolerance: Option<f64>,
    pub max_step_dimensionless: Option<f64>,
    pub renormalize_mass: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<PresetSection>,
    pub initial_data: Option<InitialDataSection>,
    pub scheme: Option<String>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub diagnostics_every: Option<usize>,
    pub expmv: Option<ExpmvSection>,
    #[serde(default)]
    pub compatibility_projection: bool,
}

impl ConfigFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PnpError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PnpError::Config(e.to_string()))
    }
}

/// Scalar overrides from the command line; `None` leaves the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<PresetKind>,
    pub n: Option<usize>,
    pub scheme: Option<Scheme>,
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub epsilon: Option<f64>,
    pub rho0: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub project_compatibility: bool,
}

#[derive(Debug, Clone)]
pub enum InitialSource {
    Preset(PresetSpec),
    Files(InitialDataSection),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: InitialSource,
    pub scheme: Scheme,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    pub diagnostics_every: usize,
    pub expmv: ExpmvConfig,
    pub compatibility_projection: bool,
}

/// Everything a trajectory needs.
#[derive(Debug, Clone)]
pub struct Materialized {
    pub p0: Field,
    pub n0: Field,
    pub params: SimParams,
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, ov: &Overrides) -> Result<Self> {
        let source = match (file.preset, file.initial_data) {
            (Some(_), Some(_)) => return Err(PnpError::Config("give either preset or initial_data, not both".into())),
            (None, Some(mut data)) => {
                if ov.preset.is_some() || ov.n.is_some() || ov.rho0.is_some() || ov.seed.is_some() {
                    return Err(PnpError::Config("preset overrides given for file-based initial data".into()));
                }
                data.tau = ov.tau.unwrap_or(data.tau);
                data.t_final = ov.t_final.unwrap_or(data.t_final);
                data.epsilon = ov.epsilon.unwrap_or(data.epsilon);
                InitialSource::Files(data)
            }
            (section, None) => {
                let section = section.unwrap_or_default();
                let kind = ov.preset.or(section.name).ok_or_else(|| PnpError::Config("no preset name given".into()))?;
                let n = ov.n.or(section.n).unwrap_or(256);
                crate::grid::GridSpec::centered_unit(n)?;
                let mut spec = PresetSpec::with_resolution(kind, n);
                spec.epsilon = ov.epsilon.or(section.epsilon).unwrap_or(spec.epsilon);
                spec.tau = ov.tau.or(section.tau).unwrap_or(spec.tau);
                spec.t_final = ov.t_final.or(section.t_final).unwrap_or(spec.t_final);
                if kind == PresetKind::Saline {
                    spec.rho0 = ov.rho0.or(section.rho0).or(spec.rho0);
                    spec.seed = ov.seed.or(section.seed).or(spec.seed);
                } else {
                    spec.rho0 = ov.rho0.or(section.rho0);
                    spec.seed = ov.seed.or(section.seed);
                }
                spec.validate()?;
                InitialSource::Preset(spec)
            }
        };
        let scheme = match (ov.scheme, file.scheme) {
            (Some(s), _) => s,
            (None, Some(s)) => s.parse()?,
            (None, None) => Scheme::Etd2,
        };
        let e = file.expmv.unwrap_or_default();
        let defaults = ExpmvConfig::default();
        let expmv = ExpmvConfig {
            tail_tolerance: e.tail_tolerance.unwrap_or(defaults.tail_tolerance),
            max_step_dimensionless: e.max_step_dimensionless.unwrap_or(defaults.max_step_dimensionless),
            renormalize_mass: e.renormalize_mass.unwrap_or(defaults.renormalize_mass),
        };
        expmv.validate()?;
        Ok(Self {
            source,
            scheme,
            output_dir: ov.output_dir.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from("output")),
            snapshot_times: file.snapshot_times,
            diagnostics_every: file.diagnostics_every.unwrap_or(1),
            expmv,
            compatibility_projection: file.compatibility_projection || ov.project_compatibility,
        })
    }

    /// Same scenario on an `n x n` grid; presets only.
    pub fn at_resolution(&self, n: usize) -> Result<Self> {
        let InitialSource::Preset(spec) = &self.source else {
            return Err(PnpError::Config("file-based initial data cannot be regridded".into()));
        };
        let grid = crate::grid::GridSpec::centered_unit(n)?;
        Ok(Self { source: InitialSource::Preset(PresetSpec { grid, ..spec.clone() }), ..self.clone() })
    }

    /// Builds initial data and parameters, checking (or repairing) the
    /// charge balance and the snapshot schedule.
    pub fn materialize(&self) -> Result<Materialized> {
        let (mut p0, mut n0, mut params) = match &self.source {
            InitialSource::Preset(spec) => {
                let preset = build_preset(spec)?;
                (preset.p0, preset.n0, preset.params)
            }
            InitialSource::Files(data) => {
                let p0 = read_field(&data.p0, data.length, data.origin)?;
                let n0 = read_field(&data.n0, data.length, data.origin)?;
                let grid = *p0.spec();
                if n0.spec() != &grid {
                    return Err(PnpError::Config("p0 and n0 have different sizes".into()));
                }
                let rho_f = match &data.rho_f {
                    Some(path) => read_field(path, data.length, data.origin)?,
                    None => Field::zeros(grid),
                };
                if rho_f.spec() != &grid {
                    return Err(PnpError::Config("rho_f has a different size".into()));
                }
                let params = SimParams {
                    grid,
                    epsilon: data.epsilon,
                    tau: data.tau,
                    t_final: data.t_final,
                    scheme: self.scheme,
                    expmv: self.expmv,
                    rho_f,
                    diagnostics_every: self.diagnostics_every,
                };
                (p0, n0, params)
            }
        };
        params.scheme = self.scheme;
        params.expmv = self.expmv;
        params.diagnostics_every = self.diagnostics_every;
        params.validate()?;

        let imbalance = check_compatibility(&p0, &n0, &params.rho_f);
        let rhs_scale = (&(&p0 - &n0) + &params.rho_f).max_abs().max(1.0);
        let tolerance = DEFAULT_MEAN_TOLERANCE * rhs_scale;
        if imbalance.abs() > tolerance {
            if self.compatibility_projection {
                (p0, n0) = project_compatibility(&p0, &n0, &params.rho_f)?;
            } else {
                return Err(PnpError::IncompatibleCharge { mass: imbalance, tolerance });
            }
        }

        params.num_steps()?;
        for &t in &self.snapshot_times {
            if !(t.is_finite() && t >= 0.0 && t <= params.t_final + 0.5 * params.tau) {
                return Err(PnpError::Config(format!("snapshot time {t} outside [0, {}]", params.t_final)));
            }
        }
        Ok(Materialized { p0, n0, params })
    }
}

//! Initial data and parameters for the standard scenarios on `(-0.5, 0.5)^2`.
//!
//! | name                  | p0                    | n0                    | rho_f                                | eps | tau   | T    |
//! |-----------------------|-----------------------|-----------------------|--------------------------------------|-----|-------|------|
//! | `convergence`         | cos^2(pi(x+y))        | cos^2(pi(x-y))        | 0                                    | 1   | T/16  | 0.01 |
//! | `gaussian_quadrupole` | 0.1                   | 0.1                   | 200 sum sx sy exp(-100 r^2) at (+-.25, +-.25) | 1 | 0.001 | 0.03 |
//! | `discontinuous`       | chi([0,.2]^2)         | 2 chi([0,.2]^2)       | 4 chi([.15,.25]^2)                   | 1   | 0.01  | 0.1  |
//! | `saline`              | iid U[0,1]            | iid U[0,1]            | +rho0 at x=.25, -rho0 at x=-.25      | 1   | 0.01  | 0.05 |
//!
//! Saline draws are balanced by a constant shift of `n` (or of `p` when
//! lowering `n` would leave negative values).
//!
//! Indicators use closed boxes: a node belongs to the box iff its
//! coordinates lie inside or on the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PnpError, Result};
use crate::expmv::ExpmvConfig;
use crate::grid::{Field, GridSpec};
use crate::poisson::project_compatibility;
use crate::stepper::{Scheme, SimParams};

pub const DEFAULT_SALINE_SEED: u64 = 20_240_517;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Convergence,
    GaussianQuadrupole,
    Discontinuous,
    Saline,
}

impl PresetKind {
    pub const ALL: [PresetKind; 4] =
        [PresetKind::Convergence, PresetKind::GaussianQuadrupole, PresetKind::Discontinuous, PresetKind::Saline];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Convergence => "convergence",
            PresetKind::GaussianQuadrupole => "gaussian_quadrupole",
            PresetKind::Discontinuous => "discontinuous",
            PresetKind::Saline => "saline",
        }
    }
}

impl std::str::FromStr for PresetKind {
    type Err = PnpError;
    fn from_str(s: &str) -> Result<Self> {
        PresetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PnpError::Config(format!("unknown preset '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetSpec {
    pub kind: PresetKind,
    pub grid: GridSpec,
    pub epsilon: f64,
    pub tau: f64,
    pub t_final: f64,
    /// Line charge density; saline only.
    pub rho0: Option<f64>,
    /// RNG seed; saline only.
    pub seed: Option<u64>,
}

impl PresetSpec {
    /// Standard parameters of the scenario, on a 256 x 256 grid.
    pub fn standard(kind: PresetKind) -> Self {
        Self::with_resolution(kind, 256)
    }

    pub fn with_resolution(kind: PresetKind, n: usize) -> Self {
        let grid = GridSpec::centered_unit(n).expect("n >= 2");
        let (epsilon, tau, t_final) = match kind {
            PresetKind::Convergence => (1.0, 0.01 / 16.0, 0.01),
            PresetKind::GaussianQuadrupole => (1.0, 0.001, 0.03),
            PresetKind::Discontinuous => (1.0, 0.01, 0.1),
            PresetKind::Saline => (1.0, 0.01, 0.05),
        };
        let (rho0, seed) = match kind {
            PresetKind::Saline => (Some(1.0), Some(DEFAULT_SALINE_SEED)),
            _ => (None, None),
        };
        Self { kind, grid, epsilon, tau, t_final, rho0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let saline = self.kind == PresetKind::Saline;
        if saline != self.rho0.is_some() {
            return Err(PnpError::Config(format!(
                "rho0 is {} for preset {}",
                if saline { "required" } else { "not accepted" },
                self.kind.name()
            )));
        }
        if saline != self.seed.is_some() {
            return Err(PnpError::Config(format!(
                "seed is {} for preset {}",
                if saline { "required" } else { "not accepted" },
                self.kind.name()
            )));
        }
        if let Some(rho0) = self.rho0 {
            if !(rho0.is_finite() && rho0 >= 0.0) {
                return Err(PnpError::Config(format!("rho0 must be nonnegative, got {rho0}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub p0: Field,
    pub n0: Field,
    pub rho_f: Field,
    pub params: SimParams,
}

fn in_closed_box(x: f64, y: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x) && (lo..=hi).contains(&y)
}

/// Signed offset `x - c` reduced to the periodic image nearest zero.
fn periodic_offset(x: f64, c: f64, length: f64) -> f64 {
    let d = x - c;
    d - length * (d / length).round()
}

/// Grid column nearest to `x`, wrapped into range.
fn nearest_column(grid: &GridSpec, x: f64) -> usize {
    let k = ((x - grid.origin().0) / grid.mesh_size()).round() as isize;
    k.rem_euclid(grid.n() as isize) as usize
}

pub fn build_preset(spec: &PresetSpec) -> Result<Preset> {
    spec.validate()?;
    let grid = spec.grid;
    let (p0, n0, rho_f) = match spec.kind {
        PresetKind::Convergence => {
            use std::f64::consts::PI;
            let p0 = Field::from_fn(grid, |x, y| (PI * (x + y)).cos().powi(2))?;
            let n0 = Field::from_fn(grid, |x, y| (PI * (x - y)).cos().powi(2))?;
            (p0, n0, Field::zeros(grid))
        }
        PresetKind::GaussianQuadrupole => {
            let (cx, cy) = (0.25, 0.25);
            let len = grid.length();
            // Each bump is evaluated at its nearest periodic image.
            let rho = Field::from_fn(grid, |x, y| {
                let mut sum = 0.0;
                for sx in [1.0, -1.0] {
                    for sy in [1.0, -1.0] {
                        let dx = periodic_offset(x, -sx * cx, len);
                        let dy = periodic_offset(y, -sy * cy, len);
                        sum += sx * sy * (-100.0 * (dx * dx + dy * dy)).exp();
                    }
                }
                200.0 * sum
            })?;
            (Field::constant(grid, 0.1), Field::constant(grid, 0.1), rho)
        }
        PresetKind::Discontinuous => {
            let chi = |lo: f64, hi: f64, scale: f64| {
                Field::from_fn(grid, move |x, y| if in_closed_box(x, y, lo, hi) { scale } else { 0.0 })
            };
            (chi(0.0, 0.2, 1.0)?, chi(0.0, 0.2, 2.0)?, chi(0.15, 0.25, 4.0)?)
        }
        PresetKind::Saline => {
            let rho0 = spec.rho0.expect("validated");
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.expect("validated"));
            let len = grid.num_nodes();
            let p: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let n: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let plus = nearest_column(&grid, 0.25);
            let minus = nearest_column(&grid, -0.25);
            let mut rho = vec![0.0; len];
            for j in 0..grid.n() {
                rho[grid.index(plus, j)] += rho0;
                rho[grid.index(minus, j)] -= rho0;
            }
            let rho_f = Field::from_values(grid, rho)?;
            let (p0, n0) = project_compatibility(&Field::from_values(grid, p)?, &Field::from_values(grid, n)?, &rho_f)?;
            (p0, n0, rho_f)
        }
    };
    let params = SimParams {
        grid,
        epsilon: spec.epsilon,
        tau: spec.tau,
        t_final: spec.t_final,
        scheme: Scheme::Etd2,
        expmv: ExpmvConfig::default(),
        rho_f: rho_f.clone(),
        diagnostics_every: 1,
    };
    params.validate()?;
    Ok(Preset { p0, n0, rho_f, params })
}

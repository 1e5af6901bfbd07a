//! Periodic Poisson problem `-eps^2 Lap_h phi = rhs` with `<phi, 1>_h = 0`.
//!
//! The five-point Laplacian is diagonalized exactly by the 2-D discrete
//! Fourier transform, with eigenvalues
//! `-(4/h^2) (sin^2(pi k/N) + sin^2(pi l/N))`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{PnpError, Result};
use crate::grid::{Field, GridSpec};

pub const DEFAULT_MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Clone)]
pub struct PoissonSolver {
    spec: GridSpec,
    epsilon: f64,
    mean_tolerance: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `1 / (eps^2 * |lambda_{k,l}|)`, zero at the constant mode.
    inverse_symbol: Vec<f64>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("spec", &self.spec)
            .field("epsilon", &self.epsilon)
            .field("mean_tolerance", &self.mean_tolerance)
            .finish()
    }
}

impl PoissonSolver {
    pub fn new(spec: GridSpec, epsilon: f64) -> Result<Self> {
        Self::with_tolerance(spec, epsilon, DEFAULT_MEAN_TOLERANCE)
    }

    pub fn with_tolerance(spec: GridSpec, epsilon: f64, mean_tolerance: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(PnpError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(mean_tolerance >= 0.0) {
            return Err(PnpError::InvalidParameter("mean tolerance must be nonnegative".into()));
        }
        let n = spec.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let h = spec.mesh_size();
        let s2: Vec<f64> = (0..n).map(|k| (PI * k as f64 / n as f64).sin().powi(2)).collect();
        let mut inverse_symbol = vec![0.0; n * n];
        for l in 0..n {
            for k in 0..n {
                if k == 0 && l == 0 {
                    continue;
                }
                let lambda = 4.0 / (h * h) * (s2[k] + s2[l]);
                inverse_symbol[l * n + k] = 1.0 / (epsilon * epsilon * lambda);
            }
        }
        Ok(Self { spec, epsilon, mean_tolerance, forward, inverse, inverse_symbol })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mean_tolerance(&self) -> f64 {
        self.mean_tolerance
    }

    /// Mean-zero solution of `-eps^2 Lap_h phi = rhs`. The right-hand side
    /// must have (numerically) zero mass; its residual mean is discarded.
    pub fn solve(&self, rhs: &Field) -> Result<Field> {
        assert_eq!(&self.spec, rhs.spec(), "solver and right-hand side live on different grids");
        let m = rhs.mass();
        let tolerance = self.mean_tolerance * rhs.max_abs().max(1.0);
        if m.abs() > tolerance {
            return Err(PnpError::IncompatibleCharge { mass: m, tolerance });
        }

        let n = self.spec.n();
        let mut data: Vec<Complex<f64>> = rhs.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform_2d(&mut data, &*self.forward);
        for (c, s) in data.iter_mut().zip(&self.inverse_symbol) {
            *c *= *s;
        }
        self.transform_2d(&mut data, &*self.inverse);
        let scale = 1.0 / (n * n) as f64;
        let mut values: Vec<f64> = data.iter().map(|c| c.re * scale).collect();
        // Remove rounding-level drift of the constant mode.
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        Field::from_values(self.spec, values)
    }

    fn transform_2d(&self, data: &mut [Complex<f64>], fft: &dyn Fft<f64>) {
        let n = self.spec.n();
        // Rows are contiguous.
        fft.process(data);
        let mut column = vec![Complex::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                column[j] = data[j * n + i];
            }
            fft.process(&mut column);
            for j in 0..n {
                data[j * n + i] = column[j];
            }
        }
    }
}

/// `mass(p) - mass(n) + mass(rho_f)`; zero for solvable charge data.
pub fn check_compatibility(p: &Field, n: &Field, rho_f: &Field) -> f64 {
    p.mass() - n.mass() + rho_f.mass()
}

/// Restores a mean-zero net charge by a constant shift: `n` is lowered or
/// raised by the imbalance, unless lowering it would create negative
/// values, in which case `p` is raised instead. Returns the shifted pair.
pub fn project_compatibility(p: &Field, n: &Field, rho_f: &Field) -> Result<(Field, Field)> {
    let shift = check_compatibility(p, n, rho_f) / n.spec().area();
    if shift >= -n.min() {
        Ok((p.clone(), n.map(|v| v + shift)?))
    } else {
        Ok((p.map(|v| v - shift)?, n.clone()))
    }
}

//! Temporal and spatial convergence studies against a fine reference run.
//!
//! Errors are sup-norms over nodes at `t = T`; potentials are re-gauged to
//! mean zero on the comparison grid before differencing. Successive rows
//! report `rate = log2(e_coarse / e_fine) / log2(r_coarse / r_fine)` where
//! `r` is `tau` or `h`; for halving ladders the denominator is exactly one.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{PnpError, Result};
use crate::grid::Field;
use crate::harness::config::{Materialized, RunConfig};
use crate::harness::output::fmt_real;
use crate::stepper::{NoObserver, Scheme, Simulation, StepState};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// `tau` for temporal studies, `h` for spatial ones.
    pub resolution: f64,
    pub error_p: f64,
    pub error_n: f64,
    pub error_phi: f64,
    pub rate_p: Option<f64>,
    pub rate_n: Option<f64>,
    pub rate_phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Name of the resolution column, `tau` or `h`.
    pub resolution_label: &'static str,
    pub rows: Vec<ConvergenceRow>,
}

fn rate(e_coarse: f64, e_fine: f64, r_coarse: f64, r_fine: f64) -> f64 {
    (e_coarse / e_fine).log2() / (r_coarse / r_fine).log2()
}

impl ConvergenceReport {
    /// Rows ordered coarse to fine, rates filled in from the error columns.
    fn assemble(resolution_label: &'static str, errors: Vec<(f64, [f64; 3])>) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(errors.len());
        for (k, &(res, e)) in errors.iter().enumerate() {
            let rates = if k == 0 {
                [None; 3]
            } else {
                let (prev_res, prev) = errors[k - 1];
                [0, 1, 2].map(|c| Some(rate(prev[c], e[c], prev_res, res)))
            };
            rows.push(ConvergenceRow {
                resolution: res,
                error_p: e[0],
                error_n: e[1],
                error_phi: e[2],
                rate_p: rates[0],
                rate_n: rates[1],
                rate_phi: rates[2],
            });
        }
        Self { resolution_label, rows }
    }

    pub fn header(&self) -> String {
        format!("{},error_p,rate_p,error_n,rate_n,error_phi,rate_phi", self.resolution_label)
    }

    pub fn to_csv(&self) -> String {
        let opt = |r: Option<f64>| r.map(fmt_real).unwrap_or_default();
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_real(r.resolution),
                fmt_real(r.error_p),
                opt(r.rate_p),
                fmt_real(r.error_n),
                opt(r.rate_n),
                fmt_real(r.error_phi),
                opt(r.rate_phi),
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Least-squares slope of `log e` against `log r` for one field
    /// (0 = p, 1 = n, 2 = phi).
    pub fn fitted_order(&self, field: usize) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| {
                let e = [r.error_p, r.error_n, r.error_phi][field];
                (r.resolution.ln(), e.ln())
            })
            .collect();
        least_squares_slope(&pts)
    }
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) =
        points.iter().fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - mx) * (y - my), d + (x - mx) * (x - mx)));
    num / den
}

fn final_state(m: &Materialized) -> Result<StepState> {
    let sim = Simulation::new(m.params.clone())?;
    sim.run(m.p0.clone(), m.n0.clone(), &[], &mut NoObserver)
}

fn sup_errors(coarse: &StepState, reference: &StepState) -> Result<[f64; 3]> {
    let grid = *coarse.p_curr.spec();
    let restrict = |f: &Field| f.restrict_to(&grid);
    let ep = (&coarse.p_curr - &restrict(&reference.p_curr)?).max_abs();
    let en = (&coarse.n_curr - &restrict(&reference.n_curr)?).max_abs();
    let ephi = (&coarse.phi_curr.mean_free() - &restrict(&reference.phi_curr)?.mean_free()).max_abs();
    Ok([ep, en, ephi])
}

/// Temporal study on a fixed grid: runs `scheme` at `tau = T / d` for each
/// divisor `d` and compares with ETD2 at `tau = T / reference_divisor`.
pub fn converge_time(
    base: &Materialized,
    scheme: Scheme,
    divisors: &[usize],
    reference_divisor: usize,
) -> Result<ConvergenceReport> {
    if divisors.is_empty() {
        return Err(PnpError::Config("empty time-step ladder".into()));
    }
    let t_final = base.params.t_final;
    if !(t_final > 0.0) {
        return Err(PnpError::Config("convergence study needs t_final > 0".into()));
    }
    if divisors.contains(&0) || reference_divisor == 0 {
        return Err(PnpError::Config("time-step divisors must be positive".into()));
    }
    if scheme == Scheme::Etd2 && divisors.contains(&reference_divisor) {
        return Err(PnpError::Config(format!("ladder contains the reference step T/{reference_divisor}")));
    }
    let mut sorted = divisors.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let configure = |d: usize, scheme: Scheme| {
        let mut m = base.clone();
        m.params.tau = t_final / d as f64;
        m.params.scheme = scheme;
        m.params.validate().map(|_| m)
    };
    let mut jobs = vec![configure(reference_divisor, Scheme::Etd2)?];
    for &d in &sorted {
        jobs.push(configure(d, scheme)?);
    }
    let states: Vec<StepState> = jobs.par_iter().map(final_state).collect::<Result<_>>()?;
    let (reference, runs) = states.split_first().expect("nonempty");
    let errors = sorted
        .iter()
        .zip(runs)
        .map(|(&d, s)| Ok((t_final / d as f64, sup_errors(s, reference)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::assemble("tau", errors))
}

/// Spatial study: one ETD1 step of length `T` on each `n x n` grid,
/// compared at the coarse nodes with the same step on the reference grid.
pub fn converge_space(base: &RunConfig, resolutions: &[usize], reference_n: usize) -> Result<ConvergenceReport> {
    if resolutions.is_empty() {
        return Err(PnpError::Config("empty mesh ladder".into()));
    }
    // Ascending n, so rows run from coarse to fine.
    let mut sorted = resolutions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.contains(&reference_n) {
        return Err(PnpError::Config(format!("ladder contains the reference grid n = {reference_n}")));
    }
    for &n in &sorted {
        if n == 0 || reference_n % n != 0 || !(reference_n / n).is_power_of_two() {
            return Err(PnpError::Config(format!("grid n = {n} is not nested in the reference n = {reference_n}")));
        }
    }
    let configure = |n: usize| -> Result<Materialized> {
        let mut m = base.at_resolution(n)?.materialize()?;
        m.params.tau = m.params.t_final;
        m.params.scheme = Scheme::Etd1;
        m.params.validate()?;
        Ok(m)
    };
    let mut jobs = vec![configure(reference_n)?];
    for &n in &sorted {
        jobs.push(configure(n)?);
    }
    let states: Vec<StepState> = jobs.par_iter().map(final_state).collect::<Result<_>>()?;
    let (reference, runs) = states.split_first().expect("nonempty");
    let errors = sorted
        .iter()
        .zip(runs)
        .map(|(_, s)| Ok((s.p_curr.spec().mesh_size(), sup_errors(s, reference)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::assemble("h", errors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_are_log2_of_error_ratios() {
        let report = ConvergenceReport::assemble(
            "tau",
            vec![(0.1, [8.0, 4.0, 1.0]), (0.05, [2.0, 2.0, 0.5]), (0.025, [0.5, 1.0, 0.125])],
        );
        assert_eq!(report.rows[0].rate_p, None);
        assert_eq!(report.rows[1].rate_p, Some(2.0));
        assert_eq!(report.rows[1].rate_n, Some(1.0));
        assert_eq!(report.rows[2].rate_phi, Some(2.0));
        assert!((report.fitted_order(0) - 2.0).abs() < 1e-12);
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "tau,error_p,rate_p,error_n,rate_n,error_phi,rate_phi");
        assert!(lines.next().unwrap().ends_with(",,1.0000000000000000e0,"));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn slope_of_a_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 1.5 * k as f64 - 3.0)).collect();
        assert!((least_squares_slope(&pts) - 1.5).abs() < 1e-14);
    }
}

//! Discrete free energy, the two-level modified energy and per-step records.

use crate::error::{PnpError, Result};
use crate::grid::{h1_inner, Field};
use crate::stepper::{Scheme, SimParams, StepState};

/// `<u ln u, 1>_h` with `0 ln 0 = 0`.
pub fn entropy(u: &Field, what: &'static str) -> Result<f64> {
    let h = u.spec().mesh_size();
    let mut sum = 0.0;
    for (index, &v) in u.values().iter().enumerate() {
        if v < 0.0 {
            return Err(PnpError::NegativeConcentration { what, index, value: v });
        }
        if v > 0.0 {
            sum += v * v.ln();
        }
    }
    Ok(h * h * sum)
}

/// `E = <p ln p, 1> + <n ln n, 1> + (eps^2/2) |grad phi|^2`.
pub fn energy(p: &Field, n: &Field, phi: &Field, epsilon: f64) -> Result<f64> {
    Ok(entropy(p, "p")? + entropy(n, "n")? + 0.5 * epsilon * epsilon * h1_inner(phi, phi))
}

/// Two-level energy dissipated by the second-order scheme: the average of
/// the entropies at both levels plus the cross term
/// `(eps^2/2) <grad phi_curr, grad phi_prev>`.
pub fn modified_energy(
    p_curr: &Field,
    n_curr: &Field,
    p_prev: &Field,
    n_prev: &Field,
    phi_curr: &Field,
    phi_prev: &Field,
    epsilon: f64,
) -> Result<f64> {
    let entropies =
        entropy(p_curr, "p")? + entropy(n_curr, "n")? + entropy(p_prev, "p_prev")? + entropy(n_prev, "n_prev")?;
    Ok(0.5 * entropies + 0.5 * epsilon * epsilon * h1_inner(phi_curr, phi_prev))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagRecord {
    pub time: f64,
    pub step: usize,
    pub min_p: f64,
    pub min_n: f64,
    pub mass_p_drift: f64,
    pub mass_n_drift: f64,
    pub energy: f64,
    /// Only for second-order runs once a previous level exists.
    pub modified_energy: Option<f64>,
    /// `E^k - E^{k-1} - (eps^2/2) |grad(phi^k - phi^{k-1})|^2`, nonpositive
    /// for first-order steps. Present whenever a previous level exists.
    pub energy_residual: Option<f64>,
}

/// Fills a [`DiagRecord`] from the current state.
pub fn record(state: &StepState, initial_masses: (f64, f64), params: &SimParams) -> Result<DiagRecord> {
    let eps = params.epsilon;
    let e_curr = energy(&state.p_curr, &state.n_curr, &state.phi_curr, eps)?;
    let mut modified = None;
    let mut residual = None;
    if let Some(prev) = state.previous() {
        if params.scheme == Scheme::Etd2 {
            modified =
                Some(modified_energy(&state.p_curr, &state.n_curr, &prev.p, &prev.n, &state.phi_curr, &prev.phi, eps)?);
        }
        let e_prev = energy(&prev.p, &prev.n, &prev.phi, eps)?;
        let dphi = &state.phi_curr - &prev.phi;
        residual = Some(e_curr - e_prev - 0.5 * eps * eps * h1_inner(&dphi, &dphi));
    }
    Ok(DiagRecord {
        time: state.step_index as f64 * params.tau,
        step: state.step_index,
        min_p: state.p_curr.min(),
        min_n: state.n_curr.min(),
        mass_p_drift: state.p_curr.mass() - initial_masses.0,
        mass_n_drift: state.n_curr.mass() - initial_masses.1,
        energy: e_curr,
        modified_energy: modified,
        energy_residual: residual,
    })
}

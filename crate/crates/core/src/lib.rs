//! Structure-preserving exponential time differencing for the periodic
//! Poisson–Nernst–Planck system in two dimensions.
//!
//! The drift-diffusion equations are written in Slotboom form,
//! `p_t = L[-phi] p`, `n_t = L[phi] n` with `L[psi] u = div(e^psi grad(u e^-psi))`,
//! and discretized by a five-point finite-difference stencil whose matrix
//! is a generator (nonnegative off-diagonals, zero column sums). Time
//! stepping freezes the potential over a step and applies the exact
//! exponential of that generator, computed by uniformization so that
//! positivity and mass conservation survive in floating point.

pub mod diagnostics;
pub mod error;
pub mod expmv;
pub mod grid;
pub mod harness;
pub mod operator;
pub mod poisson;
pub mod presets;
pub mod stepper;

pub use error::{PnpError, Result};
pub use grid::{Field, GridSpec};

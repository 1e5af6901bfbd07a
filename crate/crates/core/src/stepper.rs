//! First- and second-order exponential time differencing for the coupled
//! system. Within a step the potential is frozen at `phi^k`, so each
//! species evolves under a fixed linear generator whose exponential is
//! applied exactly (up to the uniformization tail):
//!
//! ```text
//! ETD1: p^{k+1} = exp( tau L[-phi^k]) p^k,     n^{k+1} = exp( tau L[phi^k]) n^k
//! ETD2: p^{k+1} = exp(2tau L[-phi^k]) p^{k-1}, n^{k+1} = exp(2tau L[phi^k]) n^{k-1}
//! ```
//!
//! followed by a fresh Poisson solve for `phi^{k+1}`. ETD2 is a three-level
//! scheme and takes one ETD1 step to produce its second level.

use crate::diagnostics::{record, DiagRecord};
use crate::error::{PnpError, Result};
use crate::expmv::{expmv, ExpmvConfig};
use crate::grid::{Field, GridSpec};
use crate::operator::{SlotboomOperator, Species};
use crate::poisson::PoissonSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Etd1,
    Etd2,
}

impl std::str::FromStr for Scheme {
    type Err = PnpError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "etd1" => Ok(Scheme::Etd1),
            "etd2" => Ok(Scheme::Etd2),
            other => Err(PnpError::Config(format!("unknown scheme '{other}' (expected etd1 or etd2)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Etd1 => "etd1",
            Scheme::Etd2 => "etd2",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimParams {
    pub grid: GridSpec,
    pub epsilon: f64,
    pub tau: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub expmv: ExpmvConfig,
    /// Fixed background charge.
    pub rho_f: Field,
    pub diagnostics_every: usize,
}

impl SimParams {
    /// Number of steps `K_t = T / tau`; fails unless the ratio is integral.
    pub fn num_steps(&self) -> Result<usize> {
        let ratio = self.t_final / self.tau;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(PnpError::InvalidParameter(format!(
                "t_final {} is not an integer multiple of tau {}",
                self.t_final, self.tau
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(PnpError::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(PnpError::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(PnpError::InvalidParameter(format!("t_final must be nonnegative, got {}", self.t_final)));
        }
        if self.t_final > 0.0 && self.tau > self.t_final * (1.0 + 1e-12) {
            return Err(PnpError::InvalidParameter("tau exceeds t_final".into()));
        }
        if self.diagnostics_every == 0 {
            return Err(PnpError::InvalidParameter("diagnostics_every must be at least 1".into()));
        }
        if self.rho_f.spec() != &self.grid {
            return Err(PnpError::InvalidGrid("fixed charge lives on a different grid".into()));
        }
        self.expmv.validate()?;
        self.num_steps().map(|_| ())
    }
}

/// One stored time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub p: Field,
    pub n: Field,
    pub phi: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub step_index: usize,
    pub p_curr: Field,
    pub n_curr: Field,
    /// Mean-zero potential of the current densities.
    pub phi_curr: Field,
    /// Level `k - 1`; absent at `k = 0`.
    pub prev: Option<Level>,
}

impl StepState {
    pub fn previous(&self) -> Option<&Level> {
        self.prev.as_ref()
    }

    fn advance(self, p: Field, n: Field, phi: Field) -> Self {
        StepState {
            step_index: self.step_index + 1,
            prev: Some(Level { p: self.p_curr, n: self.n_curr, phi: self.phi_curr }),
            p_curr: p,
            n_curr: n,
            phi_curr: phi,
        }
    }
}

/// Receives diagnostics and snapshots from [`Simulation::run`].
pub trait RunObserver {
    fn on_record(&mut self, _record: &DiagRecord) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, _requested_time: f64, _state: &StepState) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NoObserver;

impl RunObserver for NoObserver {}

/// Keeps every record in memory.
#[derive(Debug, Default)]
pub struct RecordCollector {
    pub records: Vec<DiagRecord>,
}

impl RunObserver for RecordCollector {
    fn on_record(&mut self, record: &DiagRecord) -> Result<()> {
        self.records.push(record.clone());
        Ok(())
    }
}

fn check_nonnegative(f: &Field, what: &'static str) -> Result<()> {
    match f.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        Some((index, &value)) => Err(PnpError::NegativeConcentration { what, index, value }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    params: SimParams,
    poisson: PoissonSolver,
}

impl Simulation {
    pub fn new(params: SimParams) -> Result<Self> {
        params.validate()?;
        let poisson = PoissonSolver::new(params.grid, params.epsilon)?;
        Ok(Self { params, poisson })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn poisson(&self) -> &PoissonSolver {
        &self.poisson
    }

    pub fn potential(&self, p: &Field, n: &Field) -> Result<Field> {
        let rhs = &(p - n) + &self.params.rho_f;
        self.poisson.solve(&rhs)
    }

    pub fn initial_state(&self, p0: Field, n0: Field) -> Result<StepState> {
        check_nonnegative(&p0, "p0")?;
        check_nonnegative(&n0, "n0")?;
        let phi = self.potential(&p0, &n0)?;
        Ok(StepState { step_index: 0, p_curr: p0, n_curr: n0, phi_curr: phi, prev: None })
    }

    /// Both species advanced by their frozen-potential exponentials over `t`.
    fn exponentiate(&self, phi: &Field, p: &Field, n: &Field, t: f64) -> Result<(Field, Field)> {
        let cfg = &self.params.expmv;
        let (p_next, n_next) = rayon::join(
            || {
                let op = SlotboomOperator::build(phi, Species::Cation)?;
                expmv(&op, p, t, cfg)
            },
            || {
                let op = SlotboomOperator::build(phi, Species::Anion)?;
                expmv(&op, n, t, cfg)
            },
        );
        Ok((p_next?, n_next?))
    }

    pub fn etd1_step(&self, state: StepState) -> Result<StepState> {
        let (p, n) = self.exponentiate(&state.phi_curr, &state.p_curr, &state.n_curr, self.params.tau)?;
        let phi = self.potential(&p, &n)?;
        Ok(state.advance(p, n, phi))
    }

    pub fn etd2_step(&self, state: StepState) -> Result<StepState> {
        let prev = state.prev.as_ref().ok_or(PnpError::MissingHistory)?;
        let (p, n) = self.exponentiate(&state.phi_curr, &prev.p, &prev.n, 2.0 * self.params.tau)?;
        let phi = self.potential(&p, &n)?;
        Ok(state.advance(p, n, phi))
    }

    /// One step of the configured scheme; ETD2 falls back to ETD1 when no
    /// previous level exists yet.
    pub fn step(&self, state: StepState) -> Result<StepState> {
        match (self.params.scheme, state.prev.is_some()) {
            (Scheme::Etd2, true) => self.etd2_step(state),
            _ => self.etd1_step(state),
        }
    }

    /// Step indices for the requested snapshot times (nearest step).
    pub fn snapshot_steps(&self, times: &[f64]) -> Result<Vec<usize>> {
        let steps = self.params.num_steps()?;
        times
            .iter()
            .map(|&t| {
                let k = (t / self.params.tau).round();
                if !(t.is_finite() && t >= -0.5 * self.params.tau && k <= steps as f64) {
                    return Err(PnpError::InvalidParameter(format!(
                        "snapshot time {t} outside [0, {}]",
                        self.params.t_final
                    )));
                }
                Ok(k.max(0.0) as usize)
            })
            .collect()
    }

    /// Advances `K_t` steps from `(p0, n0)`, reporting to `observer`.
    pub fn run(
        &self,
        p0: Field,
        n0: Field,
        snapshot_times: &[f64],
        observer: &mut dyn RunObserver,
    ) -> Result<StepState> {
        let steps = self.params.num_steps()?;
        let snapshot_steps = self.snapshot_steps(snapshot_times)?;
        let wrap = |step: usize| move |e: PnpError| PnpError::Step { step, source: Box::new(e) };

        let mut state = self.initial_state(p0, n0).map_err(wrap(0))?;
        let masses = (state.p_curr.mass(), state.n_curr.mass());
        let emit = |state: &StepState, observer: &mut dyn RunObserver| -> Result<()> {
            let k = state.step_index;
            if k % self.params.diagnostics_every == 0 || k == steps {
                observer.on_record(&record(state, masses, &self.params)?)?;
            }
            for (&t, _) in snapshot_times.iter().zip(&snapshot_steps).filter(|(_, &s)| s == k) {
                observer.on_snapshot(t, state)?;
            }
            Ok(())
        };
        emit(&state, observer).map_err(wrap(0))?;
        for k in 0..steps {
            state = self.step(state).map_err(wrap(k + 1))?;
            check_nonnegative(&state.p_curr, "p").map_err(wrap(k + 1))?;
            check_nonnegative(&state.n_curr, "n").map_err(wrap(k + 1))?;
            emit(&state, observer).map_err(wrap(k + 1))?;
        }
        Ok(state)
    }
}

//! Action of the matrix exponential `e^{tL} v` by uniformization.
//!
//! For a generator `L` with nonnegative off-diagonals and zero column sums,
//! `P = I + L/alpha` with `alpha = max |L_ll|` is column-stochastic and
//!
//! ```text
//! e^{tL} v = sum_k  e^{-t alpha} (t alpha)^k / k!  P^k v.
//! ```
//!
//! Every partial sum is a nonnegative combination of nonnegative vectors,
//! so the truncated series keeps `v >= 0` exactly and loses mass only
//! through the dropped Poisson tail. Rescaling by the mass ratio afterwards
//! restores conservation to rounding.

use crate::error::{PnpError, Result};
use crate::grid::Field;
use crate::operator::SlotboomOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpmvConfig {
    /// Bound on the dropped Poisson tail per substep.
    pub tail_tolerance: f64,
    /// Largest `t * alpha` handled in one uniformization pass. Keeps
    /// `e^{-t alpha}` well above the underflow threshold.
    pub max_step_dimensionless: f64,
    pub renormalize_mass: bool,
}

impl Default for ExpmvConfig {
    fn default() -> Self {
        Self { tail_tolerance: 1e-14, max_step_dimensionless: 500.0, renormalize_mass: true }
    }
}

impl ExpmvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return Err(PnpError::InvalidParameter(format!(
                "tail_tolerance must lie in (0, 1), got {}",
                self.tail_tolerance
            )));
        }
        // e^{-700} is still a normal double.
        if !(self.max_step_dimensionless > 0.0 && self.max_step_dimensionless <= 700.0) {
            return Err(PnpError::InvalidParameter(format!(
                "max_step_dimensionless must lie in (0, 700], got {}",
                self.max_step_dimensionless
            )));
        }
        Ok(())
    }
}

/// Poisson probabilities `P(X = k)`, `X ~ Poisson(rate)`, for `k = 0..=K`
/// where `K` is the smallest order whose tail is at most `tol`.
fn poisson_weights(rate: f64, tol: f64) -> Vec<f64> {
    if rate == 0.0 {
        return vec![1.0];
    }
    // Far enough right that the remaining tail is negligible next to `tol`.
    let k_max = (rate + 12.0 * (rate + 1.0).sqrt() * (1.0 - tol.ln()).sqrt() + 40.0).ceil() as usize;
    let ln_rate = rate.ln();
    let mut log_w = -rate;
    let mut pmf = Vec::with_capacity(k_max + 1);
    pmf.push(log_w.exp());
    for k in 1..=k_max {
        log_w += ln_rate - (k as f64).ln();
        pmf.push(log_w.exp());
    }
    // Tail sums accumulated from the right, smallest terms first.
    let mut tail = 0.0;
    let mut order = k_max;
    for k in (0..=k_max).rev() {
        // `tail` is the sum over indices > k.
        if tail > tol {
            break;
        }
        order = k;
        tail += pmf[k];
    }
    pmf.truncate(order + 1);
    pmf
}

/// Smallest `K` such that the Poisson(`t_alpha`) tail beyond `K` is at most
/// `tail_tolerance`.
pub fn poisson_truncation_order(t_alpha: f64, tail_tolerance: f64) -> usize {
    assert!(t_alpha >= 0.0 && t_alpha.is_finite(), "t_alpha must be finite and nonnegative");
    poisson_weights(t_alpha, tail_tolerance).len() - 1
}

/// Sweeps per cache-resident band in the blocked propagation.
const BLOCK_DEPTH: usize = 8;
/// Output rows per band.
const BLOCK_ROWS: usize = 16;
/// Below this many nodes the whole working set stays in cache and plain
/// sweeps are used.
const BLOCK_MIN_NODES: usize = 128 * 128;

/// `P = I + L/alpha` in stencil form.
struct TransitionStencil {
    n: usize,
    diag: Vec<f64>,
    east: Vec<f64>,
    west: Vec<f64>,
    north: Vec<f64>,
    south: Vec<f64>,
}

impl TransitionStencil {
    fn new(op: &SlotboomOperator, alpha: f64) -> Self {
        let inv = 1.0 / alpha;
        let scale = |f: &Field| f.values().iter().map(|w| w * inv).collect::<Vec<_>>();
        Self {
            n: op.spec().n(),
            // Clamp guards the node attaining alpha against a -0 or -ulp.
            diag: op.diag().values().iter().map(|d| (1.0 + d * inv).max(0.0)).collect(),
            east: scale(op.east()),
            west: scale(op.west()),
            north: scale(op.north()),
            south: scale(op.south()),
        }
    }

    /// Row `j` of `P cur`, given rows `j`, `j+1` and `j-1` of `cur`.
    #[inline]
    fn row(&self, j: usize, c: &[f64], up: &[f64], down: &[f64], out: &mut [f64]) {
        let n = self.n;
        let r = j * n..(j + 1) * n;
        let d = &self.diag[r.clone()];
        let e = &self.east[r.clone()];
        let w = &self.west[r.clone()];
        let no = &self.north[r.clone()];
        let so = &self.south[r];
        let edge = |i: usize, ie: usize, iw: usize| {
            d[i] * c[i] + e[i] * c[ie] + w[i] * c[iw] + no[i] * up[i] + so[i] * down[i]
        };
        out[0] = edge(0, 1, n - 1);
        out[n - 1] = edge(n - 1, 0, n - 2);
        // Equal-length slices let the interior loops run without bounds checks.
        let m = n - 2;
        let (cw, cc, ce) = (&c[..m], &c[1..m + 1], &c[2..m + 2]);
        let (dd, ee, ww) = (&d[1..m + 1], &e[1..m + 1], &w[1..m + 1]);
        let (nn, ss, uu, dn) = (&no[1..m + 1], &so[1..m + 1], &up[1..m + 1], &down[1..m + 1]);
        let oo = &mut out[1..m + 1];
        for i in 0..m {
            oo[i] = dd[i] * cc[i] + ee[i] * ce[i] + ww[i] * cw[i] + nn[i] * uu[i] + ss[i] * dn[i];
        }
    }

    /// `next = P cur` and `acc += weight * next`, one sweep.
    fn step_accumulate(&self, cur: &[f64], next: &mut [f64], acc: &mut [f64], weight: f64) {
        let n = self.n;
        for j in 0..n {
            let jn = if j + 1 == n { 0 } else { j + 1 };
            let js = if j == 0 { n - 1 } else { j - 1 };
            let rows = j * n..(j + 1) * n;
            self.row(
                j,
                &cur[rows.clone()],
                &cur[jn * n..(jn + 1) * n],
                &cur[js * n..(js + 1) * n],
                &mut next[rows.clone()],
            );
            axpy(&mut acc[rows.clone()], weight, &next[rows]);
        }
    }

    /// `weights.len()` consecutive sweeps applied band by band: each band of
    /// rows is loaded with a halo as deep as the number of sweeps, advanced
    /// in local buffers, and only its interior rows are kept. Bitwise equal
    /// to the same number of [`Self::step_accumulate`] calls.
    fn block_accumulate(&self, cur: &[f64], next: &mut [f64], acc: &mut [f64], weights: &[f64]) {
        let n = self.n;
        let depth = weights.len();
        let wrap = |r: isize| r.rem_euclid(n as isize) as usize;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for j0 in (0..n).step_by(BLOCK_ROWS) {
            let rows_out = BLOCK_ROWS.min(n - j0);
            let rows = rows_out + 2 * depth;
            // Local row r holds global row j0 - depth + r.
            let global = |r: usize| wrap(j0 as isize - depth as isize + r as isize);
            a.clear();
            for r in 0..rows {
                let g = global(r);
                a.extend_from_slice(&cur[g * n..(g + 1) * n]);
            }
            b.resize(a.len(), 0.0);
            for (m, &w) in weights.iter().enumerate() {
                let m = m + 1;
                for r in m..rows - m {
                    let g = global(r);
                    let interior = (depth..depth + rows_out).contains(&r);
                    self.row(
                        g,
                        &a[r * n..(r + 1) * n],
                        &a[(r + 1) * n..(r + 2) * n],
                        &a[(r - 1) * n..r * n],
                        &mut b[r * n..(r + 1) * n],
                    );
                    if interior {
                        axpy(&mut acc[g * n..(g + 1) * n], w, &b[r * n..(r + 1) * n]);
                    }
                }
                std::mem::swap(&mut a, &mut b);
            }
            next[j0 * n..(j0 + rows_out) * n].copy_from_slice(&a[depth * n..(depth + rows_out) * n]);
        }
    }

    /// `sum_k weights[k] P^k v`.
    fn propagate(&self, v: &[f64], weights: &[f64]) -> Vec<f64> {
        let mut acc: Vec<f64> = v.iter().map(|x| weights[0] * x).collect();
        let mut cur = v.to_vec();
        let mut next = vec![0.0; v.len()];
        if v.len() < BLOCK_MIN_NODES {
            for &w in &weights[1..] {
                self.step_accumulate(&cur, &mut next, &mut acc, w);
                std::mem::swap(&mut cur, &mut next);
            }
        } else {
            for chunk in weights[1..].chunks(BLOCK_DEPTH) {
                self.block_accumulate(&cur, &mut next, &mut acc, chunk);
                std::mem::swap(&mut cur, &mut next);
            }
        }
        acc
    }
}

fn axpy(acc: &mut [f64], weight: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += weight * x;
    }
}

/// `e^{tL} v` for a nonnegative `v`. The result is entrywise nonnegative
/// and, with `renormalize_mass`, has exactly the mass of `v` up to rounding.
pub fn expmv(op: &SlotboomOperator, v: &Field, t: f64, cfg: &ExpmvConfig) -> Result<Field> {
    cfg.validate()?;
    assert_eq!(op.spec(), v.spec(), "operator and vector live on different grids");
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PnpError::InvalidParameter(format!("exponential time must be >= 0, got {t}")));
    }
    if let Some((index, &value)) = v.values().iter().enumerate().find(|(_, x)| **x < 0.0) {
        return Err(PnpError::NegativeConcentration { what: "exponential input", index, value });
    }
    if t == 0.0 {
        return Ok(v.clone());
    }

    let alpha = op.max_diag_magnitude();
    let t_alpha = t * alpha;
    let substeps = (t_alpha / cfg.max_step_dimensionless).ceil().max(1.0) as usize;
    let weights = poisson_weights(t_alpha / substeps as f64, cfg.tail_tolerance);
    let stencil = TransitionStencil::new(op, alpha);

    let target: f64 = v.values().iter().sum();
    let mut cur = v.values().to_vec();
    for _ in 0..substeps {
        cur = stencil.propagate(&cur, &weights);
        if cfg.renormalize_mass {
            let total: f64 = cur.iter().sum();
            if total > 0.0 {
                let ratio = target / total;
                cur.iter_mut().for_each(|x| *x *= ratio);
            }
        }
    }
    Field::from_values(*v.spec(), cur)
}

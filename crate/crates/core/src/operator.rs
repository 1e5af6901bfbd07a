//! The Slotboom-form drift-diffusion operator `L[psi] u = div(e^psi grad(u e^-psi))`
//! discretized with harmonic-mean face values of `e^psi`.
//!
//! With the harmonic mean, the coefficient with which a neighbor value `u_k`
//! enters the balance at node `l` simplifies to a logistic weight of the
//! potential difference:
//!
//! ```text
//! (L u)_l = sum_k w(l <- k) u_k + d_l u_l,
//! w(l <- k) = (2/h^2) / (1 + exp(psi_k - psi_l)),
//! d_l       = -(2/h^2) sum_k 1 / (1 + exp(psi_l - psi_k)).
//! ```
//!
//! The diagonal at `l` is minus the total weight with which `l` feeds its
//! neighbors, so every column of the matrix sums to zero and `-L` is a
//! singular M-matrix. That column structure is what makes `e^{tL}`
//! mass-conserving and positivity-preserving.

use crate::error::{PnpError, Result};
use crate::grid::{inner, Field, GridSpec};

/// Ion species, selecting the sign of the potential in the operator:
/// cations evolve under `L[-phi]`, anions under `L[phi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Cation,
    Anion,
}

impl Species {
    pub fn potential_sign(self) -> f64 {
        match self {
            Species::Cation => -1.0,
            Species::Anion => 1.0,
        }
    }
}

/// `1 / (1 + e^d)` without overflow for large `|d|`.
///
/// This is the only place the face mean enters the operator; the harmonic
/// mean of `e^psi` on a face collapses to this logistic form.
#[inline]
pub fn face_weight(d: f64) -> f64 {
    if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

/// Per-node stencil weights of `L[psi]`, stored structure-of-arrays.
///
/// `east[l]` is the coefficient of `u` at the east neighbor of `l` in
/// `(L u)_l`, and likewise for the other directions.
#[derive(Debug, Clone)]
pub struct SlotboomOperator {
    spec: GridSpec,
    potential: Field,
    east: Field,
    west: Field,
    north: Field,
    south: Field,
    diag: Field,
}

impl SlotboomOperator {
    /// Builds `L[sign * phi]` for the given species.
    pub fn build(phi: &Field, species: Species) -> Result<Self> {
        let psi = phi.scaled(species.potential_sign());
        Self::with_potential(psi)
    }

    /// Builds `L[psi]` directly from the potential `psi`.
    pub fn with_potential(psi: Field) -> Result<Self> {
        let spec = *psi.spec();
        let n = spec.n();
        let h = spec.mesh_size();
        let c = 2.0 / (h * h);
        let p = psi.values();
        let len = spec.num_nodes();
        let (mut east, mut west, mut north, mut south, mut diag) =
            (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        for j in 0..n {
            let jn = if j + 1 == n { 0 } else { j + 1 };
            let js = if j == 0 { n - 1 } else { j - 1 };
            for i in 0..n {
                let ie = if i + 1 == n { 0 } else { i + 1 };
                let iw = if i == 0 { n - 1 } else { i - 1 };
                let l = j * n + i;
                let nbrs = [j * n + ie, j * n + iw, jn * n + i, js * n + i];
                let pl = p[l];
                east[l] = c * face_weight(p[nbrs[0]] - pl);
                west[l] = c * face_weight(p[nbrs[1]] - pl);
                north[l] = c * face_weight(p[nbrs[2]] - pl);
                south[l] = c * face_weight(p[nbrs[3]] - pl);
                diag[l] = -c * nbrs.iter().map(|&k| face_weight(pl - p[k])).sum::<f64>();
            }
        }
        Ok(Self {
            spec,
            east: Field::from_raw(spec, east),
            west: Field::from_raw(spec, west),
            north: Field::from_raw(spec, north),
            south: Field::from_raw(spec, south),
            diag: Field::from_raw(spec, diag),
            potential: psi,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// The potential `psi` the operator was built from (sign already applied).
    pub fn potential(&self) -> &Field {
        &self.potential
    }

    pub fn east(&self) -> &Field {
        &self.east
    }

    pub fn west(&self) -> &Field {
        &self.west
    }

    pub fn north(&self) -> &Field {
        &self.north
    }

    pub fn south(&self) -> &Field {
        &self.south
    }

    pub fn diag(&self) -> &Field {
        &self.diag
    }

    pub fn apply(&self, f: &Field) -> Field {
        assert_eq!(&self.spec, f.spec(), "operator and field live on different grids");
        let n = self.spec.n();
        let u = f.values();
        let (e, w, no, s, d) =
            (self.east.values(), self.west.values(), self.north.values(), self.south.values(), self.diag.values());
        let mut out = vec![0.0; u.len()];
        for j in 0..n {
            let jn = if j + 1 == n { 0 } else { j + 1 };
            let js = if j == 0 { n - 1 } else { j - 1 };
            for i in 0..n {
                let ie = if i + 1 == n { 0 } else { i + 1 };
                let iw = if i == 0 { n - 1 } else { i - 1 };
                let l = j * n + i;
                out[l] = d[l] * u[l]
                    + e[l] * u[j * n + ie]
                    + w[l] * u[j * n + iw]
                    + no[l] * u[jn * n + i]
                    + s[l] * u[js * n + i];
            }
        }
        Field::from_raw(self.spec, out)
    }

    /// Largest diagonal magnitude, the uniformization rate. Always in
    /// `(0, 8/h^2]`.
    pub fn max_diag_magnitude(&self) -> f64 {
        self.diag.max_abs()
    }

    /// `<L f, ln(f / e^psi)>_h`, which is nonpositive for every positive `f`.
    pub fn entropy_dissipation(&self, f: &Field) -> Result<f64> {
        if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(PnpError::NegativeConcentration { what: "entropy argument", index, value });
        }
        let log_ratio = Field::from_values(
            self.spec,
            f.values().iter().zip(self.potential.values()).map(|(u, psi)| u.ln() - psi).collect(),
        )?;
        Ok(inner(&self.apply(f), &log_ratio))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::laplacian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(spec: GridSpec, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
        Field::from_values(spec, (0..spec.num_nodes()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
    }

    #[test]
    fn face_weight_is_stable_and_symmetric() {
        assert_eq!(face_weight(0.0), 0.5);
        assert_eq!(face_weight(1000.0), 0.0);
        assert_eq!(face_weight(-1000.0), 1.0);
        for d in [-30.0, -2.5, 0.3, 7.0, 40.0] {
            assert!((face_weight(d) + face_weight(-d) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_potential_is_the_laplacian() {
        let spec = GridSpec::new(16, 1.0, (0.0, 0.0)).unwrap();
        let h2 = spec.mesh_size().powi(2);
        let op = SlotboomOperator::build(&Field::zeros(spec), Species::Anion).unwrap();
        assert!(op.east().values().iter().all(|&w| w == 1.0 / h2));
        assert!(op.diag().values().iter().all(|&w| w == -4.0 / h2));
        assert_eq!(op.max_diag_magnitude(), 4.0 / h2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_field(spec, &mut rng, -1.0, 1.0);
        let (a, b) = (op.apply(&f), laplacian(&f));
        let scale = b.max_abs();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn constant_shift_of_potential_changes_nothing() {
        let spec = GridSpec::new(8, 1.0, (0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phi = random_field(spec, &mut rng, -2.0, 2.0);
        let shifted = phi.map(|v| v + 3.25).unwrap();
        let a = SlotboomOperator::build(&phi, Species::Cation).unwrap();
        let b = SlotboomOperator::build(&shifted, Species::Cation).unwrap();
        for (x, y) in [(a.east(), b.east()), (a.north(), b.north()), (a.diag(), b.diag())] {
            for (u, v) in x.values().iter().zip(y.values()) {
                assert!((u - v).abs() <= 1e-12 * u.abs());
            }
        }
    }

    #[test]
    fn slotboom_equilibrium_is_in_the_kernel() {
        let spec = GridSpec::new(8, 1.0, (0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = random_field(spec, &mut rng, -1.5, 1.5);
        for species in [Species::Cation, Species::Anion] {
            let op = SlotboomOperator::build(&phi, species).unwrap();
            let eq = op.potential().map(f64::exp).unwrap();
            let scale = op.max_diag_magnitude() * eq.max_abs();
            assert!(op.apply(&eq).max_abs() <= 1e-12 * scale);
            assert!(op.entropy_dissipation(&eq).unwrap().abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn columns_sum_to_zero_and_signs_hold() {
        let spec = GridSpec::new(8, 1.0, (0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = random_field(spec, &mut rng, -20.0, 20.0);
        let op = SlotboomOperator::build(&phi, Species::Anion).unwrap();
        let h2 = spec.mesh_size().powi(2);
        let alpha = op.max_diag_magnitude();
        assert!(alpha > 0.0 && alpha <= 8.0 / h2);
        let n = spec.n() as isize;
        for j in 0..n {
            for i in 0..n {
                // Weight by which node (i, j) feeds each neighbor.
                let outgoing =
                    op.west().at(i + 1, j) + op.east().at(i - 1, j) + op.south().at(i, j + 1) + op.north().at(i, j - 1);
                let d = op.diag().at(i, j);
                assert!(d < 0.0);
                assert!((d + outgoing).abs() <= 1e-12 * outgoing);
            }
        }
        for w in [op.east(), op.west(), op.north(), op.south()] {
            assert!(w.values().iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn entropy_dissipation_rejects_nonpositive() {
        let spec = GridSpec::new(4, 1.0, (0.0, 0.0)).unwrap();
        let op = SlotboomOperator::build(&Field::zeros(spec), Species::Anion).unwrap();
        let f = Field::zeros(spec);
        assert!(matches!(op.entropy_dissipation(&f), Err(PnpError::NegativeConcentration { .. })));
        assert!(op.entropy_dissipation(&Field::constant(spec, 2.0)).unwrap().abs() < 1e-12);
    }
}

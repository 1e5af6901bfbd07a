//! Randomized invariants of the discrete operators and the integrators.

use pnp_etd::diagnostics::{energy, modified_energy};
use pnp_etd::expmv::{expmv, ExpmvConfig};
use pnp_etd::grid::{h1_inner, inner, laplacian, mass};
use pnp_etd::operator::SlotboomOperator;
use pnp_etd::poisson::PoissonSolver;
use pnp_etd::stepper::{NoObserver, RecordCollector, Scheme, SimParams, Simulation};
use pnp_etd::{Field, GridSpec};
use proptest::prelude::*;

fn field(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Field> {
    prop::collection::vec(lo..hi, n * n)
        .prop_map(move |v| Field::from_values(GridSpec::centered_unit(n).unwrap(), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifts_commute_with_grid_operations(f in field(6, -2.0, 2.0), g in field(6, -2.0, 2.0), a in -7isize..7, b in -7isize..7) {
        let (fs, gs) = (f.shifted(a, b), g.shifted(a, b));
        prop_assert!((&laplacian(&fs) - &laplacian(&f).shifted(a, b)).max_abs() < 1e-10);
        prop_assert!((inner(&fs, &gs) - inner(&f, &g)).abs() < 1e-12);
        prop_assert!((h1_inner(&fs, &gs) - h1_inner(&f, &g)).abs() < 1e-10);
        prop_assert!((mass(&fs) - mass(&f)).abs() < 1e-12);
    }

    #[test]
    fn summation_by_parts(f in field(6, -2.0, 2.0), g in field(6, -2.0, 2.0)) {
        let lhs = inner(&laplacian(&f), &g);
        prop_assert!((lhs + h1_inner(&f, &g)).abs() < 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn operator_conserves_mass_and_is_gauge_invariant(psi in field(6, -5.0, 5.0), f in field(6, -1.0, 1.0), c in -10.0f64..10.0) {
        let op = SlotboomOperator::with_potential(psi.clone()).unwrap();
        let lf = op.apply(&f);
        prop_assert!(lf.mass().abs() <= 1e-12 * f.max_abs());
        let shifted = SlotboomOperator::with_potential(psi.map(|v| v + c).unwrap()).unwrap();
        for (a, b) in [(op.east(), shifted.east()), (op.west(), shifted.west()), (op.north(), shifted.north()), (op.south(), shifted.south()), (op.diag(), shifted.diag())] {
            prop_assert!((a - b).max_abs() <= 1e-12 * a.max_abs());
        }
    }

    #[test]
    fn operator_sign_pattern(psi in field(5, -30.0, 30.0)) {
        let op = SlotboomOperator::with_potential(psi).unwrap();
        let spec = *op.spec();
        let n = spec.n() as isize;
        for j in 0..n {
            for i in 0..n {
                let l = spec.wrapped_index(i, j);
                prop_assert!(op.diag().values()[l] < 0.0);
                // Outgoing weights: what node l sends to each neighbour.
                let out = op.west().values()[spec.wrapped_index(i + 1, j)]
                    + op.east().values()[spec.wrapped_index(i - 1, j)]
                    + op.south().values()[spec.wrapped_index(i, j + 1)]
                    + op.north().values()[spec.wrapped_index(i, j - 1)];
                prop_assert!((out + op.diag().values()[l]).abs() <= 1e-12 * out);
            }
        }
        for w in [op.east(), op.west(), op.north(), op.south()] {
            prop_assert!(w.min() >= 0.0);
        }
    }

    #[test]
    fn entropy_dissipation_is_nonpositive(psi in field(6, -3.0, 3.0), f in field(6, 1e-3, 3.0)) {
        let op = SlotboomOperator::with_potential(psi.clone()).unwrap();
        let d = op.entropy_dissipation(&f).unwrap();
        prop_assert!(d <= 1e-12);
        let slot = Field::from_values(*f.spec(), f.values().iter().zip(psi.values()).map(|(u, p)| (u / p.exp()).ln()).collect()).unwrap();
        prop_assert!((d - inner(&op.apply(&f), &slot)).abs() <= 1e-9 * (1.0 + d.abs()));
    }

    #[test]
    fn expmv_is_nonnegative_and_mass_exact(psi in field(6, -8.0, 8.0), v in field(6, 0.0, 1.0), t in 0.0f64..0.2) {
        let op = SlotboomOperator::with_potential(psi).unwrap();
        let out = expmv(&op, &v, t, &ExpmvConfig::default()).unwrap();
        prop_assert!(out.min() >= 0.0);
        prop_assert!((out.mass() - v.mass()).abs() <= 1e-14 * v.mass().max(1e-300) * 4.0);
        let raw = expmv(&op, &v, t, &ExpmvConfig { renormalize_mass: false, ..ExpmvConfig::default() }).unwrap();
        prop_assert!(raw.min() >= 0.0);
        prop_assert!((raw.mass() - v.mass()).abs() <= 1e-12 * v.mass().max(1e-300));
    }

    #[test]
    fn poisson_is_linear_and_gauged(r1 in field(8, -2.0, 2.0), r2 in field(8, -2.0, 2.0), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let spec = *r1.spec();
        let s = PoissonSolver::new(spec, 0.5).unwrap();
        let (r1, r2) = (r1.mean_free(), r2.mean_free());
        let combo = &r1.scaled(a) + &r2.scaled(b);
        let lhs = s.solve(&combo).unwrap();
        let rhs = &s.solve(&r1).unwrap().scaled(a) + &s.solve(&r2).unwrap().scaled(b);
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-11 * (1.0 + lhs.max_abs()));
        prop_assert!(lhs.mass().abs() <= 1e-12);
        let x1 = inner(&s.solve(&r1).unwrap(), &r2);
        let x2 = inner(&r1, &s.solve(&r2).unwrap());
        prop_assert!((x1 - x2).abs() <= 1e-11 * (1.0 + x1.abs()));
    }

    #[test]
    fn modified_energy_matches_termwise_recomputation(
        p in field(8, 0.0, 2.0), n in field(8, 0.0, 2.0), pp in field(8, 0.0, 2.0), np in field(8, 0.0, 2.0),
        phi in field(8, -1.0, 1.0), phip in field(8, -1.0, 1.0), eps in 0.1f64..2.0,
    ) {
        let h2 = p.spec().mesh_size().powi(2);
        let ent = |u: &Field| u.values().iter().map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 }).sum::<f64>() * h2;
        let grad = |f: &Field, g: &Field| {
            let k = f.spec().n() as isize;
            let mut s = 0.0;
            for j in 0..k {
                for i in 0..k {
                    s += (f.at(i, j) - f.at(i - 1, j)) * (g.at(i, j) - g.at(i - 1, j));
                    s += (f.at(i, j) - f.at(i, j - 1)) * (g.at(i, j) - g.at(i, j - 1));
                }
            }
            s
        };
        let expected = 0.5 * (ent(&p) + ent(&n) + ent(&pp) + ent(&np)) + 0.5 * eps * eps * grad(&phi, &phip);
        let got = modified_energy(&p, &n, &pp, &np, &phi, &phip, eps).unwrap();
        prop_assert!((got - expected).abs() <= 1e-13 * (1.0 + expected.abs()));
        let e = energy(&p, &n, &phi, eps).unwrap();
        prop_assert!((e - (ent(&p) + ent(&n) + 0.5 * eps * eps * grad(&phi, &phi))).abs() <= 1e-13 * (1.0 + e.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn neutral_symmetric_data_stays_symmetric(p in field(8, 0.0, 2.0), etd2 in any::<bool>()) {
        let grid = *p.spec();
        let params = SimParams {
            grid,
            epsilon: 0.7,
            tau: 0.002,
            t_final: 0.01,
            scheme: if etd2 { Scheme::Etd2 } else { Scheme::Etd1 },
            expmv: ExpmvConfig::default(),
            rho_f: Field::zeros(grid),
            diagnostics_every: 1,
        };
        let sim = Simulation::new(params).unwrap();
        let mut state = sim.initial_state(p.clone(), p.clone()).unwrap();
        for _ in 0..5 {
            state = sim.step(state).unwrap();
            prop_assert!((&state.p_curr - &state.n_curr).max_abs() <= 1e-12);
            prop_assert!(state.phi_curr.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn runs_are_positive_mass_conserving_and_dissipative(
        p in field(8, 0.0, 3.0), n in field(8, 0.0, 3.0), k in 0usize..3, etd2 in any::<bool>(),
    ) {
        let grid = *p.spec();
        let t_final = 0.02;
        let tau = t_final / [1.0, 10.0, 100.0][k];
        // Balance the charge with a uniform background.
        let rho_f = Field::constant(grid, -(p.mass() - n.mass()) / grid.area());
        let scheme = if etd2 { Scheme::Etd2 } else { Scheme::Etd1 };
        let params = SimParams { grid, epsilon: 0.3, tau, t_final, scheme, expmv: ExpmvConfig::default(), rho_f, diagnostics_every: 1 };
        let sim = Simulation::new(params).unwrap();
        let mut rec = RecordCollector::default();
        let (mp, mn) = (p.mass(), n.mass());
        sim.run(p, n, &[], &mut rec).unwrap();
        for r in &rec.records {
            prop_assert!(r.min_p >= 0.0 && r.min_n >= 0.0);
            prop_assert!(r.mass_p_drift.abs() <= 1e-12 * mp);
            prop_assert!(r.mass_n_drift.abs() <= 1e-12 * mn);
        }
        if etd2 {
            let m: Vec<f64> = rec.records.iter().filter_map(|r| r.modified_energy).collect();
            for w in m.windows(2) {
                prop_assert!(w[1] - w[0] <= 1e-10, "modified energy rose by {}", w[1] - w[0]);
            }
        } else {
            for r in &rec.records {
                if let Some(res) = r.energy_residual {
                    prop_assert!(res <= 1e-10, "energy residual {res}");
                }
            }
        }
        let _ = NoObserver;
    }
}

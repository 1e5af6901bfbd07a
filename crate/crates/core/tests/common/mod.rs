//! Dense reference implementations used as test oracles. Everything here
//! is assembled independently of the production stencil code, with
//! nodes numbered i-major (`k = i * n + j`), unlike the library's j-major
//! layout.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pnp_etd::{Field, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn node(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

/// Grid function to a dense vector in i-major order.
pub fn to_dense(f: &Field) -> DVector<f64> {
    let n = f.spec().n();
    let mut v = DVector::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            v[node(n, i, j)] = f.get(i, j);
        }
    }
    v
}

pub fn from_dense(spec: GridSpec, v: &DVector<f64>) -> Field {
    let n = spec.n();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[spec.index(i, j)] = v[node(n, i, j)];
        }
    }
    Field::from_values(spec, values).unwrap()
}

/// Matrix of the discrete Slotboom operator with potential `psi`, column
/// by column: column `l = [i, j]` has `-(2/h^2)/(1 + e^{psi_l - psi_k})` on
/// the four neighbours in the M-matrix `A = -L`, and the negated sum on the
/// diagonal. Returns `L`.
pub fn dense_operator(psi: &Field) -> DMatrix<f64> {
    let n = psi.spec().n();
    let h = psi.spec().mesh_size();
    let c = 2.0 / (h * h);
    let mut a = DMatrix::<f64>::zeros(n * n, n * n);
    let p = |i: usize, j: usize| psi.get(i, j);
    for i in 0..n {
        for j in 0..n {
            let l = node(n, i, j);
            let nbrs = [((i + n - 1) % n, j), (i, (j + n - 1) % n), (i, (j + 1) % n), ((i + 1) % n, j)];
            for (ki, kj) in nbrs {
                let w = 1.0 / (1.0 + (p(i, j) - p(ki, kj)).exp());
                a[(node(n, ki, kj), l)] -= c * w;
                a[(l, l)] += c * w;
            }
        }
    }
    -a
}

/// Periodic five-point Laplacian.
pub fn dense_laplacian(spec: GridSpec) -> DMatrix<f64> {
    let zero = Field::zeros(spec);
    // With a constant potential every face weight is 1/2.
    dense_operator(&zero)
}

/// `e^{A}` by scaling and squaring with a Taylor polynomial.
pub fn dense_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let b = a / 2f64.powi(s);
    let dim = a.nrows();
    let mut term = DMatrix::<f64>::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Mean-zero solution of `-eps^2 lap phi = rhs` for mean-zero `rhs`.
pub fn dense_poisson(rhs: &Field, epsilon: f64) -> Field {
    let spec = *rhs.spec();
    let dim = spec.num_nodes();
    let m = dense_laplacian(spec) * (-epsilon * epsilon) + DMatrix::from_element(dim, dim, 1.0 / dim as f64);
    let x = m.lu().solve(&to_dense(rhs)).expect("nonsingular");
    from_dense(spec, &x)
}

/// `(p, n, phi)` after one first-order step from `(p, n)`.
pub fn dense_etd1(p: &Field, n: &Field, rho_f: &Field, epsilon: f64, tau: f64) -> (Field, Field, Field) {
    let spec = *p.spec();
    let phi = dense_poisson(&(&(p - n) + rho_f), epsilon);
    let ep = dense_expm(&(dense_operator(&phi.scaled(-1.0)) * tau));
    let en = dense_expm(&(dense_operator(&phi) * tau));
    let p1 = from_dense(spec, &(ep * to_dense(p)));
    let n1 = from_dense(spec, &(en * to_dense(n)));
    let phi1 = dense_poisson(&(&(&p1 - &n1) + rho_f), epsilon);
    (p1, n1, phi1)
}

/// Second-order step from levels `k-1` (`p0, n0`) and `k` (`p1, n1`).
pub fn dense_etd2(
    p0: &Field,
    n0: &Field,
    p1: &Field,
    n1: &Field,
    rho_f: &Field,
    epsilon: f64,
    tau: f64,
) -> (Field, Field, Field) {
    let spec = *p0.spec();
    let phi = dense_poisson(&(&(p1 - n1) + rho_f), epsilon);
    let ep = dense_expm(&(dense_operator(&phi.scaled(-1.0)) * (2.0 * tau)));
    let en = dense_expm(&(dense_operator(&phi) * (2.0 * tau)));
    let p2 = from_dense(spec, &(ep * to_dense(p0)));
    let n2 = from_dense(spec, &(en * to_dense(n0)));
    let phi2 = dense_poisson(&(&(&p2 - &n2) + rho_f), epsilon);
    (p2, n2, phi2)
}

pub fn random_field(spec: GridSpec, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
    Field::from_values(spec, (0..spec.num_nodes()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_sup(a: &Field, b: &Field) -> f64 {
    (a - b).max_abs() / b.max_abs().max(f64::MIN_POSITIVE)
}

/// Poisson(`rate`) right tail beyond `k`, summed directly from the pmf in
/// extended range (log-gamma free, via running products in log space).
pub fn poisson_tail(rate: f64, k: usize) -> f64 {
    // Sum the pmf from k+1 upward until terms vanish.
    let mut log_term = -rate;
    for m in 1..=k + 1 {
        log_term += rate.ln() - (m as f64).ln();
    }
    let mut tail = 0.0;
    let mut m = k + 1;
    loop {
        let term = log_term.exp();
        tail += term;
        if term < 1e-30 * tail.max(1e-300) && m as f64 > rate {
            break;
        }
        m += 1;
        log_term += rate.ln() - (m as f64).ln();
        if m > k + 100_000 {
            break;
        }
    }
    tail
}

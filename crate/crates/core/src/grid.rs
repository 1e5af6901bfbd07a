//! Uniform periodic grids, grid functions and the discrete calculus on them.
//!
//! A grid with `N` nodes per axis stores the nodes `x_i = x0 + i*h`,
//! `y_j = y0 + j*h` for `i, j = 0..N`, with index `N` identified with `0`.
//! Values are stored row-major with `i` (the x index) fastest, so node
//! `(i, j)` lives at `j * N + i`. Snapshot files use the same layout: one
//! CSV row per `j`.

use std::ops::{Add, Mul, Sub};

use crate::error::{PnpError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    length: f64,
    origin: (f64, f64),
}

impl GridSpec {
    pub fn new(n: usize, length: f64, origin: (f64, f64)) -> Result<Self> {
        if n < 2 {
            return Err(PnpError::InvalidGrid(format!("need at least 2 nodes per axis, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(PnpError::InvalidGrid(format!("domain length must be positive, got {length}")));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(PnpError::InvalidGrid("non-finite origin".into()));
        }
        Ok(Self { n, length, origin })
    }

    /// The square `(-0.5, 0.5)^2` with `n` nodes per axis.
    pub fn centered_unit(n: usize) -> Result<Self> {
        Self::new(n, 1.0, (-0.5, -0.5))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    /// `h = L / N`.
    pub fn mesh_size(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn num_nodes(&self) -> usize {
        self.n * self.n
    }

    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + i as f64 * self.mesh_size()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + j as f64 * self.mesh_size()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Flat index of `(i, j)` with both indices taken modulo `N`.
    #[inline]
    pub fn wrapped_index(&self, i: isize, j: isize) -> usize {
        let n = self.n as isize;
        self.index(i.rem_euclid(n) as usize, j.rem_euclid(n) as usize)
    }
}

/// A grid function on a periodic grid. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.num_nodes() {
            return Err(PnpError::InvalidGrid(format!("expected {} values, got {}", spec.num_nodes(), values.len())));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(PnpError::NonFinite { what: "field", index });
        }
        Ok(Self { spec, values })
    }

    /// Caller guarantees the length matches and the values are finite.
    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.num_nodes());
        Self { spec, values }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        assert!(c.is_finite());
        Self::from_raw(spec, vec![c; spec.num_nodes()])
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = spec.n();
        let mut values = Vec::with_capacity(spec.num_nodes());
        for j in 0..n {
            let y = spec.y(j);
            for i in 0..n {
                values.push(f(spec.x(i), y));
            }
        }
        Self::from_values(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.values[self.spec.wrapped_index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sup norm over nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `<f, 1>_h`.
    pub fn mass(&self) -> f64 {
        let h = self.spec.mesh_size();
        h * h * self.values.iter().sum::<f64>()
    }

    /// Average value over the domain, `<f, 1>_h / L^2`.
    pub fn mean(&self) -> f64 {
        self.mass() / self.spec.area()
    }

    /// The same field with its mean removed.
    pub fn mean_free(&self) -> Self {
        let m = self.values.iter().sum::<f64>() / self.values.len() as f64;
        Self::from_raw(self.spec, self.values.iter().map(|v| v - m).collect())
    }

    pub fn scaled(&self, a: f64) -> Self {
        assert!(a.is_finite());
        Self::from_raw(self.spec, self.values.iter().map(|v| a * v).collect())
    }

    /// Cyclic shift: `out(i, j) = f(i - a, j - b)`.
    pub fn shifted(&self, a: isize, b: isize) -> Self {
        let n = self.spec.n();
        let mut out = vec![0.0; self.values.len()];
        for j in 0..n {
            for i in 0..n {
                out[self.spec.index(i, j)] = self.at(i as isize - a, j as isize - b);
            }
        }
        Self::from_raw(self.spec, out)
    }

    /// Values at the nodes of `coarse`, which must be a sub-lattice of this
    /// grid (same domain, node count dividing ours).
    pub fn restrict_to(&self, coarse: &GridSpec) -> Result<Self> {
        let fine = &self.spec;
        if coarse.length() != fine.length() || coarse.origin() != fine.origin() {
            return Err(PnpError::InvalidGrid("restriction between different domains".into()));
        }
        if fine.n() % coarse.n() != 0 {
            return Err(PnpError::InvalidGrid(format!("{} nodes per axis do not embed in {}", coarse.n(), fine.n())));
        }
        let stride = fine.n() / coarse.n();
        let nc = coarse.n();
        let mut out = Vec::with_capacity(coarse.num_nodes());
        for j in 0..nc {
            for i in 0..nc {
                out.push(self.get(i * stride, j * stride));
            }
        }
        Ok(Self::from_raw(*coarse, out))
    }

    fn assert_same_grid(&self, other: &Field) {
        assert_eq!(self.spec, other.spec, "grid functions live on different grids");
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.assert_same_grid(rhs);
        Field::from_raw(self.spec, self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.assert_same_grid(rhs);
        Field::from_raw(self.spec, self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect())
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scaled(self)
    }
}

/// Five-point periodic Laplacian.
pub fn laplacian(f: &Field) -> Field {
    let spec = *f.spec();
    let n = spec.n();
    let h = spec.mesh_size();
    let inv_h2 = 1.0 / (h * h);
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for j in 0..n {
        let jn = if j + 1 == n { 0 } else { j + 1 };
        let js = if j == 0 { n - 1 } else { j - 1 };
        for i in 0..n {
            let ie = if i + 1 == n { 0 } else { i + 1 };
            let iw = if i == 0 { n - 1 } else { i - 1 };
            let c = v[j * n + i];
            out[j * n + i] = (v[j * n + ie] + v[j * n + iw] + v[jn * n + i] + v[js * n + i] - 4.0 * c) * inv_h2;
        }
    }
    Field::from_raw(spec, out)
}

/// Discrete L2 inner product `h^2 sum f g`.
pub fn inner(f: &Field, g: &Field) -> f64 {
    f.assert_same_grid(g);
    let h = f.spec.mesh_size();
    h * h * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>()
}

/// Discrete H1 semi-inner product built from backward differences on the
/// west and south faces of every node.
pub fn h1_inner(f: &Field, g: &Field) -> f64 {
    f.assert_same_grid(g);
    let spec = f.spec;
    let n = spec.n();
    let (a, b) = (f.values(), g.values());
    let mut sum = 0.0;
    for j in 0..n {
        let js = if j == 0 { n - 1 } else { j - 1 };
        for i in 0..n {
            let iw = if i == 0 { n - 1 } else { i - 1 };
            let c = j * n + i;
            let w = j * n + iw;
            let s = js * n + i;
            sum += (a[c] - a[w]) * (b[c] - b[w]) + (a[c] - a[s]) * (b[c] - b[s]);
        }
    }
    // h^2 from the quadrature cancels the 1/h^2 of the two differences.
    sum
}

/// `<f, 1>_h`.
pub fn mass(f: &Field) -> f64 {
    f.mass()
}

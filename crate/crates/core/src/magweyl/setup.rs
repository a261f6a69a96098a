//! Periodic grids, polynomial vector potentials and the field registry.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::magweyl::quadrature::GaussLegendre;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// A point of `R^n`, padded with zeros beyond `n`.
pub type Point = [f64; MAX_DIM];

/// `N^n` points `y_k = origin + k h`, `k in {0..N-1}^n`, flattened row major
/// (axis 0 slowest). Grid states are stored in the normalized coordinates
/// `c_k = h^{n/2} u(y_k)`, so the `l^2` norm of the coordinates is the
/// `L^2` norm of the state and operator matrices act on them directly.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    size: usize,
    h: f64,
    origin: f64,
}

impl Grid {
    pub fn new(n: usize, size: usize, h: f64, origin: f64) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidSpec(format!("spatial dimension {n} not in 1..=2")));
        }
        if size < 2 {
            return Err(Error::InvalidSpec("grid needs at least two points per axis".into()));
        }
        if !(h.is_finite() && h > 0.0 && origin.is_finite()) {
            return Err(Error::InvalidSpec("grid spacing must be positive".into()));
        }
        Ok(Self { n, size, h, origin })
    }

    /// Spacing `sqrt(2 pi / N)` (equal position and frequency steps), centred.
    pub fn symmetric(n: usize, size: usize) -> Result<Self> {
        let h = (2.0 * PI / size as f64).sqrt();
        Self::centered(n, size, h)
    }

    pub fn centered(n: usize, size: usize, h: f64) -> Result<Self> {
        Self::new(n, size, h, -((size / 2) as f64) * h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Dual step `2 pi / (N h)`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / (self.size as f64 * self.h)
    }

    /// Number of grid points, `N^n`.
    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^n`.
    pub fn cell(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    pub fn flat(&self, idx: [usize; MAX_DIM]) -> usize {
        if self.n == 1 {
            idx[0]
        } else {
            idx[0] * self.size + idx[1]
        }
    }

    pub fn multi(&self, k: usize) -> [usize; MAX_DIM] {
        if self.n == 1 {
            [k, 0]
        } else {
            [k / self.size, k % self.size]
        }
    }

    /// Flat index of a signed multi-index reduced mod `N`.
    pub fn flat_wrapped(&self, idx: [i64; MAX_DIM]) -> usize {
        let m = self.size as i64;
        let w = |i: i64| i.rem_euclid(m) as usize;
        self.flat([w(idx[0]), w(idx[1])])
    }

    /// Signed representative in `[-N/2, N/2)` of a residue.
    pub fn centered_index(&self, a: usize) -> i64 {
        let a = (a % self.size) as i64;
        let n = self.size as i64;
        if a < n - n / 2 {
            a
        } else {
            a - n
        }
    }

    /// Centred multi-index of flat index `k`.
    pub fn centered_multi(&self, k: usize) -> [i64; MAX_DIM] {
        let m = self.multi(k);
        let mut out = [0; MAX_DIM];
        for j in 0..self.n {
            out[j] = self.centered_index(m[j]);
        }
        out
    }

    /// Position `y_k`.
    pub fn point(&self, k: usize) -> Point {
        let m = self.multi(k);
        let mut p = [0.0; MAX_DIM];
        for j in 0..self.n {
            p[j] = self.origin + m[j] as f64 * self.h;
        }
        p
    }

    /// Lattice displacement `x_a = a h`.
    pub fn displacement(&self, a: [i64; MAX_DIM]) -> Point {
        let mut p = [0.0; MAX_DIM];
        for j in 0..self.n {
            p[j] = a[j] as f64 * self.h;
        }
        p
    }

    /// Dual lattice frequency `xi_m = m dxi`.
    pub fn frequency(&self, m: [i64; MAX_DIM]) -> Point {
        let mut p = [0.0; MAX_DIM];
        for j in 0..self.n {
            p[j] = m[j] as f64 * self.dxi();
        }
        p
    }

    pub fn dot(&self, a: &Point, b: &Point) -> f64 {
        (0..self.n).map(|j| a[j] * b[j]).sum()
    }

    /// Iterate over all signed multi-indices in `[-N/2, N/2)^n`, in the
    /// order of the flat index of their residues.
    pub fn centered_indices(&self) -> impl Iterator<Item = [i64; MAX_DIM]> + '_ {
        (0..self.len()).map(move |k| self.centered_multi(k))
    }

    /// Half-step coordinate `origin + q h / 2`.
    pub fn half_step(&self, q: i64) -> f64 {
        self.origin + q as f64 * self.h / 2.0
    }
}

/// One monomial `coef * prod_j y_j^powers[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Real polynomial in up to two variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    pub terms: Vec<PolyTerm>,
}

impl Poly {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![PolyTerm {
                coef: c,
                powers: vec![],
            }],
        }
    }

    /// `c * y_j`.
    pub fn linear(j: usize, c: f64) -> Self {
        let mut powers = vec![0; j + 1];
        powers[j] = 1;
        Self {
            terms: vec![PolyTerm { coef: c, powers }],
        }
    }

    pub fn term(coef: f64, powers: &[u32]) -> Self {
        Self {
            terms: vec![PolyTerm {
                coef,
                powers: powers.to_vec(),
            }],
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Poly { terms }
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|t| PolyTerm {
                    coef: t.coef * c,
                    powers: t.powers.clone(),
                })
                .collect(),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.powers
                    .iter()
                    .enumerate()
                    .fold(t.coef, |acc, (j, &p)| {
                        if p == 0 {
                            acc
                        } else {
                            acc * y.get(j).copied().unwrap_or(0.0).powi(p as i32)
                        }
                    })
            })
            .sum()
    }

    pub fn partial(&self, j: usize) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|t| t.powers.get(j).copied().unwrap_or(0) > 0)
                .map(|t| {
                    let mut powers = t.powers.clone();
                    let p = powers[j];
                    powers[j] = p - 1;
                    PolyTerm {
                        coef: t.coef * p as f64,
                        powers,
                    }
                })
                .collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|t| t.coef != 0.0)
            .map(|t| t.powers.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| t.coef != 0.0)
            .map(|t| t.powers.iter().rposition(|&p| p > 0).map_or(0, |i| i + 1))
            .max()
            .unwrap_or(0)
    }
}

/// Built-in vector potentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    /// Constant field `B_12 = b`, realised in the symmetric gauge.
    ConstantB { b: f64 },
    /// `A = (-b y_2 / 2, b y_1 / 2)`.
    SymmetricGauge { b: f64 },
    /// `A = (0, b y_1)`.
    LandauLinear { b: f64 },
    /// One polynomial per component of `A`.
    Polynomial { components: Vec<Poly> },
}

impl FieldSpec {
    pub fn potential(&self, n: usize) -> Result<Vec<Poly>> {
        let need_plane = |name: &str| {
            if n != 2 {
                Err(Error::InvalidSpec(format!("field '{name}' needs n = 2")))
            } else {
                Ok(())
            }
        };
        Ok(match self {
            FieldSpec::Zero => vec![Poly::zero(); n],
            FieldSpec::ConstantB { b } | FieldSpec::SymmetricGauge { b } => {
                need_plane("symmetric-gauge")?;
                vec![Poly::linear(1, -b / 2.0), Poly::linear(0, b / 2.0)]
            }
            FieldSpec::LandauLinear { b } => {
                need_plane("landau-linear")?;
                vec![Poly::zero(), Poly::linear(0, *b)]
            }
            FieldSpec::Polynomial { components } => {
                if components.len() != n {
                    return Err(Error::InvalidSpec(format!(
                        "polynomial potential has {} components for n = {n}",
                        components.len()
                    )));
                }
                if let Some(p) = components.iter().find(|p| p.arity() > n) {
                    return Err(Error::InvalidSpec(format!(
                        "polynomial potential uses a variable beyond n = {n}: {p:?}"
                    )));
                }
                components.clone()
            }
        })
    }
}

/// Default Gauss–Legendre order for line and flux integrals.
pub const DEFAULT_QUAD_ORDER: usize = 8;

/// Grid, vector potential `A`, magnetic field `B` and quadrature rules.
#[derive(Clone, Debug)]
pub struct MagneticSetup {
    grid: Grid,
    a: Vec<Poly>,
    /// `B_jk` for `j < k`; empty for `n = 1`.
    b: Vec<Vec<Poly>>,
    line: GaussLegendre,
    flux: GaussLegendre,
}

impl MagneticSetup {
    pub fn new(grid: Grid, a: Vec<Poly>, line_order: usize, flux_order: usize) -> Result<Self> {
        let n = grid.n();
        if a.len() != n {
            return Err(Error::InvalidSpec(format!(
                "vector potential has {} components, expected {n}",
                a.len()
            )));
        }
        let b = derived_field(&a, n);
        Ok(Self {
            grid,
            a,
            b,
            line: GaussLegendre::new(line_order)?,
            flux: GaussLegendre::new(flux_order)?,
        })
    }

    pub fn from_field(grid: Grid, field: &FieldSpec) -> Result<Self> {
        let a = field.potential(grid.n())?;
        Self::new(grid, a, DEFAULT_QUAD_ORDER, DEFAULT_QUAD_ORDER)
    }

    /// Uses a user supplied `B` (upper triangle, `b[j][k - j - 1] = B_jk`)
    /// after checking it against central differences of `A` with step `h`:
    /// the mismatch must stay below `c_tol * h^2` at every grid point.
    pub fn with_field_check(mut self, b: Vec<Vec<Poly>>, c_tol: f64) -> Result<Self> {
        let n = self.grid.n();
        if b.len() != n.saturating_sub(1) || b.iter().enumerate().any(|(j, r)| r.len() != n - j - 1) {
            return Err(Error::InvalidSpec("magnetic field must list B_jk for j < k".into()));
        }
        let h = self.grid.h();
        let mut worst = 0.0f64;
        for k in 0..self.grid.len() {
            let z = self.grid.point(k);
            for j in 0..n {
                for l in (j + 1)..n {
                    let cd = |comp: usize, axis: usize| {
                        let mut zp = z;
                        let mut zm = z;
                        zp[axis] += h;
                        zm[axis] -= h;
                        (self.a[comp].eval(&zp[..n]) - self.a[comp].eval(&zm[..n])) / (2.0 * h)
                    };
                    let approx = cd(l, j) - cd(j, l);
                    worst = worst.max((approx - b[j][l - j - 1].eval(&z[..n])).abs());
                }
            }
        }
        if worst > c_tol * h * h {
            return Err(Error::InvalidSpec(format!(
                "supplied B differs from dA by {worst:.3e} > {:.3e}",
                c_tol * h * h
            )));
        }
        self.b = b;
        Ok(self)
    }

    pub fn zero_field(grid: Grid) -> Result<Self> {
        Self::from_field(grid, &FieldSpec::Zero)
    }

    /// Same data with `A' = A + grad rho`.
    pub fn gauge_transformed(&self, rho: &Poly) -> Result<Self> {
        let n = self.grid.n();
        let a: Vec<Poly> = (0..n).map(|j| self.a[j].add(&rho.partial(j))).collect();
        let mut out = Self::new(self.grid.clone(), a, self.line.order(), self.flux.order())?;
        out.b = self.b.clone();
        Ok(out)
    }

    pub fn with_quadrature(&self, line_order: usize, flux_order: usize) -> Result<Self> {
        let mut out = Self::new(self.grid.clone(), self.a.clone(), line_order, flux_order)?;
        out.b = self.b.clone();
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn potential(&self) -> &[Poly] {
        &self.a
    }

    pub fn line_rule(&self) -> &GaussLegendre {
        &self.line
    }

    pub fn flux_rule(&self) -> &GaussLegendre {
        &self.flux
    }

    pub fn a_at(&self, z: &Point) -> Point {
        let mut out = [0.0; MAX_DIM];
        for (j, p) in self.a.iter().enumerate() {
            out[j] = p.eval(&z[..self.n()]);
        }
        out
    }

    /// `B_jk(z)` for any `j, k` (antisymmetric by construction).
    pub fn b_at(&self, z: &Point, j: usize, k: usize) -> f64 {
        if j == k {
            0.0
        } else if j < k {
            self.b[j][k - j - 1].eval(&z[..self.n()])
        } else {
            -self.b[k][j - k - 1].eval(&z[..self.n()])
        }
    }

    pub fn has_zero_potential(&self) -> bool {
        self.a.iter().all(|p| p.terms.iter().all(|t| t.coef == 0.0))
    }
}

fn derived_field(a: &[Poly], n: usize) -> Vec<Vec<Poly>> {
    (0..n)
        .map(|j| {
            ((j + 1)..n)
                .map(|k| a[k].partial(j).add(&a[j].partial(k).scale(-1.0)))
                .collect()
        })
        .collect()
}

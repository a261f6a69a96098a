//! Gauss–Legendre rules on `[0, 1]`, circulations of `A` along segments and
//! fluxes of `B` through triangles.

use crate::error::{Error, Result};
use crate::magweyl::setup::{MagneticSetup, Point, MAX_DIM};

/// `order`-point Gauss–Legendre rule mapped to `[0, 1]`; exact for
/// polynomials of degree below `2 * order`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > 256 {
            return Err(Error::InvalidSpec(format!("quadrature order {order} not in 1..=256")));
        }
        let n = order;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes.push(0.5 * (1.0 - x));
            weights.push(1.0 / ((1.0 - x * x) * dp * dp));
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// `int_{0 <= t <= s <= 1} f(s, t) ds dt` via `s = u`, `t = u v`.
    pub fn integrate_triangle(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (&u, &wu) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&v, &wv) in self.nodes.iter().zip(&self.weights) {
                inner += wv * f(u, u * v);
            }
            acc += wu * u * inner;
        }
        acc
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `int_0^1 sum_j A_j(y + t x) x_j dt`.
pub fn line_integral(setup: &MagneticSetup, y: &Point, x: &Point) -> f64 {
    let n = setup.n();
    if x[..n].iter().all(|&c| c == 0.0) || setup.has_zero_potential() {
        return 0.0;
    }
    setup.line_rule().integrate(|t| {
        let mut z = [0.0; MAX_DIM];
        for j in 0..n {
            z[j] = y[j] + t * x[j];
        }
        let a = setup.a_at(&z);
        (0..n).map(|j| a[j] * x[j]).sum()
    })
}

/// Flux of `B` through the triangle `z, z + x, z + x + y2`, parametrised by
/// `z + s x + t y2`, `0 <= t <= s <= 1`.
pub fn flux_integral(setup: &MagneticSetup, z: &Point, x: &Point, y2: &Point) -> f64 {
    let n = setup.n();
    if n < 2 {
        return 0.0;
    }
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            let w = x[j] * y2[k] - x[k] * y2[j];
            if w != 0.0 {
                pairs.push((j, k, w));
            }
        }
    }
    if pairs.is_empty() {
        return 0.0;
    }
    setup.flux_rule().integrate_triangle(|s, t| {
        let mut p = [0.0; MAX_DIM];
        for j in 0..n {
            p[j] = z[j] + s * x[j] + t * y2[j];
        }
        pairs.iter().map(|&(j, k, w)| setup.b_at(&p, j, k) * w).sum()
    })
}

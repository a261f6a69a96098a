//! The magnetic Weyl system on the grid, the flux cocycle and the
//! composition law.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::linalg::CVector;
use crate::magweyl::quadrature::{flux_integral, line_integral};
use crate::magweyl::setup::{Grid, MagneticSetup, Point, MAX_DIM};
use crate::quantizer::{FamilyOp, PiFamily};
use crate::sigma::SampledSigma;

/// Lattice phase-space point `(x, xi) = (a h, m dxi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhasePoint {
    pub x: [i64; MAX_DIM],
    pub xi: [i64; MAX_DIM],
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint {
        x: [0; MAX_DIM],
        xi: [0; MAX_DIM],
    };

    pub fn new(x: [i64; MAX_DIM], xi: [i64; MAX_DIM]) -> Self {
        Self { x, xi }
    }

    pub fn neg(&self) -> Self {
        Self {
            x: [-self.x[0], -self.x[1]],
            xi: [-self.xi[0], -self.xi[1]],
        }
    }

    pub fn add(&self, o: &PhasePoint) -> Self {
        Self {
            x: [self.x[0] + o.x[0], self.x[1] + o.x[1]],
            xi: [self.xi[0] + o.xi[0], self.xi[1] + o.xi[1]],
        }
    }

    /// Displacements and frequencies must stay strictly within one period.
    pub fn check(&self, grid: &Grid) -> Result<()> {
        let n = grid.size() as i64;
        for j in 0..grid.n() {
            if self.x[j].abs() >= n || self.xi[j].abs() >= n {
                return Err(Error::OffLattice(format!(
                    "({:?}, {:?}) leaves the period {n}",
                    &self.x[..grid.n()],
                    &self.xi[..grid.n()]
                )));
            }
        }
        for j in grid.n()..MAX_DIM {
            if self.x[j] != 0 || self.xi[j] != 0 {
                return Err(Error::OffLattice("component beyond the spatial dimension".into()));
            }
        }
        Ok(())
    }

    /// Physical coordinates `(x, xi)`.
    pub fn coords(&self, grid: &Grid) -> (Point, Point) {
        (grid.displacement(self.x), grid.frequency(self.xi))
    }

    /// Phase-space point from physical coordinates, rejected unless they
    /// lie on the lattice within `1e-9` relative error.
    pub fn from_coords(grid: &Grid, x: &[f64], xi: &[f64]) -> Result<Self> {
        if x.len() != grid.n() || xi.len() != grid.n() {
            return Err(Error::DimensionMismatch {
                context: "phase point coordinates",
                expected: grid.n(),
                found: x.len().min(xi.len()),
            });
        }
        let snap = |v: f64, step: f64| -> Result<i64> {
            let r = v / step;
            let k = r.round();
            if (r - k).abs() > 1e-9 * r.abs().max(1.0) {
                return Err(Error::OffLattice(format!("{v} is not a multiple of {step}")));
            }
            Ok(k as i64)
        };
        let mut p = PhasePoint::ORIGIN;
        for j in 0..grid.n() {
            p.x[j] = snap(x[j], grid.h())?;
            p.xi[j] = snap(xi[j], grid.dxi())?;
        }
        p.check(grid)?;
        Ok(p)
    }
}

/// `Gamma(y_k, y_k + x_a)`, the circulation of `A` along the segment from
/// grid point `k` by displacement `a`, in unwrapped coordinates.
pub fn segment_phase(setup: &MagneticSetup, k: usize, a: [i64; MAX_DIM]) -> f64 {
    let g = setup.grid();
    line_integral(setup, &g.point(k), &g.displacement(a))
}

/// `Gamma(y_k, y_k + x_a)` for every grid point `k` and every centred
/// displacement `a`, stored at `flat(a mod N) * N^n + k`.
#[derive(Clone, Debug)]
pub struct SegmentTable {
    len: usize,
    data: Vec<f64>,
}

impl SegmentTable {
    pub fn new(setup: &MagneticSetup) -> Self {
        let g = setup.grid();
        let len = g.len();
        if setup.has_zero_potential() {
            return Self {
                len,
                data: vec![0.0; len * len],
            };
        }
        let data: Vec<f64> = (0..len)
            .into_par_iter()
            .flat_map_iter(|ka| {
                let a = g.centered_multi(ka);
                (0..len).map(move |k| segment_phase(setup, k, a))
            })
            .collect();
        Self { len, data }
    }

    /// Phase for grid point `k` and displacement residue `ka`.
    pub fn get(&self, k: usize, ka: usize) -> f64 {
        self.data[ka * self.len + k]
    }
}

/// `[pi^A(x, xi) u](y) = e^{-i (y + x/2) xi} e^{-i Gamma(y, y + x)} u(y + x)`
/// with the shift taken periodically.
pub fn weyl_system(setup: &MagneticSetup, s: &PhasePoint) -> Result<FamilyOp> {
    let g = setup.grid();
    s.check(g)?;
    let gamma: Vec<f64> = (0..g.len()).map(|k| segment_phase(setup, k, s.x)).collect();
    Ok(weyl_from_phases(g, s, &gamma))
}

fn weyl_from_phases(g: &Grid, s: &PhasePoint, gamma: &[f64]) -> FamilyOp {
    let (x, xi) = s.coords(g);
    let mut perm = Vec::with_capacity(g.len());
    let mut phase = Vec::with_capacity(g.len());
    for (k, &gk) in gamma.iter().enumerate() {
        let y = g.point(k);
        let m = g.multi(k);
        let mut target = [0i64; MAX_DIM];
        let mut arg = -gk;
        for j in 0..g.n() {
            target[j] = m[j] as i64 + s.x[j];
            arg -= (y[j] + x[j] / 2.0) * xi[j];
        }
        perm.push(g.flat_wrapped(target));
        phase.push(Complex64::from_polar(1.0, arg));
    }
    FamilyOp::Monomial { perm, phase }
}

/// `omega^B(s, t; z) = e^{i/2 (y xi - x eta)} e^{-i flux(z, z + x, z + x + y)}`.
pub fn cocycle(setup: &MagneticSetup, s: &PhasePoint, t: &PhasePoint, z: &Point) -> Complex64 {
    let g = setup.grid();
    let (x, xi) = s.coords(g);
    let (y, eta) = t.coords(g);
    let symplectic = 0.5 * (g.dot(&y, &xi) - g.dot(&x, &eta));
    Complex64::from_polar(1.0, symplectic - flux_integral(setup, z, &x, &y))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositionReport {
    /// `max_u ||pi(s) pi(t) u - omega(s, t; Q) pi(s + t) u|| / ||u||`.
    pub defect: f64,
    /// All states vanish wherever one of the shifts wraps around.
    pub support_ok: bool,
    pub warning: Option<String>,
}

/// Residual of the composition law on the given states.
pub fn composition_defect(
    setup: &MagneticSetup,
    s: &PhasePoint,
    t: &PhasePoint,
    states: &[CVector],
) -> Result<CompositionReport> {
    let g = setup.grid();
    let st = s.add(t);
    st.check(g)?;
    let ps = weyl_system(setup, s)?;
    let pt = weyl_system(setup, t)?;
    let pst = weyl_system(setup, &st)?;
    let omega: Vec<Complex64> = (0..g.len())
        .map(|k| cocycle(setup, s, t, &g.point(k)))
        .collect();
    let size = g.size() as i64;
    let inside = |v: i64| (0..size).contains(&v);
    let mut support_ok = true;
    let mut defect = 0.0f64;
    for u in states {
        check_len("composition test state", g.len(), u.len())?;
        for (j, c) in u.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let m = g.multi(j);
            for d in 0..g.n() {
                let row = m[d] as i64 - s.x[d] - t.x[d];
                if !inside(row) || !inside(row + s.x[d]) {
                    support_ok = false;
                }
            }
        }
        let lhs = ps.apply(&pt.apply(u));
        let mut rhs = pst.apply(u);
        for (r, w) in rhs.iter_mut().zip(&omega) {
            *r *= w;
        }
        let nu = u.norm();
        if nu > 0.0 {
            defect = defect.max((lhs - rhs).norm() / nu);
        }
    }
    let warning = (!support_ok).then(|| {
        "test states are not supported away from the periodic boundary; the residual includes wrap-around terms".to_string()
    });
    Ok(CompositionReport {
        defect,
        support_ok,
        warning,
    })
}

/// Lattice phase space `{(x_a, xi_m)}` with points ordered by
/// `flat(a) * N^n + flat(m)`, coordinates `(x, xi)` and Lebesgue cell
/// weights `(h dxi)^n = (2 pi / N)^n`. The exhaustion consists of `levels`
/// balls around the origin.
pub fn phase_space_sigma(grid: &Grid, levels: usize) -> Result<SampledSigma> {
    let n = grid.n();
    let len = grid.len();
    let mut points = Vec::with_capacity(len * len);
    for ka in 0..len {
        let x = grid.displacement(grid.centered_multi(ka));
        for km in 0..len {
            let xi = grid.frequency(grid.centered_multi(km));
            let mut p = Vec::with_capacity(2 * n);
            p.extend_from_slice(&x[..n]);
            p.extend_from_slice(&xi[..n]);
            points.push(p);
        }
    }
    let cell = (grid.h() * grid.dxi()).powi(n as i32);
    let center = vec![0.0; 2 * n];
    SampledSigma::with_uniform_balls(points, vec![cell; len * len], &center, levels)
}

/// Phase point of flat phase-space index `j`.
pub fn phase_point_of(grid: &Grid, j: usize) -> PhasePoint {
    let len = grid.len();
    PhasePoint::new(grid.centered_multi(j / len), grid.centered_multi(j % len))
}

pub fn phase_index_of(grid: &Grid, s: &PhasePoint) -> usize {
    grid.flat_wrapped(s.x) * grid.len() + grid.flat_wrapped(s.xi)
}

/// The family `s -> pi^A(s)*` over the lattice phase space; `pi(s)*` is
/// stored as the adjoint of the monomial `pi(s)`, so no boundary issue
/// enters. Weights are the raw Lebesgue cells (see [`phase_space_sigma`]).
pub fn weyl_family(setup: &MagneticSetup, levels: usize) -> Result<PiFamily> {
    let g = setup.grid();
    let sigma = phase_space_sigma(g, levels)?;
    let len = g.len();
    let ops: Vec<FamilyOp> = (0..len)
        .into_par_iter()
        .flat_map_iter(|ka| {
            let a = g.centered_multi(ka);
            let gamma: Vec<f64> = (0..len).map(|k| segment_phase(setup, k, a)).collect();
            (0..len)
                .map(|km| {
                    let s = PhasePoint::new(a, g.centered_multi(km));
                    weyl_from_phases(g, &s, &gamma).adjoint()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    PiFamily::new(sigma, ops, Some(0))
}

/// Expected frame constant of the lattice Weyl frame with unit window and
/// raw weights: `N^n (2 pi / N)^n = (2 pi)^n`.
pub fn expected_calibration_constant(grid: &Grid) -> f64 {
    (2.0 * std::f64::consts::PI).powi(grid.n() as i32)
}

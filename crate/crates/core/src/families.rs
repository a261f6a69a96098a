//! Test families with known compactness behaviour: coherent orbits over a
//! bounded phase-space patch, translates escaping to the phase-space corner,
//! modulations, spatial and frequency cutoffs, and the rank-one operator
//! counterexample.

use num_complex::Complex64;

use crate::compactness::{OperatorFamily, VectorFamily};
use crate::error::{Error, Result};
use crate::linalg::{rank_one, CVector};
use crate::magweyl::setup::{Grid, MagneticSetup, Point};
use crate::magweyl::weyl::{weyl_system, PhasePoint};

/// Normalized `exp(-|y|^2 / (2 width^2))` on the grid.
pub fn gaussian_state(grid: &Grid, width: f64) -> Result<CVector> {
    if !(width > 0.0) {
        return Err(Error::InvalidSpec(format!("gaussian width {width} must be positive")));
    }
    let v = CVector::from_fn(grid.len(), |k, _| {
        let p = grid.point(k);
        let r2 = grid.dot(&p, &p);
        Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
    });
    let n = v.norm();
    Ok(v / Complex64::new(n, 0.0))
}

/// `pi^A(s)* window`.
pub fn coherent_state(setup: &MagneticSetup, window: &CVector, s: &PhasePoint) -> Result<CVector> {
    Ok(weyl_system(setup, s)?.adjoint().apply(window))
}

/// Lattice phase points with `|(a, m)| <= radius` in lattice units.
pub fn phase_patch(grid: &Grid, radius: f64) -> Vec<PhasePoint> {
    let mut out = Vec::new();
    let xs: Vec<[i64; 2]> = grid.centered_indices().collect();
    let norm2 = |a: &[i64; 2]| (a[0] * a[0] + a[1] * a[1]) as f64;
    for a in &xs {
        for m in &xs {
            if norm2(a) + norm2(m) <= radius * radius + 1e-12 {
                out.push(PhasePoint::new(*a, *m));
            }
        }
    }
    out
}

/// Coherent states `pi^A(s)* window` over [`phase_patch`].
pub fn coherent_orbit(setup: &MagneticSetup, window: &CVector, radius: f64) -> Result<VectorFamily> {
    let members = phase_patch(setup.grid(), radius)
        .iter()
        .map(|s| coherent_state(setup, window, s))
        .collect::<Result<Vec<_>>>()?;
    VectorFamily::new(members)
}

/// `count` coherent states on the diagonal from the origin to the corner
/// `(N/2, .., N/2)` of the phase-space lattice, the last one at the corner.
pub fn escaping_translates(setup: &MagneticSetup, window: &CVector, count: usize) -> Result<VectorFamily> {
    if count == 0 {
        return Err(Error::EmptyFamily);
    }
    let g = setup.grid();
    let half = (g.size() / 2) as i64;
    let members = (1..=count)
        .map(|k| {
            let t = ((k as f64 / count as f64) * half as f64).round() as i64;
            let mut idx = [0i64; 2];
            for v in idx.iter_mut().take(g.n()) {
                *v = t;
            }
            coherent_state(setup, window, &PhasePoint::new(idx, idx))
        })
        .collect::<Result<Vec<_>>>()?;
    VectorFamily::new(members)
}

/// `e^{i xi_m . y} base` for each lattice frequency index along axis 0.
pub fn modulated(grid: &Grid, base: &CVector, frequencies: &[i64]) -> Result<VectorFamily> {
    let members = frequencies
        .iter()
        .map(|&m| {
            let xi = grid.frequency([m, 0]);
            CVector::from_fn(grid.len(), |k, _| base[k] * Complex64::from_polar(1.0, grid.dot(&xi, &grid.point(k))))
        })
        .collect();
    VectorFamily::new(members)
}

/// Smooth radial cutoff equal to 1 on `|z| <= r` and 0 on `|z| >= 2r`.
pub fn plateau(z: &Point, dim: usize, r: f64) -> f64 {
    let rho = (0..dim).map(|j| z[j] * z[j]).sum::<f64>().sqrt();
    let t = (rho - r) / r;
    let bump = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        bump(1.0 - t) / (bump(1.0 - t) + bump(t))
    }
}

/// Named plateau radii as fractions of the grid half-width.
pub const CUTOFF_FRACTIONS: [(&str, f64); 3] = [("plateau-1/4", 0.25), ("plateau-1/3", 1.0 / 3.0), ("plateau-1/2", 0.5)];

/// Grid samples of each registry plateau in position space.
pub fn spatial_cutoffs(grid: &Grid) -> Vec<(&'static str, CVector)> {
    let half = grid.size() as f64 * grid.h() / 2.0;
    CUTOFF_FRACTIONS
        .iter()
        .map(|&(name, f)| {
            (name, CVector::from_fn(grid.len(), |k, _| Complex64::new(plateau(&grid.point(k), grid.n(), f * half), 0.0)))
        })
        .collect()
}

/// `psi_hat` samples of each registry plateau on the dual lattice.
pub fn frequency_cutoffs(grid: &Grid) -> Vec<(&'static str, CVector)> {
    let half = grid.size() as f64 * grid.dxi() / 2.0;
    CUTOFF_FRACTIONS
        .iter()
        .map(|&(name, f)| {
            let n = grid.n();
            (name, crate::magweyl::psi_hat_from_symbol(grid, |xi| Complex64::new(plateau(xi, n, f * half), 0.0)))
        })
        .collect()
}

/// Orthonormal `e_1, .., e_count`: `e_1` is the window, the others come from
/// Gram–Schmidt on coherent states along the edges of the phase-space
/// lattice, starting at the corner.
pub fn counterexample_basis(setup: &MagneticSetup, window: &CVector, count: usize) -> Result<Vec<CVector>> {
    let g = setup.grid();
    if count > g.len() {
        return Err(Error::InvalidSpec(format!("{count} orthonormal vectors requested in dimension {}", g.len())));
    }
    let half = (g.size() / 2) as i64;
    let edge = |v: i64| {
        let mut idx = [0i64; 2];
        for c in idx.iter_mut().take(g.n()) {
            *c = v;
        }
        idx
    };
    let mut points = vec![PhasePoint::new(edge(half), edge(half))];
    let mut t = 1;
    while points.len() < g.len() && t < g.size() as i64 {
        points.push(PhasePoint::new(edge(half), edge(half - 2 * t)));
        points.push(PhasePoint::new(edge(half - 2 * t), edge(half)));
        t += 1;
    }
    let wn = window.norm();
    let mut basis = vec![window / Complex64::new(wn, 0.0)];
    let candidates = points
        .iter()
        .map(|s| coherent_state(setup, window, s))
        .chain((0..g.len()).map(|k| Ok(crate::linalg::basis_vector(g.len(), k))));
    for c in candidates {
        if basis.len() >= count {
            break;
        }
        let mut v = c?;
        for _ in 0..2 {
            for b in &basis {
                let p = b.dotc(&v);
                v -= b * p;
            }
        }
        let r = v.norm();
        if r > 1e-6 {
            basis.push(v / Complex64::new(r, 0.0));
        }
    }
    basis.truncate(count);
    Ok(basis)
}

/// `{<., e_j> e_1 : j <= J}`, collectively compact while its adjoint family
/// `{<., e_1> e_j}` is not.
pub fn operator_counterexample(basis: &[CVector], j_max: usize, includes_adjoints: bool) -> Result<OperatorFamily> {
    if j_max == 0 || j_max > basis.len() {
        return Err(Error::InvalidSpec(format!("J = {j_max} outside 1..={}", basis.len())));
    }
    let members = (0..j_max).map(|j| rank_one(&basis[0], &basis[j])).collect();
    OperatorFamily::new(members, includes_adjoints)
}

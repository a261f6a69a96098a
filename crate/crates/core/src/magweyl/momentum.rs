//! Position and magnetic momentum operators, their commutators and
//! functions of the momentum `psi(P^A)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_len, Result};
use crate::linalg::{CMatrix, CVector};
use crate::magweyl::fourier::fft_grid;
use crate::magweyl::setup::{Grid, MagneticSetup, Point};
use crate::magweyl::weyl::SegmentTable;

/// Zero every Fourier mode with `|m_j| > N/3` on some axis.
pub fn band_limit(grid: &Grid, u: &CVector) -> CVector {
    let mut buf: Vec<Complex64> = u.iter().copied().collect();
    fft_grid(grid, &mut buf, false);
    let cut = (grid.size() / 3) as i64;
    for (km, v) in buf.iter_mut().enumerate() {
        let m = grid.centered_multi(km);
        if (0..grid.n()).any(|j| m[j].abs() > cut) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fft_grid(grid, &mut buf, true);
    let scale = 1.0 / grid.len() as f64;
    CVector::from_iterator(buf.len(), buf.into_iter().map(|v| v * scale))
}

/// `-i d/dy_j` as the DFT multiplier `xi_{m,j}`; the Nyquist mode is set to
/// zero so the operator stays self-adjoint.
pub fn apply_momentum(grid: &Grid, j: usize, u: &CVector) -> CVector {
    let mut buf: Vec<Complex64> = u.iter().copied().collect();
    fft_grid(grid, &mut buf, false);
    let half = (grid.size() / 2) as i64;
    let even = grid.size().is_multiple_of(2);
    for (km, v) in buf.iter_mut().enumerate() {
        let m = grid.centered_multi(km)[j];
        let xi = if even && m == -half { 0.0 } else { m as f64 * grid.dxi() };
        *v *= xi;
    }
    fft_grid(grid, &mut buf, true);
    let scale = 1.0 / grid.len() as f64;
    CVector::from_iterator(buf.len(), buf.into_iter().map(|v| v * scale))
}

/// `phi(Q) u`.
pub fn apply_position_function(grid: &Grid, phi: impl Fn(&Point) -> Complex64, u: &CVector) -> CVector {
    CVector::from_iterator(u.len(), u.iter().enumerate().map(|(k, v)| phi(&grid.point(k)) * v))
}

/// `P^A_j u = P_j u - A_j(Q) u`.
pub fn apply_magnetic_momentum(setup: &MagneticSetup, j: usize, u: &CVector) -> CVector {
    let g = setup.grid();
    let mut out = apply_momentum(g, j, u);
    for (k, v) in out.iter_mut().enumerate() {
        *v -= setup.a_at(&g.point(k))[j] * u[k];
    }
    out
}

/// Dense matrix of `P^A_j`.
pub fn magnetic_momentum(setup: &MagneticSetup, j: usize) -> CMatrix {
    let len = setup.grid().len();
    let cols: Vec<CVector> = (0..len)
        .into_par_iter()
        .map(|c| apply_magnetic_momentum(setup, j, &crate::linalg::basis_vector(len, c)))
        .collect();
    CMatrix::from_columns(&cols)
}

/// `max_u ||(i [P^A_j, P^A_k] + B_jk(Q)) u|| / ||u||` over the band-limited
/// parts of the given states, with `B_jk = d_j A_k - d_k A_j`.
pub fn commutator_defect(setup: &MagneticSetup, j: usize, k: usize, states: &[CVector]) -> Result<f64> {
    let g = setup.grid();
    let mut worst = 0.0f64;
    for u in states {
        check_len("commutator test state", g.len(), u.len())?;
        let u = band_limit(g, u);
        let nu = u.norm();
        if nu == 0.0 {
            continue;
        }
        let pk = apply_magnetic_momentum(setup, k, &u);
        let pj = apply_magnetic_momentum(setup, j, &u);
        let comm = (apply_magnetic_momentum(setup, j, &pk) - apply_magnetic_momentum(setup, k, &pj))
            * Complex64::new(0.0, 1.0);
        let bu = apply_position_function(g, |z| Complex64::new(setup.b_at(z, j, k), 0.0), &u);
        worst = worst.max((comm + bu).norm() / nu);
    }
    Ok(worst)
}

/// `max_u ||(i [P^A_j, Q_k] - delta_jk) u|| / ||u||` over band-limited states.
pub fn position_commutator_defect(setup: &MagneticSetup, j: usize, k: usize, states: &[CVector]) -> Result<f64> {
    let g = setup.grid();
    let q = |z: &Point| Complex64::new(z[k], 0.0);
    let mut worst = 0.0f64;
    for u in states {
        check_len("commutator test state", g.len(), u.len())?;
        let u = band_limit(g, u);
        let nu = u.norm();
        if nu == 0.0 {
            continue;
        }
        let pq = apply_magnetic_momentum(setup, j, &apply_position_function(g, q, &u));
        let qp = apply_position_function(g, q, &apply_magnetic_momentum(setup, j, &u));
        let mut r = (pq - qp) * Complex64::new(0.0, 1.0);
        if j == k {
            r -= &u;
        }
        worst = worst.max(r.norm() / nu);
    }
    Ok(worst)
}

/// `psi_hat(x_a) = (2 pi)^{-n} dxi^n sum_m psi(xi_m) e^{-i x_a.xi_m}`,
/// indexed by displacement residue.
pub fn psi_hat_from_symbol(grid: &Grid, psi: impl Fn(&Point) -> Complex64) -> CVector {
    let len = grid.len();
    let vals: Vec<Complex64> = (0..len).map(|km| psi(&grid.frequency(grid.centered_multi(km)))).collect();
    let scale = (grid.dxi() / (2.0 * std::f64::consts::PI)).powi(grid.n() as i32);
    CVector::from_fn(len, |ka, _| {
        let x = grid.displacement(grid.centered_multi(ka));
        let acc: Complex64 = (0..len)
            .map(|km| vals[km] * Complex64::from_polar(1.0, -grid.dot(&x, &grid.frequency(grid.centered_multi(km)))))
            .sum();
        acc * scale
    })
}

/// `psi(P^A) = sum_a h^n psi_hat(x_a) U^A(x_a)`, `U^A(x) = pi^A(x, 0)`.
pub fn momentum_function(setup: &MagneticSetup, table: &SegmentTable, psi_hat: &CVector) -> Result<CMatrix> {
    let g = setup.grid();
    let len = g.len();
    check_len("momentum function samples", len, psi_hat.len())?;
    let cell = g.cell();
    let mut m = CMatrix::zeros(len, len);
    for ka in 0..len {
        let w = psi_hat[ka] * cell;
        if w == Complex64::new(0.0, 0.0) {
            continue;
        }
        let a = g.centered_multi(ka);
        for k in 0..len {
            let mk = g.multi(k);
            let col = g.flat_wrapped([mk[0] as i64 + a[0], mk[1] as i64 + a[1]]);
            m[(k, col)] += w * Complex64::from_polar(1.0, -table.get(k, ka));
        }
    }
    Ok(m)
}

/// `psi(P^A) u` without forming the matrix.
pub fn apply_momentum_function(
    setup: &MagneticSetup,
    table: &SegmentTable,
    psi_hat: &CVector,
    u: &CVector,
) -> Result<CVector> {
    let g = setup.grid();
    let len = g.len();
    check_len("momentum function samples", len, psi_hat.len())?;
    check_len("momentum function input", len, u.len())?;
    let cell = g.cell();
    let out: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map(|k| {
            let mk = g.multi(k);
            let mut acc = Complex64::new(0.0, 0.0);
            for ka in 0..len {
                let w = psi_hat[ka];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let a = g.centered_multi(ka);
                let col = g.flat_wrapped([mk[0] as i64 + a[0], mk[1] as i64 + a[1]]);
                acc += w * Complex64::from_polar(1.0, -table.get(k, ka)) * u[col];
            }
            acc * cell
        })
        .collect();
    Ok(CVector::from_vec(out))
}

/// Commutator defect on the normalized Gaussian of the given width, for a
/// sequence of symmetric grids of the same field.
pub fn commutator_refinement(
    field: &crate::magweyl::setup::FieldSpec,
    sizes: &[usize],
    width: f64,
) -> Result<Vec<(usize, f64)>> {
    sizes
        .iter()
        .map(|&n| {
            let s = MagneticSetup::from_field(Grid::symmetric(2, n)?, field)?;
            let g = s.grid();
            let v = CVector::from_fn(g.len(), |k, _| {
                let p = g.point(k);
                Complex64::new((-(p[0] * p[0] + p[1] * p[1]) / (2.0 * width * width)).exp(), 0.0)
            });
            let v = &v / Complex64::new(v.norm(), 0.0);
            Ok((n, commutator_defect(&s, 0, 1, &[v])?))
        })
        .collect()
}

/// `log(d_i / d_{i+1}) / log(N_{i+1} / N_i)` for consecutive pairs.
pub fn empirical_orders(study: &[(usize, f64)]) -> Vec<f64> {
    study
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 as f64 / w[0].0 as f64).ln())
        .collect()
}

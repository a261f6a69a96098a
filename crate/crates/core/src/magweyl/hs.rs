//! Expansion of Hilbert–Schmidt operators in the system
//! `F_ij = e_i(Q) psi_j(P^A)` with kernel `e^{-i int_{[x,y]} A} e_i(x) e_j(y - x)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::magweyl::momentum::momentum_function;
use crate::magweyl::setup::{Grid, MagneticSetup, Point};
use crate::magweyl::weyl::SegmentTable;

const ACCEPT: f64 = 1e-6;

/// Orthonormal Hermite function values `psi_k(t)` for `k < count`.
fn hermite_values(t: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-t * t / 2.0).exp();
    out.push(cur);
    for k in 0..count.saturating_sub(1) {
        let next = (2.0 / (k + 1) as f64).sqrt() * t * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Multi-degrees ordered by total degree, then by the first component.
fn degrees(n: usize, per_axis: usize) -> Vec<[usize; 2]> {
    if n == 1 {
        return (0..per_axis).map(|k| [k, 0]).collect();
    }
    let mut out = Vec::with_capacity(per_axis * per_axis);
    for total in 0..(2 * per_axis - 1) {
        for k0 in 0..=total {
            let k1 = total - k0;
            if k0 < per_axis && k1 < per_axis {
                out.push([k0, k1]);
            }
        }
    }
    out
}

/// First `m` vectors obtained by orthonormalizing the Hermite samples
/// `psi_k(at(i))`, completed by standard basis vectors where the samples
/// become linearly dependent.
fn orthonormal_hermite(grid: &Grid, m: usize, at: impl Fn(usize) -> Point) -> Result<CMatrix> {
    let len = grid.len();
    if m > len {
        return Err(Error::InvalidSpec(format!("basis size {m} exceeds grid size {len}")));
    }
    let n = grid.n();
    let values: Vec<Vec<f64>> = (0..len)
        .map(|i| {
            let p = at(i);
            let mut v = Vec::with_capacity(2);
            for j in 0..n {
                v.push(hermite_values(p[j], grid.size()));
            }
            v.into_iter().flatten().collect()
        })
        .collect();
    let size = grid.size();
    let hermite = degrees(n, size).into_iter().map(|d| {
        CVector::from_fn(len, |i, _| {
            let mut v = values[i][d[0]];
            if n == 2 {
                v *= values[i][size + d[1]];
            }
            Complex64::new(v, 0.0)
        })
    });
    let standard = (0..len).map(|k| crate::linalg::basis_vector(len, k));
    let mut basis: Vec<CVector> = Vec::with_capacity(m);
    for cand in hermite.chain(standard) {
        if basis.len() == m {
            break;
        }
        let scale = cand.norm();
        if scale == 0.0 {
            continue;
        }
        let mut v = cand / Complex64::new(scale, 0.0);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let r = v.norm();
        if r > ACCEPT {
            basis.push(v / Complex64::new(r, 0.0));
        }
    }
    Ok(CMatrix::from_columns(&basis))
}

/// Position factors `e_i`, sampled at the grid points.
pub fn position_basis(grid: &Grid, m: usize) -> Result<CMatrix> {
    orthonormal_hermite(grid, m, |k| grid.point(k))
}

/// Displacement factors `e_j`, sampled at `x_a` and indexed by residue.
pub fn displacement_basis(grid: &Grid, m: usize) -> Result<CMatrix> {
    orthonormal_hermite(grid, m, |ka| grid.displacement(grid.centered_multi(ka)))
}

/// `e(Q) psi(P^A)` with `psi_hat = f / h^n`, the matrix of `F` for the
/// factors `e`, `f`.
pub fn basis_operator(setup: &MagneticSetup, table: &SegmentTable, e: &CVector, f: &CVector) -> Result<CMatrix> {
    let g = setup.grid();
    let psi_hat = f / Complex64::new(g.cell(), 0.0);
    let mut m = momentum_function(setup, table, &psi_hat)?;
    for (r, &er) in e.iter().enumerate() {
        for c in 0..m.ncols() {
            m[(r, c)] *= er;
        }
    }
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct HsExpansion {
    /// `c_ij = <K, F_ij>_HS`, rows indexed by the position factor.
    pub coefficients: CMatrix,
    /// `||K - sum c_ij F_ij||_HS`.
    pub residual: f64,
    pub relative_residual: f64,
}

/// `D[r, a] = K[r, r + a] e^{i Gamma(r, a)}`, the kernel in `(x, y - x)`
/// coordinates with the circulation removed.
fn diagonal_form(grid: &Grid, table: &SegmentTable, k: &CMatrix) -> CMatrix {
    let len = grid.len();
    CMatrix::from_fn(len, len, |r, ka| {
        let a = grid.centered_multi(ka);
        let mr = grid.multi(r);
        let c = grid.flat_wrapped([mr[0] as i64 + a[0], mr[1] as i64 + a[1]]);
        k[(r, c)] * Complex64::from_polar(1.0, table.get(r, ka))
    })
}

pub fn hs_expand(setup: &MagneticSetup, table: &SegmentTable, k: &CMatrix, m: usize) -> Result<HsExpansion> {
    let g = setup.grid();
    let len = g.len();
    if k.nrows() != len || k.ncols() != len {
        return Err(Error::DimensionMismatch {
            context: "operator to expand",
            expected: len,
            found: k.nrows().max(k.ncols()),
        });
    }
    let e_pos = position_basis(g, m)?;
    let e_disp = displacement_basis(g, m)?;
    let d = diagonal_form(g, table, k);
    let coefficients = e_pos.adjoint() * &d * e_disp.map(|z| z.conj());
    // the reindexing K -> D is unitary for the HS norm
    let approx = &e_pos * &coefficients * e_disp.transpose();
    let residual = (d - approx).norm();
    let kn = k.norm();
    Ok(HsExpansion { coefficients, residual, relative_residual: if kn > 0.0 { residual / kn } else { 0.0 } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_matrix;
    use crate::magweyl::setup::FieldSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup_1d(n: usize) -> MagneticSetup {
        let a = vec![crate::magweyl::setup::Poly::term(0.3, &[2])];
        MagneticSetup::new(Grid::symmetric(1, n).unwrap(), a, 8, 8).unwrap()
    }

    #[test]
    fn hermite_samples_are_orthonormal() {
        let g = Grid::symmetric(2, 8).unwrap();
        let e = position_basis(&g, 64).unwrap();
        assert!((e.adjoint() * &e - CMatrix::identity(64, 64)).norm() < 1e-10);
        assert!(position_basis(&g, 65).is_err());
    }

    #[test]
    fn basis_element_has_unit_coefficient() {
        let s = setup_1d(16);
        let t = SegmentTable::new(&s);
        let g = s.grid();
        let e = position_basis(g, 4).unwrap();
        let f = displacement_basis(g, 4).unwrap();
        let k = basis_operator(&s, &t, &e.column(0).into(), &f.column(0).into()).unwrap();
        let x = hs_expand(&s, &t, &k, 4).unwrap();
        assert!((x.coefficients[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        let others: f64 = x.coefficients.iter().skip(1).map(|c| c.norm_sqr()).sum();
        assert!(others.sqrt() < 1e-10);
        assert!(x.residual < 1e-10);
    }

    #[test]
    fn full_basis_is_complete() {
        let s = MagneticSetup::from_field(Grid::symmetric(2, 6).unwrap(), &FieldSpec::SymmetricGauge { b: 0.7 }).unwrap();
        let t = SegmentTable::new(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = random_matrix(&mut rng, 36, 36);
        let x = hs_expand(&s, &t, &k, 36).unwrap();
        assert!(x.relative_residual < 1e-8, "{}", x.relative_residual);
        // rebuild through e_i(Q) psi_j(P^A)
        let e = position_basis(s.grid(), 36).unwrap();
        let f = displacement_basis(s.grid(), 36).unwrap();
        let mut sum = CMatrix::zeros(36, 36);
        for i in 0..36 {
            let fi: CVector = &f * x.coefficients.row(i).transpose();
            sum += basis_operator(&s, &t, &e.column(i).into(), &fi).unwrap();
        }
        assert!((sum - k).norm() < 1e-8);
    }

    #[test]
    fn smoothing_operator_residual_decays() {
        let s = setup_1d(64);
        let t = SegmentTable::new(&s);
        let g = s.grid();
        let k = CMatrix::from_fn(64, 64, |r, c| {
            let (x, y) = (g.point(r)[0], g.point(c)[0]);
            Complex64::new((-(x * x + y * y) / 2.0 - (x - y).powi(2)).exp() * g.h(), 0.0)
        });
        let res: Vec<f64> = [8, 16, 32].iter().map(|&m| hs_expand(&s, &t, &k, m).unwrap().residual).collect();
        assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
    }
}

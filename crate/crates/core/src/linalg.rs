//! Small dense helpers over `nalgebra` complex matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `<u, v> = sum_k u_k conj(v_k)`.
pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    v.dotc(u)
}

/// Hilbert–Schmidt inner product `Tr(S T*)`.
pub fn hs_inner(s: &CMatrix, t: &CMatrix) -> Complex64 {
    s.iter().zip(t.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Rank-one operator `w -> <w, v> u`.
pub fn rank_one(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Singular values sorted in decreasing order.
pub fn singular_values_desc(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Spectral norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values_desc(m).first().copied().unwrap_or(0.0)
}

/// Left singular vectors whose singular value exceeds `rel_tol * sigma_max`,
/// as orthonormal columns.
pub fn range_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let d = m.nrows();
    if m.ncols() == 0 {
        return CMatrix::zeros(d, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax > 0.0 && s > rel_tol * smax)
        .map(|(i, _)| i)
        .collect();
    let mut basis = CMatrix::zeros(d, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &u.column(i));
    }
    basis
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector {
    CVector::from_fn(d, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn basis_vector(d: usize, k: usize) -> CVector {
    let mut e = CVector::zeros(d);
    e[k] = ONE;
    e
}

/// Frobenius distance to the identity.
pub fn identity_defect(m: &CMatrix) -> f64 {
    let d = m.nrows();
    (m - CMatrix::identity(d, d)).norm()
}

//! Tight frames over a sampled index space: analysis and synthesis maps,
//! the Gramian projection, coorbit norms and weighted kernel algebras.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::sigma::{solid_norm, SampledSigma, SigmaFunction, SolidSpaceSpec};

/// Relative deviation from `c * I` accepted before calibration.
pub const ACCEPT_TOL: f64 = 1e-6;
/// Absolute Frobenius deviation from `I` expected after calibration.
pub const TIGHT_TOL: f64 = 1e-10;

/// Window family `w(s_j)`, stored as the columns of a `d x |Sigma|` matrix.
#[derive(Clone, Debug)]
pub struct Frame {
    sigma: SampledSigma,
    windows: CMatrix,
}

/// Outcome of [`Frame::calibrate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// Constant `c` with `sum_j mu_j w_j w_j* ≈ c I` before rescaling.
    pub constant: f64,
    /// `||S - c I||_F / ||c I||_F` before rescaling.
    pub relative_deviation: f64,
    /// `||S - I||_F` after rescaling the weights by `1 / c`.
    pub residual: f64,
}

impl Frame {
    pub fn new(sigma: SampledSigma, windows: CMatrix) -> Result<Self> {
        check_len("frame windows", sigma.len(), windows.ncols())?;
        if windows.nrows() == 0 {
            return Err(Error::InvalidSpec("frame of dimension zero".into()));
        }
        Ok(Self { sigma, windows })
    }

    pub fn dim(&self) -> usize {
        self.windows.nrows()
    }

    pub fn sigma(&self) -> &SampledSigma {
        &self.sigma
    }

    pub fn windows(&self) -> &CMatrix {
        &self.windows
    }

    pub fn window(&self, j: usize) -> CVector {
        self.windows.column(j).into_owned()
    }

    /// `S = sum_j mu_j w_j w_j*`.
    pub fn frame_operator(&self) -> CMatrix {
        let mut scaled = self.windows.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= Complex64::new(self.sigma.weights()[j].sqrt(), 0.0);
        }
        &scaled * scaled.adjoint()
    }

    /// Frobenius distance of the frame operator to the identity.
    pub fn tightness_residual(&self) -> f64 {
        crate::linalg::identity_defect(&self.frame_operator())
    }

    /// Rescale the weights so that the frame constant becomes one.
    pub fn calibrate(&self) -> Result<(Frame, Calibration)> {
        let s = self.frame_operator();
        let d = self.dim() as f64;
        let c = s.trace().re / d;
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::NotTight {
                deviation: f64::INFINITY,
            });
        }
        let ci = CMatrix::identity(self.dim(), self.dim()) * Complex64::new(c, 0.0);
        let relative_deviation = (&s - &ci).norm() / (c * d.sqrt());
        if relative_deviation > ACCEPT_TOL {
            return Err(Error::NotTight {
                deviation: relative_deviation,
            });
        }
        let frame = Frame {
            sigma: self.sigma.rescaled(1.0 / c)?,
            windows: self.windows.clone(),
        };
        let residual = frame.tightness_residual();
        Ok((
            frame,
            Calibration {
                constant: c,
                relative_deviation,
                residual,
            },
        ))
    }

    /// `[phi_W(u)](s_j) = <u, w(s_j)>`.
    pub fn analysis(&self, u: &CVector) -> Result<SigmaFunction> {
        check_len("analysis input", self.dim(), u.len())?;
        Ok(SigmaFunction::new(self.windows.ad_mul(u)))
    }

    /// `phi_W^dagger(f) = sum_j mu_j f_j w_j`.
    pub fn synthesis(&self, f: &SigmaFunction) -> Result<CVector> {
        f.aligned(&self.sigma)?;
        let weighted = CVector::from_iterator(
            f.len(),
            f.values()
                .iter()
                .zip(self.sigma.weights())
                .map(|(v, w)| v * *w),
        );
        Ok(&self.windows * weighted)
    }

    /// `P_W f = phi_W phi_W^dagger f`, without forming the kernel.
    pub fn project(&self, f: &SigmaFunction) -> Result<SigmaFunction> {
        self.analysis(&self.synthesis(f)?)
    }

    /// Dense Gramian kernel `p_W(s_i, s_j) = <w(s_j), w(s_i)>`.
    pub fn gramian(&self) -> Gramian {
        Gramian {
            kernel: self.windows.ad_mul(&self.windows),
            sigma: self.sigma.clone(),
        }
    }

    /// `||phi_W(u)||_M`.
    pub fn coorbit_norm(&self, u: &CVector, spec: &SolidSpaceSpec) -> Result<f64> {
        solid_norm(&self.analysis(u)?, spec, &self.sigma)
    }

    pub fn coorbit_element(&self, u: CVector, spec: &SolidSpaceSpec) -> Result<CoorbitElement> {
        let coorbit_norm = self.coorbit_norm(&u, spec)?;
        Ok(CoorbitElement {
            vector: u,
            coorbit_norm,
        })
    }

    /// `sum_j mu_j a(s_j) |[phi_W(v)](s_j)|`.
    pub fn test_space_norm(&self, v: &CVector, weight: &AdmissibleWeight) -> Result<f64> {
        check_len("admissible weight", self.sigma.len(), weight.len())?;
        let a = weight.base_vector();
        let coeffs = self.analysis(v)?;
        Ok(coeffs
            .values()
            .iter()
            .zip(self.sigma.weights())
            .zip(&a)
            .map(|((c, m), aj)| m * aj * c.norm())
            .sum())
    }

    /// `||p_W||_{A_alpha}` computed row by row, so the kernel is never stored.
    pub fn gramian_algebra_norm(&self, weight: &AdmissibleWeight) -> Result<f64> {
        let n = self.sigma.len();
        check_len("admissible weight", n, weight.len())?;
        let mu = self.sigma.weights();
        // p_W is Hermitian and alpha symmetric, so row and column masses agree.
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let wi = self.windows.column(i);
                let row = self.windows.ad_mul(&wi);
                (0..n)
                    .map(|j| mu[j] * weight.value(j, i) * row[j].norm())
                    .sum()
            })
            .collect();
        Ok(rows.into_iter().fold(0.0, f64::max))
    }
}

#[derive(Clone, Debug)]
pub struct Gramian {
    kernel: CMatrix,
    sigma: SampledSigma,
}

impl Gramian {
    pub fn kernel(&self) -> &CMatrix {
        &self.kernel
    }

    pub fn sigma(&self) -> &SampledSigma {
        &self.sigma
    }

    /// `(P_W f)_i = sum_j mu_j p_W(s_i, s_j) f_j`.
    pub fn apply(&self, f: &SigmaFunction) -> Result<SigmaFunction> {
        f.aligned(&self.sigma)?;
        let weighted = CVector::from_iterator(
            f.len(),
            f.values()
                .iter()
                .zip(self.sigma.weights())
                .map(|(v, w)| v * *w),
        );
        Ok(SigmaFunction::new(&self.kernel * weighted))
    }

    /// Trace of the weighted operator, i.e. the rank of the projection.
    pub fn trace(&self) -> f64 {
        self.kernel
            .diagonal()
            .iter()
            .zip(self.sigma.weights())
            .map(|(k, w)| k.re * w)
            .sum()
    }

    /// Maximal deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        (&self.kernel - self.kernel.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
enum Alpha {
    Unit(usize),
    Dense(DMatrix<f64>),
}

/// Weight `alpha: Sigma x Sigma -> [1, inf)` together with the base point
/// used for the one-variable weight `a(s) = alpha(s, r)`.
#[derive(Clone, Debug)]
pub struct AdmissibleWeight {
    alpha: Alpha,
    base_point: usize,
    diagonal_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    /// All triples were checked (otherwise random sampling was used).
    pub exhaustive: bool,
    pub triples_checked: u64,
    /// Largest `alpha(s,t) / (alpha(s,r) alpha(r,t)) - 1` seen, clipped at 0.
    pub max_violation: f64,
}

/// Exhaustive triple checks are used up to this many points.
pub const EXHAUSTIVE_LIMIT: usize = 256;
const SAMPLED_TRIPLES: u64 = 100_000;

impl AdmissibleWeight {
    /// `alpha ≡ 1` on `n` points.
    pub fn unit(n: usize, base_point: usize) -> Result<Self> {
        if base_point >= n {
            return Err(Error::InvalidIndex {
                index: base_point,
                len: n,
            });
        }
        Ok(Self {
            alpha: Alpha::Unit(n),
            base_point,
            diagonal_bound: 1.0,
        })
    }

    /// Validates `alpha >= 1` and symmetry; submultiplicativity is checked
    /// separately by [`AdmissibleWeight::check_submultiplicative`].
    pub fn from_matrix(alpha: DMatrix<f64>, base_point: usize) -> Result<Self> {
        let n = alpha.nrows();
        check_len("admissible weight columns", n, alpha.ncols())?;
        if base_point >= n {
            return Err(Error::InvalidIndex {
                index: base_point,
                len: n,
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = alpha[(i, j)];
                if !(v.is_finite() && v >= 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "alpha({i},{j}) = {v} is below one"
                    )));
                }
                if (v - alpha[(j, i)]).abs() > 1e-12 * v {
                    return Err(Error::InvalidSpec(format!("alpha not symmetric at ({i},{j})")));
                }
            }
        }
        let diagonal_bound = alpha.diagonal().iter().cloned().fold(1.0, f64::max);
        Ok(Self {
            alpha: Alpha::Dense(alpha),
            base_point,
            diagonal_bound,
        })
    }

    /// Polynomial weight `alpha(s,t) = (1 + |s - t|)^beta`, `beta >= 0`.
    pub fn polynomial(sigma: &SampledSigma, beta: f64, base_point: usize) -> Result<Self> {
        if beta < 0.0 {
            return Err(Error::InvalidSpec("polynomial weight exponent must be nonnegative".into()));
        }
        let n = sigma.len();
        let alpha = DMatrix::from_fn(n, n, |i, j| (1.0 + sigma.distance(i, j)).powf(beta));
        Self::from_matrix(alpha, base_point)
    }

    pub fn len(&self) -> usize {
        match &self.alpha {
            Alpha::Unit(n) => *n,
            Alpha::Dense(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        match &self.alpha {
            Alpha::Unit(_) => 1.0,
            Alpha::Dense(m) => m[(i, j)],
        }
    }

    pub fn base_point(&self) -> usize {
        self.base_point
    }

    pub fn diagonal_bound(&self) -> f64 {
        self.diagonal_bound
    }

    /// `a(s_j) = alpha(s_j, r)`.
    pub fn base_vector(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.value(j, self.base_point)).collect()
    }

    /// Checks `alpha(s,t) <= alpha(s,r) alpha(r,t)`: every triple when the
    /// set has at most [`EXHAUSTIVE_LIMIT`] points, otherwise `10^5` seeded
    /// random triples.
    pub fn check_submultiplicative(&self, seed: u64) -> AdmissibilityReport {
        let n = self.len();
        let ratio = |s: usize, r: usize, t: usize| {
            (self.value(s, t) / (self.value(s, r) * self.value(r, t)) - 1.0).max(0.0)
        };
        if n <= EXHAUSTIVE_LIMIT {
            let max_violation = (0..n)
                .into_par_iter()
                .map(|s| {
                    let mut m = 0.0f64;
                    for r in 0..n {
                        for t in 0..n {
                            m = m.max(ratio(s, r, t));
                        }
                    }
                    m
                })
                .reduce(|| 0.0, f64::max);
            AdmissibilityReport {
                exhaustive: true,
                triples_checked: (n as u64).pow(3),
                max_violation,
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut max_violation = 0.0f64;
            for _ in 0..SAMPLED_TRIPLES {
                let (s, r, t) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                max_violation = max_violation.max(ratio(s, r, t));
            }
            AdmissibilityReport {
                exhaustive: false,
                triples_checked: SAMPLED_TRIPLES,
                max_violation,
            }
        }
    }
}

/// `max(max_i sum_j mu_j |alpha_ij K_ij|, max_j sum_i mu_i |alpha_ij K_ij|)`.
pub fn kernel_algebra_norm(
    kernel: &CMatrix,
    weight: &AdmissibleWeight,
    sigma: &SampledSigma,
) -> Result<f64> {
    let n = sigma.len();
    check_len("kernel rows", n, kernel.nrows())?;
    check_len("kernel columns", n, kernel.ncols())?;
    check_len("admissible weight", n, weight.len())?;
    let mu = sigma.weights();
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            let x = weight.value(i, j) * kernel[(i, j)].norm();
            rows[i] += mu[j] * x;
            cols[j] += mu[i] * x;
        }
    }
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    Ok(max(&rows).max(max(&cols)))
}

/// `(K ∘ K')_ij = sum_k mu_k K_ik K'_kj`.
pub fn kernel_compose(a: &CMatrix, b: &CMatrix, sigma: &SampledSigma) -> Result<CMatrix> {
    check_len("kernel composition", sigma.len(), a.ncols())?;
    check_len("kernel composition", sigma.len(), b.nrows())?;
    let mut scaled = b.clone();
    for (k, mut row) in scaled.row_iter_mut().enumerate() {
        row *= Complex64::new(sigma.weights()[k], 0.0);
    }
    Ok(a * scaled)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoorbitElement {
    pub vector: CVector,
    pub coorbit_norm: f64,
}

/// Frame from the first `m` columns of a Haar-random unitary, rescaled so
/// that it is tight with uniform weights; used for tests and controls.
pub fn random_tight_frame<R: Rng + ?Sized>(rng: &mut R, d: usize, m: usize) -> Result<Frame> {
    if m < d {
        return Err(Error::InvalidSpec("a tight frame needs at least d vectors".into()));
    }
    let q = crate::linalg::random_matrix(rng, m, m).qr().q();
    // rows of an m x m unitary restricted to d rows give a Parseval frame
    let windows = q.rows(0, d).into_owned();
    let pts: Vec<Vec<f64>> = (0..m).map(|j| vec![j as f64]).collect();
    let sigma = SampledSigma::with_uniform_balls(pts, vec![1.0; m], &[0.0], 4)?;
    Frame::new(sigma, windows)
}

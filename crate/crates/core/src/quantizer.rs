//! Square integrable operator families `s -> pi(s)`, the coefficient
//! transform and the quantization map `Pi(f) = sum_j mu_j f_j pi(s_j)*`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::frame::Frame;
use crate::linalg::{singular_values_desc, CMatrix, CVector, ZERO};
use crate::sigma::{SampledSigma, SigmaFunction};

/// A square operator, either dense or of the form `(M u)_k = phase_k u_{perm_k}`.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyOp {
    Dense(CMatrix),
    Monomial {
        perm: Vec<usize>,
        phase: Vec<Complex64>,
    },
}

impl FamilyOp {
    pub fn identity(d: usize) -> Self {
        FamilyOp::Monomial {
            perm: (0..d).collect(),
            phase: vec![Complex64::new(1.0, 0.0); d],
        }
    }

    pub fn monomial(perm: Vec<usize>, phase: Vec<Complex64>) -> Result<Self> {
        check_len("monomial phases", perm.len(), phase.len())?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidSpec("monomial index map is not a permutation".into()));
            }
            seen[p] = true;
        }
        Ok(FamilyOp::Monomial { perm, phase })
    }

    pub fn dim(&self) -> usize {
        match self {
            FamilyOp::Dense(m) => m.nrows(),
            FamilyOp::Monomial { perm, .. } => perm.len(),
        }
    }

    pub fn apply(&self, u: &CVector) -> CVector {
        match self {
            FamilyOp::Dense(m) => m * u,
            FamilyOp::Monomial { perm, phase } => {
                CVector::from_iterator(perm.len(), perm.iter().zip(phase).map(|(&p, c)| c * u[p]))
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            FamilyOp::Dense(m) => FamilyOp::Dense(m.adjoint()),
            FamilyOp::Monomial { perm, phase } => {
                let d = perm.len();
                let mut inv = vec![0; d];
                let mut ph = vec![ZERO; d];
                for k in 0..d {
                    inv[perm[k]] = k;
                    ph[perm[k]] = phase[k].conj();
                }
                FamilyOp::Monomial { perm: inv, phase: ph }
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            FamilyOp::Dense(m) => m.clone(),
            FamilyOp::Monomial { perm, phase } => {
                let d = perm.len();
                let mut m = CMatrix::zeros(d, d);
                for k in 0..d {
                    m[(k, perm[k])] = phase[k];
                }
                m
            }
        }
    }

    /// `target += c * self`.
    pub fn add_scaled_into(&self, c: Complex64, target: &mut CMatrix) {
        match self {
            FamilyOp::Dense(m) => *target += m * c,
            FamilyOp::Monomial { perm, phase } => {
                for k in 0..perm.len() {
                    target[(k, perm[k])] += c * phase[k];
                }
            }
        }
    }

    /// `<T, self>_HS = Tr(T self*)`.
    pub fn hs_pair(&self, t: &CMatrix) -> Complex64 {
        match self {
            FamilyOp::Dense(m) => crate::linalg::hs_inner(t, m),
            FamilyOp::Monomial { perm, phase } => perm
                .iter()
                .zip(phase)
                .enumerate()
                .map(|(k, (&p, c))| t[(k, p)] * c.conj())
                .sum(),
        }
    }
}

/// Operators `pi(s_j)*` indexed by a sampled index space. Adjoints are
/// stored because every formula consumes them.
#[derive(Clone, Debug)]
pub struct PiFamily {
    sigma: SampledSigma,
    ops: Vec<FamilyOp>,
    identity_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurjectivityReport {
    /// `max_i |1 - sigma_i|` over the `d^2` singular values of the weighted
    /// coefficient matrix; zero iff `Pi` is a co-isometry onto HS.
    pub defect: f64,
    /// Number of singular values above `1e-12`.
    pub rank: usize,
    pub hs_dim: usize,
    pub sigma_len: usize,
}

impl PiFamily {
    pub fn new(sigma: SampledSigma, ops: Vec<FamilyOp>, identity_index: Option<usize>) -> Result<Self> {
        check_len("family operators", sigma.len(), ops.len())?;
        let d = ops.first().map(FamilyOp::dim).ok_or(Error::EmptyFamily)?;
        for op in &ops {
            check_len("family operator size", d, op.dim())?;
            if let FamilyOp::Dense(m) = op {
                check_len("dense family operator columns", d, m.ncols())?;
            }
        }
        if let Some(i) = identity_index {
            let op = ops.get(i).ok_or(Error::InvalidIndex { index: i, len: ops.len() })?;
            let dev = (op.to_dense() - CMatrix::identity(d, d)).norm();
            if dev > 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "identity_index {i} does not carry the identity (deviation {dev:.3e})"
                )));
            }
        }
        Ok(Self {
            sigma,
            ops,
            identity_index,
        })
    }

    pub fn sigma(&self) -> &SampledSigma {
        &self.sigma
    }

    pub fn ops(&self) -> &[FamilyOp] {
        &self.ops
    }

    /// `pi(s_j)*`.
    pub fn op_adjoint(&self, j: usize) -> &FamilyOp {
        &self.ops[j]
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn identity_index(&self) -> Option<usize> {
        self.identity_index
    }

    /// Same operators with weights multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Ok(Self {
            sigma: self.sigma.rescaled(factor)?,
            ops: self.ops.clone(),
            identity_index: self.identity_index,
        })
    }

    /// Frame `w(s) = pi(s)* w`.
    pub fn frame(&self, window: &CVector) -> Result<Frame> {
        check_len("window", self.dim(), window.len())?;
        let mut windows = CMatrix::zeros(self.dim(), self.len());
        for (j, op) in self.ops.iter().enumerate() {
            windows.set_column(j, &op.apply(window));
        }
        Frame::new(self.sigma.clone(), windows)
    }

    /// `[phi^pi(u, v)](s_j) = <pi(s_j) u, v> = <u, pi(s_j)* v>`.
    pub fn coefficient_transform(&self, u: &CVector, v: &CVector) -> Result<SigmaFunction> {
        check_len("coefficient transform u", self.dim(), u.len())?;
        check_len("coefficient transform v", self.dim(), v.len())?;
        let vals: Vec<Complex64> = self
            .ops
            .par_iter()
            .map(|op| op.apply(v).dotc(u))
            .collect();
        Ok(SigmaFunction::from_vec(vals))
    }

    /// `[Phi^pi(T)](s_j) = <T, pi(s_j)*>_HS`, the extension of the
    /// coefficient transform to Hilbert–Schmidt operators.
    pub fn operator_coefficients(&self, t: &CMatrix) -> Result<SigmaFunction> {
        check_len("operator rows", self.dim(), t.nrows())?;
        check_len("operator columns", self.dim(), t.ncols())?;
        Ok(SigmaFunction::from_vec(
            self.ops.par_iter().map(|op| op.hs_pair(t)).collect(),
        ))
    }

    /// `Pi(f) = sum_j mu_j f_j pi(s_j)*`, summed in fixed index order.
    pub fn quantize(&self, f: &SigmaFunction) -> Result<CMatrix> {
        f.aligned(&self.sigma)?;
        let d = self.dim();
        let mu = self.sigma.weights();
        let chunk = 256;
        let partials: Vec<CMatrix> = (0..self.len())
            .collect::<Vec<_>>()
            .par_chunks(chunk)
            .map(|idx| {
                let mut acc = CMatrix::zeros(d, d);
                for &j in idx {
                    let c = f.values()[j] * mu[j];
                    if c != ZERO {
                        self.ops[j].add_scaled_into(c, &mut acc);
                    }
                }
                acc
            })
            .collect();
        let mut total = CMatrix::zeros(d, d);
        for p in partials {
            total += p;
        }
        Ok(total)
    }

    /// `Pi(f) u` without forming the matrix.
    pub fn apply_quantized(&self, f: &SigmaFunction, u: &CVector) -> Result<CVector> {
        f.aligned(&self.sigma)?;
        check_len("quantized operator input", self.dim(), u.len())?;
        let mu = self.sigma.weights();
        let mut out = CVector::zeros(self.dim());
        for (j, op) in self.ops.iter().enumerate() {
            let c = f.values()[j] * mu[j];
            if c != ZERO {
                out += op.apply(u) * c;
            }
        }
        Ok(out)
    }

    /// `| sum_j mu_j |phi^pi(u,v)_j|^2 - ||u||^2 ||v||^2 |`.
    pub fn square_integrability_defect(&self, u: &CVector, v: &CVector) -> Result<f64> {
        let c = self.coefficient_transform(u, v)?;
        let n = c.norm_l2(&self.sigma)?;
        Ok((n * n - u.norm_squared() * v.norm_squared()).abs())
    }

    /// Singular values of the coefficient transform restricted to matrix
    /// units, measured in `L^2(Sigma, mu)`.
    pub fn surjectivity(&self) -> Result<SurjectivityReport> {
        let d = self.dim();
        let hs_dim = d * d;
        if self.len() < hs_dim {
            return Err(Error::Structural(format!(
                "{} index points cannot carry {}-dimensional Hilbert-Schmidt space",
                self.len(),
                hs_dim
            )));
        }
        let mu = self.sigma.weights();
        let mut m = CMatrix::zeros(self.len(), hs_dim);
        for (j, op) in self.ops.iter().enumerate() {
            let dense = op.to_dense();
            let w = mu[j].sqrt();
            // phi(e_a, e_b)(s_j) = conj((pi_j*)_{ab})
            for b in 0..d {
                for a in 0..d {
                    m[(j, a + d * b)] = dense[(a, b)].conj() * w;
                }
            }
        }
        let sv = singular_values_desc(&m);
        let defect = sv.iter().map(|s| (1.0 - s).abs()).fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > 1e-12).count();
        Ok(SurjectivityReport {
            defect,
            rank,
            hs_dim,
            sigma_len: self.len(),
        })
    }

    pub fn surjectivity_defect(&self) -> Result<f64> {
        Ok(self.surjectivity()?.defect)
    }

    /// `max ||(pi(s_i)* - pi(s_j)*) u|| / ||u||` over index pairs at distance
    /// at most `radius` and the supplied probes.
    pub fn strong_continuity_modulus(&self, radius: f64, probes: &[CVector]) -> Result<f64> {
        for p in probes {
            check_len("continuity probe", self.dim(), p.len())?;
        }
        let pairs = self.sigma.neighbor_pairs(radius);
        let images: Vec<Vec<CVector>> = probes
            .iter()
            .map(|u| {
                let nu = u.norm();
                self.ops
                    .par_iter()
                    .map(|op| if nu > 0.0 { op.apply(u) / Complex64::new(nu, 0.0) } else { op.apply(u) })
                    .collect()
            })
            .collect();
        Ok(pairs
            .par_iter()
            .map(|&(i, j)| {
                images
                    .iter()
                    .map(|im| (&im[i] - &im[j]).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max))
    }
}

/// `lambda_{u,v}(w) = <w, v> u`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOne {
    pub u: CVector,
    pub v: CVector,
}

impl RankOne {
    pub fn new(u: CVector, v: CVector) -> Self {
        Self { u, v }
    }

    pub fn apply(&self, w: &CVector) -> CVector {
        &self.u * self.v.dotc(w)
    }

    pub fn to_matrix(&self) -> CMatrix {
        crate::linalg::rank_one(&self.u, &self.v)
    }

    pub fn hs_norm(&self) -> f64 {
        self.u.norm() * self.v.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hs_inner, random_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Discrete Heisenberg family on `C^d`: `pi(a,m)* = M^m T^a` with cyclic
    /// shift `T` and modulation `M`, uniform weight `1/d`.
    fn clock_shift(d: usize) -> PiFamily {
        let mut pts = Vec::new();
        let mut ops = Vec::new();
        for a in 0..d {
            for m in 0..d {
                pts.push(vec![a as f64, m as f64]);
                let perm: Vec<usize> = (0..d).map(|k| (k + a) % d).collect();
                let phase: Vec<Complex64> = (0..d)
                    .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (m * k) as f64 / d as f64))
                    .collect();
                ops.push(FamilyOp::monomial(perm, phase).unwrap());
            }
        }
        let n = d * d;
        let sigma = SampledSigma::with_uniform_balls(pts, vec![1.0 / d as f64; n], &[0.0, 0.0], 3).unwrap();
        PiFamily::new(sigma, ops, Some(0)).unwrap()
    }

    #[test]
    fn monomial_adjoint_matches_dense() {
        let op = FamilyOp::monomial(vec![2, 0, 1], vec![Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.6, 0.8)]).unwrap();
        assert!((op.adjoint().to_dense() - op.to_dense().adjoint()).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = random_vector(&mut rng, 3);
        assert!((op.apply(&u) - op.to_dense() * &u).norm() < 1e-14);
        let t = crate::linalg::random_matrix(&mut rng, 3, 3);
        assert!((op.hs_pair(&t) - hs_inner(&t, &op.to_dense())).norm() < 1e-13);
        assert!(FamilyOp::monomial(vec![0, 0], vec![ZERO; 2]).is_err());
    }

    #[test]
    fn coefficient_transform_cases() {
        let pi = clock_shift(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_vector(&mut rng, 4);
        assert_eq!(pi.coefficient_transform(&CVector::zeros(4), &w).unwrap(), SigmaFunction::zeros(16));
        for _ in 0..20 {
            let u = random_vector(&mut rng, 4);
            let v = random_vector(&mut rng, 4);
            assert!(pi.square_integrability_defect(&u, &v).unwrap() < 1e-8 * u.norm_squared() * v.norm_squared());
        }
        let u = random_vector(&mut rng, 4);
        let frame = pi.frame(&w).unwrap();
        let a = frame.analysis(&u).unwrap();
        let c = pi.coefficient_transform(&u, &w).unwrap();
        assert!((a.values() - c.values()).norm() < 1e-13);
    }

    #[test]
    fn quantization_of_coefficients_is_rank_one() {
        let pi = clock_shift(5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(pi.quantize(&SigmaFunction::zeros(25)).unwrap(), CMatrix::zeros(5, 5));
        for _ in 0..100 {
            let u = random_vector(&mut rng, 5);
            let v = random_vector(&mut rng, 5);
            let q = pi.quantize(&pi.coefficient_transform(&u, &v).unwrap()).unwrap();
            let r = RankOne::new(u.clone(), v.clone());
            assert!((q - r.to_matrix()).norm() <= 1e-8 * r.hs_norm());
        }
    }

    #[test]
    fn delta_mass_quantizes_to_single_operator() {
        let pi = clock_shift(3);
        for j in [0, 4, 7] {
            let mut f = SigmaFunction::zeros(9);
            let mut vals = f.values().clone();
            vals[j] = Complex64::new(1.0 / pi.sigma().weights()[j], 0.0);
            f = SigmaFunction::new(vals);
            let q = pi.quantize(&f).unwrap();
            assert!((q - pi.op_adjoint(j).to_dense()).norm() < 1e-14);
        }
    }

    #[test]
    fn parseval_on_range() {
        let pi = clock_shift(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let f = pi.coefficient_transform(&random_vector(&mut rng, 4), &random_vector(&mut rng, 4)).unwrap();
            let g = pi.coefficient_transform(&random_vector(&mut rng, 4), &random_vector(&mut rng, 4)).unwrap();
            let lhs = hs_inner(&pi.quantize(&f).unwrap(), &pi.quantize(&g).unwrap());
            let rhs = f.inner_l2(&g, pi.sigma()).unwrap();
            assert!((lhs - rhs).norm() < 1e-8 * (1.0 + rhs.norm()));
            let qf = pi.quantize(&f).unwrap();
            assert!((qf.norm() - f.norm_l2(pi.sigma()).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn operator_coefficients_extend_rank_one_case() {
        let pi = clock_shift(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_vector(&mut rng, 3);
        let v = random_vector(&mut rng, 3);
        let via_op = pi.operator_coefficients(&RankOne::new(u.clone(), v.clone()).to_matrix()).unwrap();
        let direct = pi.coefficient_transform(&u, &v).unwrap();
        assert!((via_op.values() - direct.values()).norm() < 1e-13);
    }

    #[test]
    fn surjectivity_cases() {
        assert!(clock_shift(4).surjectivity_defect().unwrap() < 1e-10);
        // scalar family
        let sigma = SampledSigma::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5], vec![vec![0], vec![0, 1]]).unwrap();
        let ph = Complex64::from_polar(1.0, 0.3);
        let pi = PiFamily::new(
            sigma,
            vec![FamilyOp::identity(1), FamilyOp::monomial(vec![0], vec![ph]).unwrap()],
            Some(0),
        )
        .unwrap();
        assert!(pi.surjectivity_defect().unwrap() < 1e-14);
        // all operators equal to the identity
        let d = 3;
        let pts: Vec<Vec<f64>> = (0..9).map(|j| vec![j as f64]).collect();
        let sigma = SampledSigma::with_uniform_balls(pts, vec![1.0 / 9.0; 9], &[0.0], 2).unwrap();
        let pi = PiFamily::new(sigma, vec![FamilyOp::identity(d); 9], None).unwrap();
        let rep = pi.surjectivity().unwrap();
        assert_eq!(rep.rank, 1);
        assert!(rep.defect > 0.9);
        // too few points
        let sigma = SampledSigma::new(vec![vec![0.0]], vec![1.0], vec![vec![0]]).unwrap();
        let pi = PiFamily::new(sigma, vec![FamilyOp::identity(2)], Some(0)).unwrap();
        assert!(matches!(pi.surjectivity_defect(), Err(Error::Structural(_))));
    }

    #[test]
    fn identity_index_validated() {
        let sigma = SampledSigma::new(vec![vec![0.0]], vec![1.0], vec![vec![0]]).unwrap();
        let op = FamilyOp::monomial(vec![1, 0], vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        assert!(PiFamily::new(sigma, vec![op], Some(0)).is_err());
    }

    #[test]
    fn apply_quantized_matches_dense_and_continuity_is_bounded() {
        let pi = clock_shift(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = SigmaFunction::new(random_vector(&mut rng, 16));
        let u = random_vector(&mut rng, 4);
        let dense = pi.quantize(&f).unwrap() * &u;
        assert!((pi.apply_quantized(&f, &u).unwrap() - dense).norm() < 1e-12);
        let m = pi.strong_continuity_modulus(1.0, &[u.clone()]).unwrap();
        assert!(m > 0.0 && m <= 2.0 + 1e-12);
        assert_eq!(pi.strong_continuity_modulus(0.5, &[u]).unwrap(), 0.0);
    }
}

//! Compactness diagnostics: tightness profiles in coefficient space,
//! quantization and translation criteria, operator-family tightness and
//! brute-force compactness proxies.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::frame::Frame;
use crate::linalg::{op_norm, range_basis, singular_values_desc, CMatrix, CVector};
use crate::magweyl::momentum::apply_momentum_function;
use crate::magweyl::setup::{MagneticSetup, Point};
use crate::magweyl::weyl::{weyl_system, PhasePoint, SegmentTable};
use crate::quantizer::PiFamily;
use crate::sigma::{solid_norm, restrict_to_complement, SigmaFunction, SolidSpaceSpec};

/// A finite sample of a bounded subset of the state space.
#[derive(Clone, Debug)]
pub struct VectorFamily {
    members: Vec<CVector>,
    max_norm: f64,
}

impl VectorFamily {
    pub fn new(members: Vec<CVector>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        let d = first.len();
        for m in &members {
            check_len("family member", d, m.len())?;
        }
        let max_norm = members.iter().map(|m| m.norm()).fold(0.0, f64::max);
        Ok(Self { members, max_norm })
    }

    pub fn zero(d: usize) -> Self {
        Self { members: vec![CVector::zeros(d)], max_norm: 0.0 }
    }

    pub fn members(&self) -> &[CVector] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    /// Members as columns.
    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.members)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        check_len("family dimension", d, self.dim())
    }
}

/// `T_k = sup ||chi_{L_k^c} phi(u)||` along the exhaustion.
#[derive(Clone, Debug, PartialEq)]
pub struct TightnessProfile {
    pub level_sizes: Vec<usize>,
    pub values: Vec<f64>,
}

impl TightnessProfile {
    /// Value at the largest proper level, or the first value when the
    /// exhaustion has a single level.
    pub fn final_nontrivial(&self) -> f64 {
        let k = self.values.len();
        if k >= 2 {
            self.values[k - 2]
        } else {
            self.values[0]
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15)
    }
}

pub fn tightness_profile(omega: &VectorFamily, frame: &Frame, spec: &SolidSpaceSpec) -> Result<TightnessProfile> {
    omega.check_dim(frame.dim())?;
    let sigma = frame.sigma();
    let per_member: Vec<Vec<f64>> = omega
        .members()
        .par_iter()
        .map(|u| {
            let c = frame.analysis(u)?;
            sigma
                .exhaustion()
                .iter()
                .map(|level| solid_norm(&restrict_to_complement(&c, level)?, spec, sigma))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut profile = TightnessProfile {
        level_sizes: sigma.exhaustion().iter().map(Vec::len).collect(),
        values: vec![0.0; sigma.level_count()],
    };
    for tails in per_member {
        for (v, t) in profile.values.iter_mut().zip(tails) {
            *v = v.max(t);
        }
    }
    Ok(profile)
}

/// `sup_u ||Pi(chi_L Phi(P)) u - u||` with `P` the orthogonal projector onto
/// the span of the family.
pub fn pi_cc_tightness(omega: &VectorFamily, pi: &PiFamily, level: usize) -> Result<f64> {
    omega.check_dim(pi.dim())?;
    let sigma = pi.sigma();
    let l = sigma.level(level)?;
    let q = range_basis(&omega.as_matrix(), 1e-12);
    if q.ncols() == 0 {
        return Ok(0.0);
    }
    let p = &q * q.adjoint();
    let f = pi.operator_coefficients(&p)?;
    let mut mask = vec![false; sigma.len()];
    for &i in l {
        mask[i] = true;
    }
    let values = CVector::from_iterator(
        f.len(),
        f.values().iter().zip(&mask).map(|(v, &keep)| if keep { *v } else { Complex64::new(0.0, 0.0) }),
    );
    let t = pi.quantize(&SigmaFunction::new(values))?;
    Ok(omega
        .members()
        .iter()
        .map(|u| (&t * u - u).norm())
        .fold(0.0, f64::max))
}

fn within(dist: f64, r: f64) -> bool {
    dist <= r * (1.0 + 1e-12) + 1e-12
}

/// Per-point displacement `sup_u ||pi(s_j)* u - pi(s0)* u||` and distance to `s0`.
fn displacement_table(omega: &VectorFamily, pi: &PiFamily, s0: usize, max_radius: f64) -> Result<Vec<(f64, f64)>> {
    omega.check_dim(pi.dim())?;
    let sigma = pi.sigma();
    if s0 >= sigma.len() {
        return Err(Error::InvalidIndex { index: s0, len: sigma.len() });
    }
    let base: Vec<CVector> = omega.members().iter().map(|u| pi.ops()[s0].apply(u)).collect();
    Ok((0..sigma.len())
        .into_par_iter()
        .filter_map(|j| {
            let r = sigma.distance(j, s0);
            if !within(r, max_radius) {
                return None;
            }
            let d = omega
                .members()
                .iter()
                .zip(&base)
                .map(|(u, b)| (pi.ops()[j].apply(u) - b).norm())
                .fold(0.0, f64::max);
            Some((r, d))
        })
        .collect())
}

fn modulus_from_table(table: &[(f64, f64)], radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| {
            table
                .iter()
                .filter(|(dist, _)| within(*dist, r))
                .map(|&(_, d)| d)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `omega(r) = sup_{|s_j - s0| <= r} sup_u ||pi(s_j)* u - pi(s0)* u||`.
pub fn equicontinuity_modulus(omega: &VectorFamily, pi: &PiFamily, s0: usize, radii: &[f64]) -> Result<Vec<f64>> {
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let table = displacement_table(omega, pi, s0, rmax)?;
    Ok(modulus_from_table(&table, radii))
}

fn check_density(pi: &PiFamily, g: &SigmaFunction) -> Result<()> {
    g.aligned(pi.sigma())?;
    if g.values().iter().any(|v| v.im != 0.0 || v.re < 0.0) {
        return Err(Error::NotNormalized("density must be real and nonnegative".into()));
    }
    let mass: f64 = g.values().iter().zip(pi.sigma().weights()).map(|(v, w)| v.re * w).sum();
    if (mass - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(format!("density has mass {mass}, expected 1")));
    }
    Ok(())
}

/// `sup_u ||Pi(g) u - pi(s0)* u||` for a probability density `g`.
pub fn point_approx_defect(omega: &VectorFamily, pi: &PiFamily, s0: usize, g: &SigmaFunction) -> Result<f64> {
    omega.check_dim(pi.dim())?;
    check_density(pi, g)?;
    if s0 >= pi.len() {
        return Err(Error::InvalidIndex { index: s0, len: pi.len() });
    }
    let mut worst = 0.0f64;
    for u in omega.members() {
        let a = pi.apply_quantized(g, u)?;
        worst = worst.max((a - pi.ops()[s0].apply(u)).norm());
    }
    Ok(worst)
}

/// `sum_j mu_j g_j omega(|s_j - s0|)`, the averaged-modulus bound for
/// [`point_approx_defect`].
pub fn point_approx_bound(omega: &VectorFamily, pi: &PiFamily, s0: usize, g: &SigmaFunction) -> Result<f64> {
    check_density(pi, g)?;
    let sigma = pi.sigma();
    let support: Vec<usize> = (0..sigma.len()).filter(|&j| g.values()[j].re > 0.0).collect();
    let rmax = support.iter().map(|&j| sigma.distance(j, s0)).fold(0.0, f64::max);
    let table = displacement_table(omega, pi, s0, rmax)?;
    let radii: Vec<f64> = support.iter().map(|&j| sigma.distance(j, s0)).collect();
    let moduli = modulus_from_table(&table, &radii);
    Ok(support
        .iter()
        .zip(moduli)
        .map(|(&j, w)| sigma.weights()[j] * g.values()[j].re * w)
        .sum())
}

/// Singular values of the matrix with the vectors as columns, divided by
/// the largest.
pub fn compactness_proxy(vectors: &[CVector]) -> Result<Vec<f64>> {
    let family = VectorFamily::new(vectors.to_vec())?;
    let sv = singular_values_desc(&family.as_matrix());
    let top = sv.first().copied().unwrap_or(0.0);
    Ok(sv.into_iter().map(|s| if top > 0.0 { s / top } else { 0.0 }).collect())
}

/// A finite operator family, optionally closed under adjoints.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    members: Vec<CMatrix>,
    includes_adjoints: bool,
}

impl OperatorFamily {
    pub fn new(members: Vec<CMatrix>, includes_adjoints: bool) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        let (r, c) = first.shape();
        for m in &members {
            if m.shape() != (r, c) {
                return Err(Error::DimensionMismatch {
                    context: "operator family member",
                    expected: r * c,
                    found: m.nrows() * m.ncols(),
                });
            }
        }
        if includes_adjoints && r != c {
            return Err(Error::InvalidSpec("adjoint-closed family needs square members".into()));
        }
        Ok(Self { members, includes_adjoints })
    }

    pub fn members(&self) -> &[CMatrix] {
        &self.members
    }

    pub fn includes_adjoints(&self) -> bool {
        self.includes_adjoints
    }

    pub fn with_adjoints(&self, flag: bool) -> Result<Self> {
        Self::new(self.members.clone(), flag)
    }

    pub fn rows(&self) -> usize {
        self.members[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.members[0].ncols()
    }

    /// Members followed by their adjoints when the flag is set.
    pub fn effective_members(&self) -> Vec<CMatrix> {
        let mut out = self.members.clone();
        if self.includes_adjoints {
            out.extend(self.members.iter().map(|m| m.adjoint()));
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.members.iter().map(op_norm).fold(0.0, f64::max)
    }

    fn sup_image_norm(&self, x: &CVector) -> f64 {
        let mut worst = self.members.iter().map(|m| (m * x).norm()).fold(0.0, f64::max);
        if self.includes_adjoints {
            worst = worst.max(self.members.iter().map(|m| m.ad_mul(x).norm()).fold(0.0, f64::max));
        }
        worst
    }
}

/// Level values `max_S ||chi_{L_k^c} phi_W S||` from the triangular factor
/// of `diag(sqrt(mu) chi_{L_k^c}) W^*`.
pub fn operator_tightness(family: &OperatorFamily, frame: &Frame) -> Result<TightnessProfile> {
    check_len("operator family range", frame.dim(), family.rows())?;
    let sigma = frame.sigma();
    let members = family.effective_members();
    let d = frame.dim();
    let analysis = frame.windows().adjoint();
    let values: Vec<f64> = sigma
        .exhaustion()
        .par_iter()
        .map(|level| {
            let mut inside = vec![false; sigma.len()];
            for &i in level {
                inside[i] = true;
            }
            let mut a = analysis.clone();
            for (j, row_in) in inside.iter().enumerate() {
                let w = if *row_in { 0.0 } else { sigma.weights()[j].sqrt() };
                a.row_mut(j).scale_mut(w);
            }
            if inside.iter().all(|&b| b) {
                return 0.0;
            }
            let r = if a.nrows() >= d { a.qr().r() } else { a };
            members.iter().map(|s| op_norm(&(&r * s))).fold(0.0, f64::max)
        })
        .collect();
    Ok(TightnessProfile { level_sizes: sigma.exhaustion().iter().map(Vec::len).collect(), values })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquicompactnessReport {
    pub dominated: bool,
    /// `min_x (sup_n |<x'_n, x>| - sup_S ||S x||)`.
    pub margin: f64,
    pub functionals: Vec<CVector>,
}

/// `sigma_n sqrt(r) v_n` from the SVD of the stacked family, keeping the `r`
/// singular values above `1e-12 sigma_1`.
pub fn auto_functionals(family: &OperatorFamily) -> Vec<CVector> {
    let members = family.effective_members();
    let cols = members[0].ncols();
    let rows: usize = members.iter().map(|m| m.nrows()).sum();
    let mut stacked = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for m in &members {
        stacked.view_mut((at, 0), m.shape()).copy_from(m);
        at += m.nrows();
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top > 0.0 && svd.singular_values[i] > 1e-12 * top)
        .collect();
    let scale = (keep.len() as f64).sqrt();
    keep.into_iter()
        .map(|i| {
            let s = svd.singular_values[i] * scale;
            CVector::from_iterator(cols, v_t.row(i).iter().map(|z| z.conj() * s))
        })
        .collect()
}

/// Checks `sup_S ||S x|| <= sup_n |<x'_n, x>|` on every sample, with the
/// pairing `<x', x> = sum_k conj(x'_k) x_k`.
pub fn equicompactness_check(
    family: &OperatorFamily,
    functionals: Option<&[CVector]>,
    samples: &[CVector],
) -> Result<EquicompactnessReport> {
    let functionals = match functionals {
        Some(f) => f.to_vec(),
        None => auto_functionals(family),
    };
    for f in &functionals {
        check_len("functional", family.cols(), f.len())?;
    }
    let mut margin = f64::INFINITY;
    let mut dominated = true;
    for x in samples {
        check_len("sample", family.cols(), x.len())?;
        let lhs = family.sup_image_norm(x);
        let rhs = functionals.iter().map(|f| f.dotc(x).norm()).fold(0.0, f64::max);
        margin = margin.min(rhs - lhs);
        if lhs > rhs * (1.0 + 1e-12) + 1e-14 {
            dominated = false;
        }
    }
    if samples.is_empty() {
        margin = 0.0;
    }
    Ok(EquicompactnessReport { dominated, margin, functionals })
}

/// `r_n = sup_S ||S x_n||` along a surrogate weakly null sequence.
pub fn uniform_weak_norm_check(family: &OperatorFamily, null_sequence: &[CVector]) -> Result<Vec<f64>> {
    null_sequence
        .iter()
        .map(|x| {
            check_len("null sequence member", family.cols(), x.len())?;
            Ok(family.sup_image_norm(x))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpTightness {
    /// `sup_u (||(phi(Q) - 1) u|| + ||(psi(P^A) - 1) u||)`.
    pub value: f64,
    pub phi_term: f64,
    pub psi_term: f64,
}

/// Position and momentum cutoff tightness; `phi` holds grid samples of the
/// spatial cutoff and `psi_hat` the kernel samples of `psi` as used by
/// [`crate::magweyl::momentum_function`].
pub fn qp_tightness(
    omega: &VectorFamily,
    setup: &MagneticSetup,
    table: &SegmentTable,
    phi: &CVector,
    psi_hat: &CVector,
) -> Result<QpTightness> {
    let len = setup.grid().len();
    omega.check_dim(len)?;
    check_len("spatial cutoff", len, phi.len())?;
    let terms: Vec<(f64, f64)> = omega
        .members()
        .iter()
        .map(|u| {
            let a = CVector::from_iterator(len, u.iter().zip(phi.iter()).map(|(v, p)| v * (p - 1.0)));
            let b = apply_momentum_function(setup, table, psi_hat, u)? - u;
            Ok((a.norm(), b.norm()))
        })
        .collect::<Result<_>>()?;
    Ok(QpTightness {
        value: terms.iter().map(|(a, b)| a + b).fold(0.0, f64::max),
        phi_term: terms.iter().map(|t| t.0).fold(0.0, f64::max),
        psi_term: terms.iter().map(|t| t.1).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct UvModulus {
    pub radii: Vec<f64>,
    /// `sup_{|x_a| <= r} sup_u ||(U^A(x_a) - 1) u||`.
    pub translation: Vec<f64>,
    /// `sup_{|xi_m| <= r} sup_u ||(V(xi_m) - 1) u||`.
    pub modulation: Vec<f64>,
}

/// Moduli of `U^A(x) = pi^A(x, 0)` and `V(xi) = pi^A(0, xi)` over lattice
/// shells.
pub fn uv_modulus(omega: &VectorFamily, setup: &MagneticSetup, radii: &[f64]) -> Result<UvModulus> {
    let g = setup.grid();
    omega.check_dim(g.len())?;
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let shell = |p: Point| {
        let r = g.dot(&p, &p).sqrt();
        within(r, rmax).then_some(r)
    };
    let eval = |s: PhasePoint| -> Result<f64> {
        let op = weyl_system(setup, &s)?;
        Ok(omega.members().iter().map(|u| (op.apply(u) - u).norm()).fold(0.0, f64::max))
    };
    let mut u_table = Vec::new();
    let mut v_table = Vec::new();
    for a in g.centered_indices() {
        if let Some(r) = shell(g.displacement(a)) {
            u_table.push((r, eval(PhasePoint::new(a, [0; 2]))?));
        }
        if let Some(r) = shell(g.frequency(a)) {
            v_table.push((r, eval(PhasePoint::new([0; 2], a))?));
        }
    }
    Ok(UvModulus {
        radii: radii.to_vec(),
        translation: modulus_from_table(&u_table, radii),
        modulation: modulus_from_table(&v_table, radii),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::random_tight_frame;
    use crate::linalg::{basis_vector, random_vector};
    use crate::magweyl::setup::Grid;
    use crate::magweyl::weyl::weyl_family;
    use crate::sigma::SampledSigma;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The standard basis of `C^d` as a frame on `{0, .., d-1}` with
    /// exhaustion by initial segments.
    fn index_frame(d: usize, levels: usize) -> Frame {
        let points: Vec<Vec<f64>> = (0..d).map(|j| vec![j as f64]).collect();
        let sigma = SampledSigma::with_uniform_balls(points, vec![1.0; d], &[0.0], levels).unwrap();
        Frame::new(sigma, CMatrix::identity(d, d)).unwrap()
    }

    fn weyl_setup(n: usize) -> (MagneticSetup, PiFamily) {
        let s = MagneticSetup::zero_field(Grid::symmetric(1, n).unwrap()).unwrap();
        let pi = weyl_family(&s, 8).unwrap();
        let pi = pi.rescaled(crate::magweyl::fourier::calibrated_weight(s.grid()) / pi.sigma().weights()[0]).unwrap();
        (s, pi)
    }

    fn gaussian(grid: &Grid) -> CVector {
        let v = CVector::from_fn(grid.len(), |k, _| Complex64::new((-grid.point(k)[0].powi(2) / 2.0).exp(), 0.0));
        let n = v.norm();
        v / Complex64::new(n, 0.0)
    }

    #[test]
    fn zero_family_gives_zero_diagnostics() {
        let f = index_frame(6, 3);
        let z = VectorFamily::zero(6);
        let p = tightness_profile(&z, &f, &SolidSpaceSpec::l2()).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
        assert!(VectorFamily::new(vec![]).is_err());
        let (s, pi) = weyl_setup(8);
        let z = VectorFamily::zero(8);
        assert_eq!(pi_cc_tightness(&z, &pi, 3).unwrap(), 0.0);
        assert!(equicontinuity_modulus(&z, &pi, 0, &[0.0, 1.0, 2.0]).unwrap().iter().all(|&v| v == 0.0));
        let m = uv_modulus(&z, &s, &[0.0, 1.0]).unwrap();
        assert!(m.translation.iter().chain(&m.modulation).all(|&v| v == 0.0));
    }

    #[test]
    fn index_frame_profile_is_tail_of_coordinates() {
        let f = index_frame(8, 4);
        let mut u = CVector::zeros(8);
        u[0] = Complex64::new(0.6, 0.0);
        u[7] = Complex64::new(0.0, 0.8);
        let p = tightness_profile(&VectorFamily::new(vec![u]).unwrap(), &f, &SolidSpaceSpec::l2()).unwrap();
        assert!(p.is_nonincreasing());
        assert!((p.values[0] - 0.8).abs() < 1e-15);
        assert_eq!(*p.values.last().unwrap(), 0.0);
        assert!((p.final_nontrivial() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pi_cc_full_level_recovers_members() {
        let (_, pi) = weyl_setup(8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let om = VectorFamily::new((0..3).map(|_| random_vector(&mut rng, 8)).collect()).unwrap();
        let last = pi.sigma().level_count() - 1;
        assert!(pi_cc_tightness(&om, &pi, last).unwrap() < 1e-8);
        assert!(matches!(pi_cc_tightness(&om, &pi, last + 1), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn modulus_is_monotone_and_vanishes_at_zero() {
        let (s, pi) = weyl_setup(16);
        let om = VectorFamily::new(vec![gaussian(s.grid())]).unwrap();
        let radii = [0.0, 0.7, 1.4, 2.8];
        let w = equicontinuity_modulus(&om, &pi, 0, &radii).unwrap();
        assert_eq!(w[0], 0.0);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        assert!(equicontinuity_modulus(&om, &pi, pi.len(), &radii).is_err());
    }

    #[test]
    fn point_mass_density_has_no_defect() {
        let (s, pi) = weyl_setup(8);
        let om = VectorFamily::new(vec![gaussian(s.grid())]).unwrap();
        let s0 = 5;
        let mut g = vec![0.0; pi.len()];
        g[s0] = 1.0 / pi.sigma().weights()[s0];
        let g = SigmaFunction::from_real(&g);
        assert!(point_approx_defect(&om, &pi, s0, &g).unwrap() < 1e-14);
        let bad = SigmaFunction::from_real(&vec![1.0; pi.len()]);
        assert!(matches!(point_approx_defect(&om, &pi, s0, &bad), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn proxy_detects_rank_and_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis: Vec<CVector> = (0..3).map(|_| random_vector(&mut rng, 10)).collect();
        let members: Vec<CVector> = (0..7)
            .map(|_| {
                let c = random_vector(&mut rng, 3);
                &basis[0] * c[0] + &basis[1] * c[1] + &basis[2] * c[2]
            })
            .collect();
        let p = compactness_proxy(&members).unwrap();
        assert!(p[3] <= 1e-12);
        let onb: Vec<CVector> = (0..5).map(|k| basis_vector(10, k)).collect();
        assert!(compactness_proxy(&onb).unwrap().iter().all(|&s| (s - 1.0).abs() < 1e-14));
        assert!(compactness_proxy(&[]).is_err());
    }

    #[test]
    fn operator_tightness_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frame = random_tight_frame(&mut rng, 5, 12).unwrap();
        let frame = Frame::new(
            SampledSigma::with_uniform_balls(
                (0..12).map(|j| vec![j as f64]).collect(),
                frame.sigma().weights().to_vec(),
                &[0.0],
                4,
            )
            .unwrap(),
            frame.windows().clone(),
        )
        .unwrap();
        let members: Vec<CMatrix> = (0..3).map(|_| crate::linalg::random_matrix(&mut rng, 5, 5)).collect();
        let fam = OperatorFamily::new(members.clone(), true).unwrap();
        let p = operator_tightness(&fam, &frame).unwrap();
        let sigma = frame.sigma();
        for (k, level) in sigma.exhaustion().iter().enumerate() {
            let mut a = frame.windows().adjoint();
            for j in 0..12 {
                let w = if level.contains(&j) { 0.0 } else { sigma.weights()[j].sqrt() };
                a.row_mut(j).scale_mut(w);
            }
            let oracle = members
                .iter()
                .flat_map(|m| [op_norm(&(&a * m)), op_norm(&(&a * m.adjoint()))])
                .fold(0.0, f64::max);
            assert!((p.values[k] - oracle).abs() < 1e-10);
        }
        assert!(p.is_nonincreasing());
        let zero = OperatorFamily::new(vec![CMatrix::zeros(5, 5)], false).unwrap();
        assert!(operator_tightness(&zero, &frame).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equicompactness_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let samples: Vec<CVector> = (0..50).map(|_| random_vector(&mut rng, 6)).collect();
        let s = crate::linalg::random_matrix(&mut rng, 6, 6);
        let fam = OperatorFamily::new(vec![s], false).unwrap();
        let rep = equicompactness_check(&fam, None, &samples).unwrap();
        assert!(rep.dominated && rep.margin >= 0.0);
        let zero = OperatorFamily::new(vec![CMatrix::zeros(6, 6)], false).unwrap();
        let f = vec![basis_vector(6, 0)];
        let rep = equicompactness_check(&zero, Some(&f), &samples).unwrap();
        let expected = samples.iter().map(|x| x[0].norm()).fold(f64::INFINITY, f64::min);
        assert!(rep.dominated && (rep.margin - expected).abs() < 1e-15);
        // {<., e_j> e_1} against the decaying functionals 2^-n e_n
        let members: Vec<CMatrix> = (0..6)
            .map(|j| crate::linalg::rank_one(&basis_vector(6, 0), &basis_vector(6, j)))
            .collect();
        let fam = OperatorFamily::new(members, false).unwrap();
        let decaying: Vec<CVector> = (0..6).map(|n| basis_vector(6, n) * Complex64::new(0.5f64.powi(n as i32), 0.0)).collect();
        let rep = equicompactness_check(&fam, Some(&decaying), &[basis_vector(6, 5)]).unwrap();
        assert!(!rep.dominated);
    }

    #[test]
    fn weak_norm_sequences() {
        let id = OperatorFamily::new(vec![CMatrix::identity(5, 5)], false).unwrap();
        let onb: Vec<CVector> = (0..5).map(|k| basis_vector(5, k)).collect();
        assert!(uniform_weak_norm_check(&id, &onb).unwrap().iter().all(|&r| (r - 1.0).abs() < 1e-15));
        let fam = OperatorFamily::new(vec![crate::linalg::rank_one(&basis_vector(5, 3), &basis_vector(5, 0))], false).unwrap();
        let r = uniform_weak_norm_check(&fam, &onb).unwrap();
        assert_eq!(r[1..], [0.0; 4]);
        let r = uniform_weak_norm_check(&fam.with_adjoints(true).unwrap(), &onb).unwrap();
        assert_eq!(r[3], 1.0);
    }

    #[test]
    fn trivial_cutoffs_give_zero_qp_tightness() {
        let s = MagneticSetup::zero_field(Grid::symmetric(1, 16).unwrap()).unwrap();
        let t = SegmentTable::new(&s);
        let om = VectorFamily::new(vec![gaussian(s.grid())]).unwrap();
        let ones = CVector::from_element(16, Complex64::new(1.0, 0.0));
        let psi_hat = crate::magweyl::psi_hat_from_symbol(s.grid(), |_| Complex64::new(1.0, 0.0));
        let q = qp_tightness(&om, &s, &t, &ones, &psi_hat).unwrap();
        assert!(q.value < 1e-12, "{q:?}");
    }

    #[test]
    fn uv_shells_use_their_own_steps() {
        let g = Grid::centered(1, 16, 0.5).unwrap();
        let s = MagneticSetup::zero_field(g.clone()).unwrap();
        let om = VectorFamily::new(vec![gaussian(&g)]).unwrap();
        let m = uv_modulus(&om, &s, &[g.h(), g.dxi()]).unwrap();
        assert!(g.dxi() > g.h());
        assert_eq!(m.modulation[0], 0.0);
        assert!(m.modulation[1] > 0.0 && m.translation[0] > 0.0);
    }

    #[test]
    fn modulus_includes_points_on_the_radius() {
        let (s, pi) = weyl_setup(32);
        let om = VectorFamily::new(vec![gaussian(s.grid())]).unwrap();
        let step = s.grid().h();
        let s0 = crate::magweyl::weyl::phase_index_of(s.grid(), &PhasePoint::new([2, 0], [-1, 0]));
        for k in 1..=3i64 {
            let w = equicontinuity_modulus(&om, &pi, s0, &[k as f64 * step]).unwrap()[0];
            let mut want = 0.0f64;
            for a in -k..=k {
                for m in -k..=k {
                    if a * a + m * m <= k * k {
                        let j = crate::magweyl::weyl::phase_index_of(s.grid(), &PhasePoint::new([2 + a, 0], [m - 1, 0]));
                        want = want.max((pi.ops()[j].apply(&om.members()[0]) - pi.ops()[s0].apply(&om.members()[0])).norm());
                    }
                }
            }
            assert_eq!(w, want, "radius {k} steps");
        }
    }
}

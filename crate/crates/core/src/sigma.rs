//! Finite quadrature models of the index space, its compact exhaustion and
//! the solid (weighted `l^p`) function spaces living on it.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::CVector;

/// A weighted point set with a nested family of "compact" subsets
/// `L_1 ⊂ L_2 ⊂ … ⊂ L_K = all points`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSigma {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    exhaustion: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SigmaWire {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    exhaustion: Vec<Vec<usize>>,
}

impl SampledSigma {
    pub fn new(
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        exhaustion: Vec<Vec<usize>>,
    ) -> Result<Self> {
        check_len("sigma weights", points.len(), weights.len())?;
        if points.is_empty() {
            return Err(Error::InvalidSpec("sigma needs at least one point".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidSpec("points of unequal dimension".into()));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidSpec(format!(
                "weight {i} is not strictly positive"
            )));
        }
        let n = points.len();
        let mut exhaustion = exhaustion;
        for level in exhaustion.iter_mut() {
            level.sort_unstable();
            level.dedup();
            if let Some(&bad) = level.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidIndex { index: bad, len: n });
            }
        }
        if exhaustion.is_empty() {
            return Err(Error::InvalidSpec("exhaustion must not be empty".into()));
        }
        for k in 1..exhaustion.len() {
            let prev = &exhaustion[k - 1];
            let cur = &exhaustion[k];
            let contained = prev.iter().all(|i| cur.binary_search(i).is_ok());
            if !contained || cur.len() <= prev.len() {
                return Err(Error::InvalidSpec(format!(
                    "exhaustion level {k} does not strictly contain level {}",
                    k - 1
                )));
            }
        }
        if exhaustion.last().map(|l| l.len()) != Some(n) {
            return Err(Error::InvalidSpec(
                "last exhaustion level must be the full index set".into(),
            ));
        }
        Ok(Self {
            points,
            weights,
            exhaustion,
        })
    }

    /// Exhaustion by closed balls around `center` with the given increasing
    /// radii. Radii that add no new point are skipped and a final level
    /// containing every point is appended when needed.
    pub fn with_ball_exhaustion(
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        center: &[f64],
        radii: &[f64],
    ) -> Result<Self> {
        let dist: Vec<f64> = points.iter().map(|p| euclid(p, center)).collect();
        let mut levels: Vec<Vec<usize>> = Vec::new();
        for &r in radii {
            let level: Vec<usize> = (0..points.len())
                .filter(|&i| dist[i] <= r * (1.0 + 1e-12) + 1e-12)
                .collect();
            if level.is_empty() {
                continue;
            }
            if levels.last().is_none_or(|l| l.len() < level.len()) {
                levels.push(level);
            }
        }
        if levels.last().is_none_or(|l| l.len() < points.len()) {
            levels.push((0..points.len()).collect());
        }
        Self::new(points, weights, levels)
    }

    /// `levels` balls with radii evenly spaced up to the largest distance
    /// from `center`, so the last ball is the whole set.
    pub fn with_uniform_balls(
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        center: &[f64],
        levels: usize,
    ) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidSpec("need at least one exhaustion level".into()));
        }
        let rmax = points
            .iter()
            .map(|p| euclid(p, center))
            .fold(0.0, f64::max);
        let radii: Vec<f64> = (1..=levels)
            .map(|k| rmax * k as f64 / levels as f64)
            .collect();
        Self::with_ball_exhaustion(points, weights, center, &radii)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coord_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exhaustion(&self) -> &[Vec<usize>] {
        &self.exhaustion
    }

    pub fn level_count(&self) -> usize {
        self.exhaustion.len()
    }

    pub fn level(&self, k: usize) -> Result<&[usize]> {
        self.exhaustion
            .get(k)
            .map(|v| v.as_slice())
            .ok_or(Error::LevelOutOfRange {
                level: k,
                levels: self.exhaustion.len(),
            })
    }

    /// Membership mask of level `k`.
    pub fn level_mask(&self, k: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for &i in self.level(k)? {
            mask[i] = true;
        }
        Ok(mask)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclid(&self.points[i], &self.points[j])
    }

    /// Same points and exhaustion, weights multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let weights = self.weights.iter().map(|w| w * factor).collect();
        Self::new(self.points.clone(), weights, self.exhaustion.clone())
    }

    /// Index of the point closest to `coords`.
    pub fn nearest(&self, coords: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d = euclid(p, coords);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// All unordered pairs `(i, j)`, `i < j`, at distance at most `radius`.
    pub fn neighbor_pairs(&self, radius: f64) -> Vec<(usize, usize)> {
        let cell = radius.max(f64::MIN_POSITIVE);
        let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|x| (x / cell).floor() as i64).collect() };
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in self.points.iter().enumerate() {
            buckets.entry(key(p)).or_default().push(i);
        }
        let dim = self.coord_dim();
        let offsets: Vec<Vec<i64>> = (0..3usize.pow(dim as u32))
            .map(|mut c| {
                (0..dim)
                    .map(|_| {
                        let o = (c % 3) as i64 - 1;
                        c /= 3;
                        o
                    })
                    .collect()
            })
            .collect();
        let mut pairs = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let base = key(p);
            for off in &offsets {
                let k: Vec<i64> = base.iter().zip(off).map(|(a, b)| a + b).collect();
                if let Some(cands) = buckets.get(&k) {
                    for &j in cands {
                        if j > i && self.distance(i, j) <= radius * (1.0 + 1e-12) {
                            pairs.push((i, j));
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    pub fn to_json(&self) -> Result<String> {
        let wire = SigmaWire {
            points: self.points.clone(),
            weights: self.weights.clone(),
            exhaustion: self.exhaustion.clone(),
        };
        Ok(serde_json::to_string(&wire)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: SigmaWire = serde_json::from_str(text)?;
        Self::new(wire.points, wire.weights, wire.exhaustion)
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Weighted `l^p` norm `(sum_j mu_j (weight_j |f_j|)^p)^(1/p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolidSpaceSpec {
    p: f64,
    weight: Option<Vec<f64>>,
}

impl SolidSpaceSpec {
    /// `p = ∞` is rejected: tail norms of `l^∞` do not vanish along an
    /// exhaustion (the norm is not absolutely continuous).
    pub fn new(p: f64, weight: Option<Vec<f64>>) -> Result<Self> {
        if p.is_infinite() {
            return Err(Error::InvalidSpec(
                "p = infinity is not allowed: the solid space must have an absolutely continuous norm (finite p)".into(),
            ));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidSpec(format!("p = {p} must lie in [1, inf)")));
        }
        if let Some(w) = &weight {
            if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidSpec(format!(
                    "solid-space weight {i} is not strictly positive"
                )));
            }
        }
        Ok(Self { p, weight })
    }

    pub fn l2() -> Self {
        Self { p: 2.0, weight: None }
    }

    pub fn weighted_l1(weight: Vec<f64>) -> Result<Self> {
        Self::new(1.0, Some(weight))
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn weight(&self) -> Option<&[f64]> {
        self.weight.as_deref()
    }
}

/// Complex function sampled on the points of a [`SampledSigma`].
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaFunction {
    values: CVector,
}

impl SigmaFunction {
    pub fn new(values: CVector) -> Self {
        Self { values }
    }

    pub fn from_vec(values: Vec<Complex64>) -> Self {
        Self {
            values: CVector::from_vec(values),
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::from_vec(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: CVector::zeros(len),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &CVector {
        &self.values
    }

    pub fn into_values(self) -> CVector {
        self.values
    }

    pub fn aligned(&self, sigma: &SampledSigma) -> Result<()> {
        check_len("sigma function", sigma.len(), self.len())
    }

    /// `L^2(Sigma, mu)` inner product.
    pub fn inner_l2(&self, other: &SigmaFunction, sigma: &SampledSigma) -> Result<Complex64> {
        self.aligned(sigma)?;
        other.aligned(sigma)?;
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .zip(sigma.weights())
            .map(|((a, b), w)| a * b.conj() * *w)
            .sum())
    }

    pub fn norm_l2(&self, sigma: &SampledSigma) -> Result<f64> {
        solid_norm(self, &SolidSpaceSpec::l2(), sigma)
    }
}

pub fn solid_norm(f: &SigmaFunction, spec: &SolidSpaceSpec, sigma: &SampledSigma) -> Result<f64> {
    f.aligned(sigma)?;
    if let Some(w) = spec.weight() {
        check_len("solid-space weight", sigma.len(), w.len())?;
    }
    let p = spec.p();
    let mut acc = 0.0;
    for (j, v) in f.values().iter().enumerate() {
        let wj = spec.weight().map_or(1.0, |w| w[j]);
        let x = wj * v.norm();
        if x == 0.0 {
            continue;
        }
        acc += sigma.weights()[j] * if p == 2.0 { x * x } else { x.powf(p) };
    }
    Ok(if p == 2.0 { acc.sqrt() } else { acc.powf(1.0 / p) })
}

/// `chi_{L^c} f`: zero on `level`, unchanged elsewhere.
pub fn restrict_to_complement(f: &SigmaFunction, level: &[usize]) -> Result<SigmaFunction> {
    let mut values = f.values().clone();
    for &i in level {
        if i >= values.len() {
            return Err(Error::InvalidIndex {
                index: i,
                len: values.len(),
            });
        }
        values[i] = Complex64::new(0.0, 0.0);
    }
    Ok(SigmaFunction::new(values))
}

/// Tail norms `||chi_{L_k^c} f||` along the exhaustion of `sigma`.
pub fn tail_norms(f: &SigmaFunction, spec: &SolidSpaceSpec, sigma: &SampledSigma) -> Result<Vec<f64>> {
    sigma
        .exhaustion()
        .iter()
        .map(|level| solid_norm(&restrict_to_complement(f, level)?, spec, sigma))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominatedConvergence {
    /// `||f_n - f||` for each term of the sequence.
    pub norms: Vec<f64>,
    /// Final norm is at most the supplied tolerance.
    pub converged: bool,
}

/// Checks the dominated convergence statement for a finite sequence: every
/// `|f_n| <= |g|` pointwise is verified first, and a violation is an error.
pub fn dominated_convergence_check(
    fs: &[SigmaFunction],
    f: &SigmaFunction,
    g: &SigmaFunction,
    spec: &SolidSpaceSpec,
    sigma: &SampledSigma,
    tol: f64,
) -> Result<DominatedConvergence> {
    f.aligned(sigma)?;
    g.aligned(sigma)?;
    let mut norms = Vec::with_capacity(fs.len());
    for (n, fna) in fs.iter().enumerate() {
        fna.aligned(sigma)?;
        for (j, (a, b)) in fna.values().iter().zip(g.values().iter()).enumerate() {
            if a.norm() > b.norm() * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::DominationViolated {
                    sequence: n,
                    point: j,
                });
            }
        }
        let diff = SigmaFunction::new(fna.values() - f.values());
        norms.push(solid_norm(&diff, spec, sigma)?);
    }
    let converged = norms.last().is_none_or(|&x| x <= tol);
    Ok(DominatedConvergence { norms, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize) -> SampledSigma {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        SampledSigma::with_uniform_balls(pts, vec![1.0; n], &[0.0], n).unwrap()
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let s = line(4);
        assert_eq!(solid_norm(&SigmaFunction::zeros(4), &SolidSpaceSpec::l2(), &s).unwrap(), 0.0);
    }

    #[test]
    fn one_hot_l2_norm_is_one() {
        let s = line(3);
        let f = SigmaFunction::from_real(&[1.0, 0.0, 0.0]);
        assert!((solid_norm(&f, &SolidSpaceSpec::l2(), &s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_l1_hand_value() {
        let s = SampledSigma::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5], vec![vec![0, 1]]).unwrap();
        let spec = SolidSpaceSpec::weighted_l1(vec![2.0, 4.0]).unwrap();
        let f = SigmaFunction::from_real(&[1.0, 1.0]);
        assert!((solid_norm(&f, &spec, &s).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let s = line(3);
        let err = solid_norm(&SigmaFunction::zeros(2), &SolidSpaceSpec::l2(), &s).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn infinite_p_rejected() {
        let err = SolidSpaceSpec::new(f64::INFINITY, None).unwrap_err().to_string();
        assert!(err.contains("absolutely continuous"));
        assert!(SolidSpaceSpec::new(0.5, None).is_err());
        assert!(SolidSpaceSpec::new(2.0, Some(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn complement_restriction_cases() {
        let f = SigmaFunction::from_real(&[1.0, 2.0, 3.0]);
        assert_eq!(restrict_to_complement(&f, &[0, 1, 2]).unwrap(), SigmaFunction::zeros(3));
        assert_eq!(restrict_to_complement(&f, &[]).unwrap(), f);
        // 1-based {2} is 0-based {2 - 1}... the third entry in the example is index 2
        assert_eq!(
            restrict_to_complement(&f, &[2]).unwrap(),
            SigmaFunction::from_real(&[1.0, 2.0, 0.0])
        );
        assert!(matches!(
            restrict_to_complement(&f, &[3]),
            Err(Error::InvalidIndex { index: 3, len: 3 })
        ));
    }

    #[test]
    fn exhaustion_validation() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(SampledSigma::new(pts.clone(), vec![1.0, 1.0], vec![vec![0]]).is_err());
        assert!(SampledSigma::new(pts.clone(), vec![1.0, 1.0], vec![vec![0, 1], vec![0, 1]]).is_err());
        assert!(SampledSigma::new(pts.clone(), vec![1.0, 0.0], vec![vec![0, 1]]).is_err());
        assert!(SampledSigma::new(pts.clone(), vec![1.0, 1.0], vec![vec![1], vec![0, 1]]).is_ok());
        assert!(SampledSigma::new(pts, vec![1.0, 1.0], vec![vec![5], vec![0, 1]]).is_err());
    }

    #[test]
    fn json_round_trip_keeps_zero_based_indices() {
        let s = line(5);
        let text = s.to_json().unwrap();
        assert!(text.contains("\"exhaustion\":[[0]"));
        assert_eq!(SampledSigma::from_json(&text).unwrap(), s);
        assert!(SampledSigma::from_json(r#"{"points":[[0]],"weights":[1],"exhaustion":[[0]],"x":1}"#).is_err());
    }

    #[test]
    fn dominated_convergence_examples() {
        let s = line(6);
        let spec = SolidSpaceSpec::l2();
        let g = SigmaFunction::from_real(&[1.0, 0.5, 0.25, 2.0, 1.0, 0.1]);
        // constant sequence
        let r = dominated_convergence_check(&vec![g.clone(); 3], &g, &g, &spec, &s, 1e-14).unwrap();
        assert!(r.norms.iter().all(|&x| x == 0.0) && r.converged);
        // scaled sequence, f = 0
        let gnorm = solid_norm(&g, &spec, &s).unwrap();
        let fs: Vec<_> = (1..=5)
            .map(|n| SigmaFunction::new(g.values() / Complex64::new(n as f64, 0.0)))
            .collect();
        let r = dominated_convergence_check(&fs, &SigmaFunction::zeros(6), &g, &spec, &s, 1.0).unwrap();
        for (n, x) in r.norms.iter().enumerate() {
            assert!((x - gnorm / (n + 1) as f64).abs() < 1e-14);
        }
        assert!(r.norms.windows(2).all(|w| w[1] < w[0]));
        // truncations along the exhaustion: ||f_n - g|| is the tail sum
        let fs: Vec<_> = s
            .exhaustion()
            .iter()
            .map(|lvl| {
                let mut v = CVector::zeros(6);
                for &i in lvl {
                    v[i] = g.values()[i];
                }
                SigmaFunction::new(v)
            })
            .collect();
        let r = dominated_convergence_check(&fs, &g, &g, &spec, &s, 1e-15).unwrap();
        let gv: Vec<f64> = g.values().iter().map(|c| c.re).collect();
        for (k, lvl) in s.exhaustion().iter().enumerate() {
            let tail: f64 = (0..6).filter(|i| !lvl.contains(i)).map(|i| gv[i] * gv[i]).sum();
            assert!((r.norms[k] - tail.sqrt()).abs() < 1e-14);
        }
        assert_eq!(*r.norms.last().unwrap(), 0.0);
        assert!(r.converged);
        // violation
        let bad = vec![SigmaFunction::from_real(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0])];
        assert!(matches!(
            dominated_convergence_check(&bad, &g, &g, &spec, &s, 1.0),
            Err(Error::DominationViolated { sequence: 0, point: 0 })
        ));
    }

    #[test]
    fn neighbor_pairs_on_a_grid() {
        let pts: Vec<Vec<f64>> = (0..4)
            .flat_map(|i| (0..4).map(move |j| vec![i as f64, j as f64]))
            .collect();
        let s = SampledSigma::with_uniform_balls(pts, vec![1.0; 16], &[0.0, 0.0], 3).unwrap();
        assert_eq!(s.neighbor_pairs(1.0).len(), 24);
    }

    fn arb_setup() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
        (1usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec(-3.0f64..3.0, n),
                proptest::collection::vec(0.0f64..1.0, n),
                proptest::collection::vec(0.1f64..2.0, n),
                1.0f64..4.0,
            )
        })
    }

    proptest! {
        #[test]
        fn solidity((g, frac, w, p) in arb_setup()) {
            let n = g.len();
            let s = line(n).rescaled(1.0).unwrap();
            let s = SampledSigma::new(s.points().to_vec(), w, s.exhaustion().to_vec()).unwrap();
            let f: Vec<f64> = g.iter().zip(&frac).map(|(a, t)| a * t).collect();
            let spec = SolidSpaceSpec::new(p, None).unwrap();
            let nf = solid_norm(&SigmaFunction::from_real(&f), &spec, &s).unwrap();
            let ng = solid_norm(&SigmaFunction::from_real(&g), &spec, &s).unwrap();
            prop_assert!(nf <= ng * (1.0 + 1e-12));
        }

        #[test]
        fn tail_norms_nonincreasing_and_vanish((g, _f, _w, p) in arb_setup()) {
            let s = line(g.len());
            let spec = SolidSpaceSpec::new(p, None).unwrap();
            let tails = tail_norms(&SigmaFunction::from_real(&g), &spec, &s).unwrap();
            prop_assert!(tails.windows(2).all(|t| t[1] <= t[0] * (1.0 + 1e-12)));
            prop_assert_eq!(*tails.last().unwrap(), 0.0);
        }

        #[test]
        fn complement_is_idempotent(g in proptest::collection::vec(-3.0f64..3.0, 1..10), seed in 0usize..100) {
            let f = SigmaFunction::from_real(&g);
            let level: Vec<usize> = (0..g.len()).filter(|i| (i * 7 + seed) % 3 == 0).collect();
            let once = restrict_to_complement(&f, &level).unwrap();
            prop_assert_eq!(restrict_to_complement(&once, &level).unwrap(), once);
        }
    }
}

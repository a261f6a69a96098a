//! Grid FFTs, the magnetic Fourier–Wigner transform and the symplectic
//! Fourier transform linking `Pi^A` with `Op^A`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{check_len, Error, Result};
use crate::linalg::CVector;
use crate::magweyl::opweyl::Symbol;
use crate::magweyl::setup::{Grid, MagneticSetup, MAX_DIM};
use crate::magweyl::weyl::SegmentTable;
use crate::sigma::SigmaFunction;

/// Unnormalised `n`-dimensional DFT over the grid layout,
/// `X_m = sum_k e^{∓2 pi i k.m / N} x_k` (minus sign for forward).
pub fn fft_grid(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let size = grid.size();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(size)
    } else {
        planner.plan_fft_forward(size)
    };
    if grid.n() == 1 {
        fft.process(data);
        return;
    }
    // axis 1 (contiguous rows), then axis 0
    fft.process(data);
    let mut col = vec![Complex64::new(0.0, 0.0); size];
    for c in 0..size {
        for r in 0..size {
            col[r] = data[r * size + c];
        }
        fft.process(&mut col);
        for r in 0..size {
            data[r * size + c] = col[r];
        }
    }
}

/// Calibrated phase-space weight `(h dxi / 2 pi)^n = N^{-n}`.
pub fn calibrated_weight(grid: &Grid) -> f64 {
    (grid.h() * grid.dxi() / (2.0 * std::f64::consts::PI)).powi(grid.n() as i32)
}

fn require_even(grid: &Grid) -> Result<()> {
    if grid.size() % 2 == 1 {
        return Err(Error::InvalidSpec(format!(
            "odd grid size {} rejected: half shifts need an even lattice",
            grid.size()
        )));
    }
    Ok(())
}

/// `[Phi^A(u, v)](x_a, xi_m) = <pi^A(x_a, xi_m) u, v>`, computed per
/// displacement as a phase multiplication, a shear `k -> k + a` and one
/// FFT in `y`. Values are ordered like [`crate::magweyl::weyl::phase_space_sigma`].
pub fn fourier_wigner(
    setup: &MagneticSetup,
    table: &SegmentTable,
    u: &CVector,
    v: &CVector,
) -> Result<SigmaFunction> {
    let g = setup.grid();
    require_even(g)?;
    check_len("Fourier-Wigner u", g.len(), u.len())?;
    check_len("Fourier-Wigner v", g.len(), v.len())?;
    let len = g.len();
    let freq_phase: Vec<[f64; MAX_DIM]> = (0..len).map(|km| g.frequency(g.centered_multi(km))).collect();
    let rows: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map(|ka| {
            let a = g.centered_multi(ka);
            let x = g.displacement(a);
            let mut buf: Vec<Complex64> = (0..len)
                .map(|k| {
                    let m = g.multi(k);
                    let target = g.flat_wrapped([m[0] as i64 + a[0], m[1] as i64 + a[1]]);
                    Complex64::from_polar(1.0, -table.get(k, ka)) * u[target] * v[k].conj()
                })
                .collect();
            fft_grid(g, &mut buf, false);
            for (km, val) in buf.iter_mut().enumerate() {
                let xi = &freq_phase[km];
                let arg: f64 = (0..g.n()).map(|j| -(g.origin() + x[j] / 2.0) * xi[j]).sum();
                *val *= Complex64::from_polar(1.0, arg);
            }
            buf
        })
        .collect();
    Ok(SigmaFunction::from_vec(rows.into_iter().flatten().collect()))
}

/// Dense row-major tensor used for separable transforms.
struct Tensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl Tensor {
    /// Replace axis `axis` (length `mat_cols`) by `mat * x` along it.
    fn apply_along(&mut self, axis: usize, rows: usize, mat: &[Complex64]) {
        let len = self.shape[axis];
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = vec![Complex64::new(0.0, 0.0); outer * rows * inner];
        out.par_chunks_mut(rows * inner)
            .enumerate()
            .for_each(|(o, chunk)| {
                for i in 0..inner {
                    for r in 0..rows {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in 0..len {
                            acc += mat[r * len + k] * self.data[(o * len + k) * inner + i];
                        }
                        chunk[r * inner + i] = acc;
                    }
                }
            });
        self.shape[axis] = rows;
        self.data = out;
    }
}

/// `a(X, xi') = sum_{a, m} mu f(a, m) e^{i (X.xi_m - x_a.xi')}` sampled on
/// the half-step lattice in `X` and the dual lattice in `xi'`, with the
/// calibrated weight `mu = N^{-n}`.
pub fn symplectic_fourier(grid: &Grid, f: &SigmaFunction) -> Result<Symbol> {
    require_even(grid)?;
    let len = grid.len();
    check_len("symplectic Fourier input", len * len, f.len())?;
    let n = grid.n();
    let size = grid.size();
    let qn = Symbol::q_count(grid);
    let qmin = Symbol::q_min(grid);
    let xi = |r: usize| grid.centered_index(r) as f64 * grid.dxi();
    let x = |r: usize| grid.centered_index(r) as f64 * grid.h();
    let mq: Vec<Complex64> = (0..qn)
        .flat_map(|qi| {
            let xq = grid.half_step(qi as i64 + qmin);
            (0..size).map(move |r| Complex64::from_polar(1.0, xq * xi(r)))
        })
        .collect();
    let ma: Vec<Complex64> = (0..size)
        .flat_map(|mr| (0..size).map(move |ar| Complex64::from_polar(1.0, -x(ar) * xi(mr))))
        .collect();
    let mut t = Tensor {
        shape: vec![size; 2 * n],
        data: f.values().iter().copied().collect(),
    };
    for j in 0..n {
        t.apply_along(n + j, qn, &mq);
        t.apply_along(j, size, &ma);
    }
    // t is indexed [m'_1..m'_n, q_1..q_n]; Symbol wants [q_1..q_n, m'].
    let mu = calibrated_weight(grid);
    let qlen = qn.pow(n as u32);
    let mut values = vec![Complex64::new(0.0, 0.0); qlen * len];
    for mp in 0..len {
        for q in 0..qlen {
            values[q * len + mp] = t.data[mp * qlen + q] * mu;
        }
    }
    Symbol::from_values(grid, values)
}

/// For each half-step row `q`, `B_q(a) = N^{-n} sum_{m'} e^{i x_a.xi_{m'}} a(X_q, xi_{m'})`
/// indexed by the displacement residue of `a`.
pub(crate) fn symbol_shift_rows(symbol: &Symbol) -> Vec<Vec<Complex64>> {
    let g = symbol.grid();
    let len = g.len();
    let scale = 1.0 / len as f64;
    (0..symbol.q_rows())
        .into_par_iter()
        .map(|qrow| {
            let mut buf: Vec<Complex64> = symbol.row(qrow).to_vec();
            fft_grid(g, &mut buf, true);
            for b in buf.iter_mut() {
                *b *= scale;
            }
            buf
        })
        .collect()
}

/// Inverse of [`symplectic_fourier`] on the samples used by `Op^A`:
/// `f(a, m) = e^{-i xi_m.(o + x_a/2)} / (N^n mu) sum_c e^{-2 pi i m.c/N} B_{2c+a}(a)`.
pub fn inverse_symplectic_fourier(symbol: &Symbol) -> Result<SigmaFunction> {
    let g = symbol.grid().clone();
    require_even(&g)?;
    let len = g.len();
    let rows = symbol_shift_rows(symbol);
    let mu = calibrated_weight(&g);
    let scale = 1.0 / (len as f64 * mu);
    let out: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map(|ka| {
            let a = g.centered_multi(ka);
            let x = g.displacement(a);
            let mut buf: Vec<Complex64> = (0..len)
                .map(|c| {
                    let mc = g.multi(c);
                    let q = [2 * mc[0] as i64 + a[0], 2 * mc[1] as i64 + a[1]];
                    rows[symbol.q_row_index(q)][ka]
                })
                .collect();
            fft_grid(&g, &mut buf, false);
            for (km, val) in buf.iter_mut().enumerate() {
                let xi = g.frequency(g.centered_multi(km));
                let arg: f64 = (0..g.n()).map(|j| -(g.origin() + x[j] / 2.0) * xi[j]).sum();
                *val *= Complex64::from_polar(scale, arg);
            }
            buf
        })
        .collect();
    Ok(SigmaFunction::from_vec(out.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_vector;
    use crate::magweyl::setup::FieldSpec;
    use crate::magweyl::weyl::{phase_point_of, weyl_family, weyl_system};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fft_matches_direct_dft() {
        let g = Grid::symmetric(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = random_vector(&mut rng, 16);
        let mut y: Vec<Complex64> = x.iter().copied().collect();
        fft_grid(&g, &mut y, false);
        for m in 0..16 {
            let mm = g.multi(m);
            let direct: Complex64 = (0..16)
                .map(|k| {
                    let kk = g.multi(k);
                    let arg = -2.0 * std::f64::consts::PI * ((kk[0] * mm[0] + kk[1] * mm[1]) as f64) / 4.0;
                    x[k] * Complex64::from_polar(1.0, arg)
                })
                .sum();
            assert!((direct - y[m]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_field_fourier_wigner_matches_double_sum() {
        let s = MagneticSetup::zero_field(Grid::symmetric(1, 8).unwrap()).unwrap();
        let g = s.grid();
        let t = SegmentTable::new(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_vector(&mut rng, 8);
        let v = random_vector(&mut rng, 8);
        let fw = fourier_wigner(&s, &t, &u, &v).unwrap();
        for j in 0..64 {
            let p = phase_point_of(g, j);
            let (x, xi) = p.coords(g);
            let direct: Complex64 = (0..8)
                .map(|k| {
                    let y = g.point(k)[0];
                    let shifted = g.flat_wrapped([k as i64 + p.x[0], 0]);
                    Complex64::from_polar(1.0, -(y + x[0] / 2.0) * xi[0]) * u[shifted] * v[k].conj()
                })
                .sum();
            assert!((fw.values()[j] - direct).norm() < 1e-12);
        }
        assert_eq!(fourier_wigner(&s, &t, &CVector::zeros(8), &v).unwrap().values().norm(), 0.0);
    }

    #[test]
    fn magnetic_fourier_wigner_is_family_coefficient_and_isometric() {
        let s = MagneticSetup::from_field(Grid::symmetric(2, 6).unwrap(), &FieldSpec::SymmetricGauge { b: 0.9 }).unwrap();
        let t = SegmentTable::new(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_vector(&mut rng, 36);
        let v = random_vector(&mut rng, 36);
        let fw = fourier_wigner(&s, &t, &u, &v).unwrap();
        let fam = weyl_family(&s, 3).unwrap();
        let c = fam.coefficient_transform(&u, &v).unwrap();
        assert!((fw.values() - c.values()).norm() < 1e-10 * u.norm() * v.norm());
        let mu = calibrated_weight(s.grid());
        let l2: f64 = fw.values().iter().map(|z| z.norm_sqr() * mu).sum();
        assert!((l2 - u.norm_squared() * v.norm_squared()).abs() < 1e-10 * l2);
        let p = phase_point_of(s.grid(), 100);
        let direct = v.dotc(&weyl_system(&s, &p).unwrap().apply(&u));
        assert!((direct - fw.values()[100]).norm() < 1e-10);
    }

    #[test]
    fn odd_grids_rejected() {
        let s = MagneticSetup::zero_field(Grid::symmetric(1, 7).unwrap()).unwrap();
        let t = SegmentTable::new(&s);
        let u = CVector::zeros(7);
        assert!(matches!(fourier_wigner(&s, &t, &u, &u), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn symplectic_fourier_round_trip() {
        for (n, size) in [(1, 8), (2, 4)] {
            let g = Grid::symmetric(n, size).unwrap();
            let len = g.len();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let f = SigmaFunction::new(random_vector(&mut rng, len * len));
            let a = symplectic_fourier(&g, &f).unwrap();
            let back = inverse_symplectic_fourier(&a).unwrap();
            assert!((back.values() - f.values()).norm() < 1e-12 * f.values().norm());
        }
    }
}

//! Symbols on the midpoint lattice, the magnetic Weyl quantization `Op^A`
//! and gauge covariance.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::linalg::CMatrix;
use crate::magweyl::fourier::symbol_shift_rows;
use crate::magweyl::setup::{Grid, MagneticSetup, Point, Poly, MAX_DIM};
use crate::magweyl::weyl::SegmentTable;

/// Samples `a(X_q, xi_m)` with `X_q = origin + q h / 2` on the half-step
/// lattice `q in [-N/2, 5N/2)` per axis and `xi_m` on the dual lattice.
/// Storage: `q_row * N^n + flat(m mod N)`, `q_row` row major over axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Symbol {
    pub fn q_min(grid: &Grid) -> i64 {
        -((grid.size() / 2) as i64)
    }

    pub fn q_count(grid: &Grid) -> usize {
        3 * grid.size()
    }

    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        let rows = Self::q_count(grid).pow(grid.n() as u32);
        check_len("symbol samples", rows * grid.len(), values.len())?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f(X, xi)` on the midpoint lattice.
    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn(&Point, &Point) -> Complex64 + Sync,
    {
        let len = grid.len();
        let qn = Self::q_count(grid);
        let rows = qn.pow(grid.n() as u32);
        let values: Vec<Complex64> = (0..rows)
            .into_par_iter()
            .flat_map_iter(|qrow| {
                let mut x = [0.0; MAX_DIM];
                let q = Self::q_of_row(grid, qrow);
                for j in 0..grid.n() {
                    x[j] = grid.half_step(q[j]);
                }
                let f = &f;
                (0..len).map(move |km| f(&x, &grid.frequency(grid.centered_multi(km))))
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn constant(grid: &Grid, c: Complex64) -> Self {
        Self::from_fn(grid, |_, _| c)
    }

    fn q_of_row(grid: &Grid, qrow: usize) -> [i64; MAX_DIM] {
        let qn = Self::q_count(grid);
        let qmin = Self::q_min(grid);
        if grid.n() == 1 {
            [qrow as i64 + qmin, 0]
        } else {
            [(qrow / qn) as i64 + qmin, (qrow % qn) as i64 + qmin]
        }
    }

    pub fn q_row_index(&self, q: [i64; MAX_DIM]) -> usize {
        let qn = Self::q_count(&self.grid) as i64;
        let qmin = Self::q_min(&self.grid);
        if self.grid.n() == 1 {
            (q[0] - qmin) as usize
        } else {
            ((q[0] - qmin) * qn + (q[1] - qmin)) as usize
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn q_rows(&self) -> usize {
        Self::q_count(&self.grid).pow(self.grid.n() as u32)
    }

    pub fn row(&self, qrow: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.values[qrow * len..(qrow + 1) * len]
    }

    pub fn get(&self, q: [i64; MAX_DIM], km: usize) -> Complex64 {
        self.values[self.q_row_index(q) * self.grid.len() + km]
    }
}

fn check_grid(setup: &MagneticSetup, symbol: &Symbol) -> Result<()> {
    if setup.grid() != symbol.grid() {
        return Err(Error::InvalidSpec("symbol grid does not match the setup grid".into()));
    }
    Ok(())
}

/// `Op^A(a)`: entry `(c + a, c)` equals
/// `e^{i Gamma(y_c, y_c + x_a)} N^{-n} sum_m e^{i x_a.xi_m} a(y_c + x_a/2, xi_m)`,
/// one inverse FFT in `xi` per midpoint row.
pub fn op_weyl(setup: &MagneticSetup, symbol: &Symbol) -> Result<CMatrix> {
    op_weyl_with(setup, &SegmentTable::new(setup), symbol)
}

pub fn op_weyl_with(setup: &MagneticSetup, table: &SegmentTable, symbol: &Symbol) -> Result<CMatrix> {
    check_grid(setup, symbol)?;
    let g = setup.grid();
    let len = g.len();
    let rows = symbol_shift_rows(symbol);
    let columns: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map(|c| {
            let mc = g.multi(c);
            let mut col = vec![Complex64::new(0.0, 0.0); len];
            for ka in 0..len {
                let a = g.centered_multi(ka);
                let q = [2 * mc[0] as i64 + a[0], 2 * mc[1] as i64 + a[1]];
                let r = g.flat_wrapped([mc[0] as i64 + a[0], mc[1] as i64 + a[1]]);
                col[r] = rows[symbol.q_row_index(q)][ka] * Complex64::from_polar(1.0, table.get(c, ka));
            }
            col
        })
        .collect();
    Ok(CMatrix::from_vec(len, len, columns.into_iter().flatten().collect()))
}

/// `||Op^{A + grad rho}(a) - e^{i rho(Q)} Op^A(a) e^{-i rho(Q)}||_HS / ||Op^A(a)||_HS`.
pub fn gauge_covariance_defect(setup: &MagneticSetup, symbol: &Symbol, rho: &Poly) -> Result<f64> {
    let g = setup.grid();
    let base = op_weyl(setup, symbol)?;
    let moved = op_weyl(&setup.gauge_transformed(rho)?, symbol)?;
    let phase: Vec<Complex64> = (0..g.len())
        .map(|k| Complex64::from_polar(1.0, rho.eval(&g.point(k)[..g.n()])))
        .collect();
    let conj = CMatrix::from_fn(g.len(), g.len(), |r, c| phase[r] * base[(r, c)] * phase[c].conj());
    let denom = base.norm();
    if denom == 0.0 {
        return Ok(moved.norm());
    }
    Ok((moved - conj).norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magweyl::fourier::{calibrated_weight, inverse_symplectic_fourier};
    use crate::magweyl::line_integral;
    use crate::magweyl::setup::FieldSpec;
    use crate::magweyl::weyl::weyl_family;

    fn gauss_symbol(grid: &Grid) -> Symbol {
        Symbol::from_fn(grid, |x, xi| {
            let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() + xi.iter().map(|v| v * v).sum::<f64>();
            Complex64::new((-r2 / 2.0).exp(), 0.3 * x[0] * (-r2 / 2.0).exp())
        })
    }

    /// Direct evaluation of the kernel formula, entry by entry.
    fn dense_oracle(setup: &MagneticSetup, f: impl Fn(&Point, &Point) -> Complex64) -> CMatrix {
        let g = setup.grid();
        let len = g.len();
        CMatrix::from_fn(len, len, |r, c| {
            let mr = g.multi(r);
            let mc = g.multi(c);
            let mut a = [0i64; MAX_DIM];
            for j in 0..g.n() {
                a[j] = g.centered_index((mr[j] + g.size() - mc[j]) % g.size());
            }
            let yc = g.point(c);
            let xa = g.displacement(a);
            let mut mid = [0.0; MAX_DIM];
            for j in 0..g.n() {
                mid[j] = yc[j] + xa[j] / 2.0;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for km in 0..len {
                let xi = g.frequency(g.centered_multi(km));
                acc += Complex64::from_polar(1.0, g.dot(&xa, &xi)) * f(&mid, &xi);
            }
            acc / len as f64 * Complex64::from_polar(1.0, line_integral(setup, &yc, &xa))
        })
    }

    #[test]
    fn unit_symbol_is_identity_and_position_symbol_is_multiplication() {
        let s = MagneticSetup::from_field(Grid::symmetric(2, 6).unwrap(), &FieldSpec::SymmetricGauge { b: 0.5 }).unwrap();
        let g = s.grid().clone();
        let id = op_weyl(&s, &Symbol::constant(&g, Complex64::new(1.0, 0.0))).unwrap();
        assert!((id - CMatrix::identity(36, 36)).norm() < 1e-10);
        let phi = |x: &Point| (x[0] - 0.5 * x[1]).sin() + 2.0;
        let m = op_weyl(&s, &Symbol::from_fn(&g, |x, _| Complex64::new(phi(x), 0.0))).unwrap();
        let diag = CMatrix::from_fn(36, 36, |r, c| if r == c { Complex64::new(phi(&g.point(r)), 0.0) } else { Complex64::new(0.0, 0.0) });
        assert!((m - diag).norm() < 1e-10);
    }

    #[test]
    fn fft_path_matches_dense_oracle() {
        for s in [
            MagneticSetup::zero_field(Grid::symmetric(1, 16).unwrap()).unwrap(),
            MagneticSetup::from_field(Grid::symmetric(2, 6).unwrap(), &FieldSpec::LandauLinear { b: 0.7 }).unwrap(),
        ] {
            let g = s.grid().clone();
            let sym = gauss_symbol(&g);
            let fast = op_weyl(&s, &sym).unwrap();
            let slow = dense_oracle(&s, |x, xi| {
                let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() + xi.iter().map(|v| v * v).sum::<f64>();
                Complex64::new((-r2 / 2.0).exp(), 0.3 * x[0] * (-r2 / 2.0).exp())
            });
            assert!((fast - slow).norm() < 1e-10);
        }
    }

    #[test]
    fn op_weyl_is_quantization_of_inverse_symplectic_transform() {
        let s = MagneticSetup::from_field(Grid::symmetric(2, 4).unwrap(), &FieldSpec::SymmetricGauge { b: 1.1 }).unwrap();
        let g = s.grid().clone();
        let sym = gauss_symbol(&g);
        let fam = weyl_family(&s, 3).unwrap();
        let fam = fam.rescaled(calibrated_weight(&g) / fam.sigma().weights()[0]).unwrap();
        let f = inverse_symplectic_fourier(&sym).unwrap();
        let via_pi = fam.quantize(&f).unwrap();
        let direct = op_weyl(&s, &sym).unwrap();
        assert!((via_pi - direct).norm() < 1e-10);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let s = MagneticSetup::zero_field(Grid::symmetric(1, 8).unwrap()).unwrap();
        let other = Symbol::constant(&Grid::symmetric(1, 6).unwrap(), Complex64::new(1.0, 0.0));
        assert!(op_weyl(&s, &other).is_err());
    }

    #[test]
    fn gauge_covariance_cases() {
        // 1D: any polynomial potential, Gaussian symbol well inside the box
        let a = vec![Poly::term(0.3, &[2]).add(&Poly::constant(0.5))];
        let s = MagneticSetup::new(Grid::centered(1, 32, 0.5).unwrap(), a, 8, 8).unwrap();
        let g = s.grid().clone();
        let sym = gauss_symbol(&g);
        assert!(gauge_covariance_defect(&s, &sym, &Poly::constant(2.5)).unwrap() < 1e-13);
        let dl = gauge_covariance_defect(&s, &sym, &Poly::linear(0, 0.7)).unwrap();
        assert!(dl < 1e-10, "{dl}");
        let quad = Poly::term(0.2, &[2]).add(&Poly::term(-0.05, &[3]));
        assert!(gauge_covariance_defect(&s, &sym, &quad).unwrap() < 1e-10);
        // 2D: periodic wrap-around entries are the only source of defect
        let s = MagneticSetup::from_field(Grid::centered(2, 16, 0.5).unwrap(), &FieldSpec::SymmetricGauge { b: 0.4 }).unwrap();
        let g = s.grid().clone();
        let bump = Symbol::from_fn(&g, |x, xi| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let w = if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 };
            Complex64::new(w * (-(xi[0] * xi[0] + xi[1] * xi[1]) / 2.0).exp(), 0.0)
        });
        let quad = Poly::term(0.2, &[2, 0]).add(&Poly::term(-0.1, &[1, 1]));
        assert!(gauge_covariance_defect(&s, &bump, &Poly::constant(1.0)).unwrap() < 1e-13);
        assert!(gauge_covariance_defect(&s, &bump, &quad).unwrap() < 1e-6);
    }
}

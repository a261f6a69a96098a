//! Numerical laboratory for tight continuous frames, coorbit norms, square
//! integrable operator families and the magnetic Weyl calculus on periodic
//! grids, together with computable compactness diagnostics.
//!
//! Everything lives in finite dimension: the index space is a weighted point
//! set ([`sigma::SampledSigma`]), states are vectors in `C^d` with the
//! standard inner product `<u, v> = sum_k u_k conj(v_k)` (linear in the first
//! slot), and operators are dense or monomial matrices.
//!
//! In finite dimension the completed coorbit space coincides with `C^d`
//! carrying the coorbit norm; no distributional extension is modelled.

pub mod compactness;
pub mod container;
pub mod error;
pub mod families;
pub mod frame;
pub mod linalg;
pub mod magweyl;
pub mod quantizer;
pub mod sigma;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use num_complex::Complex64;

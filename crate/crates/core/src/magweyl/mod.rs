//! Magnetic Weyl calculus on periodic grids.
//!
//! Vector potentials are polynomials evaluated in unwrapped coordinates, so
//! circulations and fluxes never wrap; identities that chain several
//! translations are exact only on states that vanish near the periodic
//! boundary.

pub mod fourier;
pub mod hs;
pub mod momentum;
pub mod opweyl;
pub mod quadrature;
pub mod setup;
pub mod weyl;

pub use quadrature::{flux_integral, line_integral, GaussLegendre};
pub use setup::{FieldSpec, Grid, MagneticSetup, Point, Poly, PolyTerm};
pub use weyl::{cocycle, composition_defect, weyl_family, weyl_system, CompositionReport, PhasePoint};
pub use fourier::{fourier_wigner, inverse_symplectic_fourier, symplectic_fourier};
pub use opweyl::{gauge_covariance_defect, op_weyl, Symbol};
pub use momentum::{apply_momentum_function, commutator_defect, commutator_refinement, empirical_orders, magnetic_momentum, momentum_function, psi_hat_from_symbol};
pub use hs::{hs_expand, HsExpansion};

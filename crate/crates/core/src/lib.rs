//! Numerical laboratory for a two-phase free boundary problem for harmonic
//! measure: Green's functions on two-sided domains, harmonic-measure densities,
//! the ACF/Almgren/Monneau monotonicity suite with almost-monotonicity defect
//! measurement, tangent-plane and beta-number flatness analysis, the
//! improvement-of-flatness iteration, and the hodograph-transformed elliptic
//! system's algebra (ellipticity, coercivity, weight bookkeeping).
//!
//! Everything is desk scale: uniform Cartesian grids, cut-cell Dirichlet
//! solves, percent-level tolerances, and traces in the radius that can be
//! regression-fit against the theoretical decay rates.

pub mod blowup;
pub mod domains;
pub mod error;
pub mod flatness;
pub mod functionals;
pub mod geom;
pub mod grid;
pub mod hodograph;
pub mod optim;
pub mod trace;

pub use error::{Error, Result};

//! Complex geodesics of strongly linearly convex domains.

pub mod boundary;
pub mod canonical;
pub mod circle;
pub mod cvec;
pub mod domain;
pub mod error;
pub mod geodesic;
pub mod matfield;
pub mod rh;
pub mod taylor;
pub mod verify;

pub use num_complex::Complex64 as C64;

pub use circle::{poincare_distance, CircleField, CircleFieldJson};
pub use domain::{BoundaryDatum, Domain, DomainConfig};
pub use error::{Error, Result};

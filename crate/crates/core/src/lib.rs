//! Bingham-closure moments, the singular bulk potential on the (F1, F2) slice,
//! radial defect profiles and the spectra of their second variation.

pub mod bulk;
pub mod closure;
pub mod error;
pub mod identity;
pub mod interp;
pub mod profile;
pub mod quadrature;
pub mod sphere;
pub mod stability;
pub mod types;

pub use error::{Error, Result};
pub use types::{BinghamCoeffs, MomentSet, OrderParams, QuadratureSpec, Scheme, F_MAX};

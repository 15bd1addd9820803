//! Pseudo-spectral laboratory for the forced subcritical dissipative
//! surface quasi-geostrophic equation on the 2-torus, with Littlewood-Paley
//! nudging, a determining-form solver and De Giorgi level-set diagnostics.

pub mod bounds;
pub mod degiorgi;
pub mod detform;
pub mod dynamics;
pub mod error;
pub mod lp;
pub mod nudging;
pub mod rng;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{PhysicalField, SpectralField, TorusGrid};

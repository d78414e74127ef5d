//! Pseudo-spectral tools for the 2D Boussinesq-Navier-Stokes system with
//! fractional dissipation `|D|^alpha` on the velocity and `|D|^beta` on the
//! temperature, posed on the torus `[0, 2pi)^2`.

pub mod boussinesq;
pub mod calibration;
pub mod commutators;
pub mod error;
pub mod init;
pub mod littlewood_paley;
pub mod region;
pub mod spectral;
pub mod transport_diffusion;

pub use error::{Error, Result};

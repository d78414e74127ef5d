//! Periodic grids, transforms and Fourier multipliers.

pub mod fft;
mod field;
mod grid;
mod multiplier;
mod ops;

pub use field::{
    forward_pair, forward_transform, inverse_pair, inverse_transform, lp_norm_vec, RealField,
    SpectralField,
};
pub(crate) use field::{check_exponent, lp_of_slice, same_grid};
pub use grid::Grid;
pub use multiplier::{apply_table, Axis, Multiplier, ZeroMode};
pub use ops::{
    advect, advect_hat, advect_many, biot_savart, curl, dealias, dealias_keeps, dealias_mask,
    divergence, divergence_defect, from_padded, gradient, padded_product, strip_nyquist,
    three_halves, to_padded,
};

//! Wavepacket tunnelling through a rectangular barrier treated as a weak
//! measurement of the spatial delay.
//!
//! Units throughout are hbar = m = 1. The crate is split into
//!
//! * [`numerics`]: grids, trapezoidal quadrature, the momentum/shift DFT pair, `erfc`;
//! * [`barrier`]: the rectangular-barrier transmission amplitude and its complex shift;
//! * [`wavepacket`]: Gaussian pulses, free and transmitted states;
//! * [`measurement`]: pre/post-selected von Neumann measurements and weak values;
//! * [`hartman`]: width scans and the exact-versus-asymptotic pulse comparison;
//! * [`cli`]: the `weakshift` command-line frontend.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplitude;
pub mod barrier;
pub mod cli;
pub mod error;
pub mod hartman;
pub mod measurement;
pub mod numerics;
pub mod wavepacket;

pub use amplitude::Amplitude;
pub use barrier::{RectangularBarrier, ShiftMethod, WeakShift};
pub use error::{Error, Result};
pub use numerics::{ComplexField, MomentumGrid, SpatialGrid, UniformGrid};

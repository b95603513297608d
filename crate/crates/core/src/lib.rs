//! Single-use work benefit of quantum channels, measurements and post-selected
//! measurements, with implicit and explicit (weight) batteries.
//!
//! Units: `k_B = ħ = 1` and the weight has `mg = 1`, so positions, energies and
//! temperatures share a unit. Entropies are in nats.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod measure;
pub mod optimize;
pub mod postselect;
pub mod qmath;
pub mod quadrature;
pub mod sampling;
pub mod thermo;
pub mod weight;

pub use error::{Error, Result};

//! Simulation of a trapped-ion quantum network node: rf-trap motion, pulsed
//! single-photon statistics, the photon-heralded ion-ion gate, teleportation
//! with its error budget, and scaling estimates for repeaters and cluster states.

// Domain checks are written as negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod gate;
pub mod io;
pub mod photon;
pub mod quantum;
pub mod rng;
pub mod scaling;
pub mod teleport;
pub mod trap;
pub mod units;

pub use error::{Error, Result};
pub use exec::Exec;

//! Downlink multi-group multicasting with multiple distributed reconfigurable
//! intelligent surfaces (RISs).
//!
//! Two inter-group interference management schemes are implemented:
//!
//! * [`bd`]: block-diagonalization beamforming with a max-min RIS phase design
//!   solved by semidefinite relaxation ([`sdr`]) inside an alternating loop.
//! * [`mtzf`]: multicasting-tailored zero-forcing on per-group representative
//!   channels with a closed-form, loss-minimizing RIS phase design.
//!
//! [`channel`] synthesizes Rician links from 3D geometry, [`system`] holds the
//! rate mathematics shared by both schemes and [`harness`] runs seeded Monte
//! Carlo sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bd;
pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mtzf;
pub mod sdr;
pub mod system;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};

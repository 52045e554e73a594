//! Gaussian fermionic states in covariance-matrix and Jordan-Wigner form.
//!
//! Modules cover antisymmetric-matrix kernels ([`matalg`]), covariance
//! matrices ([`gfs_cm`]), dense Fock-space states ([`jw_fock`]), the local
//! standard form ([`glu_standard`]), SLOCC normal forms and classes
//! ([`slocc`]), local protocols ([`locc_sim`]) and Gaussian channels
//! ([`channels`]).

pub mod channels;
pub mod error;
pub mod gfs_cm;
pub mod glu_standard;
pub mod io;
pub mod jw_fock;
pub mod locc_sim;
pub mod matalg;
pub mod random;
pub mod slocc;

pub use error::{Error, Result};
pub use nalgebra;
pub use num_complex;

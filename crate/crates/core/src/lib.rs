//! Numerical laboratory for commutants of hermitian operator tuples modulo
//! normed ideals.
//!
//! Infinite banded operators are represented by their leading corners. All
//! routines here are deterministic and allocation-only (`no_std` + `alloc`);
//! file formats, configuration and the command line live in `commutant-lab`.
//!
//! - [`gauges`]: symmetric gauge functions, singular values, conjugate gauges.
//! - [`idealops`]: operator models, tuples, commutators and commutant norms.
//! - [`qau`]: quasicentral approximate units and their optimization.
//! - [`functionals`]: trace-part and tail-state functionals, predual norms.
//! - [`lebesgue`]: recovery of the ultraweak part and its certificates.

#![no_std]

extern crate alloc;

pub mod error;
pub mod functionals;
pub mod gauges;
pub mod idealops;
pub mod lebesgue;
pub mod limits;
pub mod linalg;
pub mod qau;

pub use error::Error;
pub use gauges::{GaugeFamily, GaugeSpec};
pub use idealops::{HermitianTuple, Operator, OperatorModel};
pub use linalg::CMatrix;
pub use num_complex::Complex64;

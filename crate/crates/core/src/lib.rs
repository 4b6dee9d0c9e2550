//! Finite elements on deformable domains: boundary differential operators,
//! boundary-tracking mesh motion, first-order domain perturbation, and a
//! periodic bubble-in-channel application with shape sensitivities.

pub mod ad;
pub mod bubble;
pub mod cli;
pub mod dbp;
pub mod error;
pub mod exec;
pub mod fem;
pub mod mesh;
pub mod motion;
pub mod selftest;
pub mod surface;

pub use error::{Error, Result};
pub use exec::Execution;

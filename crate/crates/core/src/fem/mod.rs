//! Finite-element infrastructure: spaces, block layouts, kernel assembly
//! with exact Jacobians, sparse direct solves and Newton iteration.

pub mod assembly;
pub mod basis;
pub mod layout;
pub mod linsolve;
pub mod newton;
pub mod problems;
pub mod quadrature;
pub mod space;

pub use assembly::{assemble, jacobian_fd_error, Assembly, Kernel, WeakForm};
pub use layout::{BlockLayout, BlockVector};
pub use linsolve::{apply_point_constraint, solve_linear, solve_sparse, BlockSystem};
pub use newton::{newton_solve, NewtonReport, NewtonSettings};
pub use space::{Degree, Space};

//! Steady periodic bubble train in a 2D channel: the nonlinear free-surface
//! Stokes problem, its first-order response to a transverse shift of the
//! bubble, and the finite-difference validation of that response.

mod common;
mod export;
mod first;
mod sweep;
mod zeroth;

pub use export::{write_sweep_csv, write_vtk, SWEEP_HEADER};
pub use first::{FirstProblem, FirstState};
pub use sweep::{sensitivity_validation, SweepReport, SweepRow};
pub use zeroth::{solve_zeroth, solve_zeroth_from, ZerothProblem, ZerothState};

use crate::error::{Error, Result};
use crate::fem::NewtonSettings;
use crate::mesh::{build_channel_mesh, ChannelGeometry, Mesh2D};
use std::f64::consts::PI;

/// Physical and numerical parameters of one bubble case.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseConfig {
    /// capillary number
    pub ca: f64,
    /// bubble area
    pub v_b: f64,
    /// channel period
    pub length: f64,
    /// transverse offset of the bubble centroid
    pub eps: f64,
    pub mesh_h: f64,
    pub newton: NewtonSettings,
    /// pressure reference point; defaults to the inlet vertex closest to the axis
    pub x_p: Option<[f64; 2]>,
}

impl CaseConfig {
    pub fn new(ca: f64, v_b: f64, length: f64, eps: f64, mesh_h: f64) -> Self {
        CaseConfig {
            ca,
            v_b,
            length,
            eps,
            mesh_h,
            newton: NewtonSettings { abs_tol: 1e-10, rel_tol: 1e-13, max_iter: 25, damping: 1.0 },
            x_p: None,
        }
    }

    /// Radius of the circle with area `V_B`.
    pub fn radius(&self) -> f64 {
        (self.v_b / PI).sqrt()
    }

    pub fn geometry(&self) -> ChannelGeometry {
        ChannelGeometry { length: self.length, radius: self.radius(), center_y: self.eps, h: self.mesh_h }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ca > 0.0 && self.ca.is_finite()) {
            return Err(Error::Config(format!("Ca must be positive, got {}", self.ca)));
        }
        if !(self.v_b > 0.0 && self.v_b < self.length) {
            return Err(Error::Config(format!("V_B must lie in (0, L), got {}", self.v_b)));
        }
        self.newton.validate()
    }

    /// Reference mesh with a circular hole of area `V_B` centred at `(L/2, eps)`.
    pub fn build_mesh(&self) -> Result<Mesh2D> {
        self.validate()?;
        build_channel_mesh(self.geometry())
    }
}

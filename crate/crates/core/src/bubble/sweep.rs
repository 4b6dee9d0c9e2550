use super::first::FirstProblem;
use super::zeroth::{solve_zeroth, solve_zeroth_from, ZerothProblem};
use super::CaseConfig;
use crate::error::Result;
use crate::exec::Execution;

/// Smallest derivative magnitude used to normalise the mismatch.
const MISMATCH_FLOOR: f64 = 1e-8;

/// One offset of a sensitivity sweep. Fields are NaN when a sub-solve failed.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub f0: f64,
    pub f1: f64,
    /// centred difference of `f0` in the offset
    pub dfd_eps: f64,
    /// derivative of `f0` from the linearised discrete zeroth-order system
    pub tangent: f64,
    pub v0: f64,
    pub dp0: f64,
    pub pg0: f64,
    pub v1: f64,
    pub mismatch: f64,
    pub failure: Option<String>,
}

impl SweepRow {
    fn failed(eps: f64, msg: String) -> Self {
        let nan = f64::NAN;
        SweepRow {
            eps,
            f0: nan,
            f1: nan,
            dfd_eps: nan,
            tangent: nan,
            v0: nan,
            dp0: nan,
            pg0: nan,
            v1: nan,
            mismatch: nan,
            failure: Some(msg),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Largest relative mismatch, infinite if any row failed.
    pub fn max_mismatch(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| if r.failure.is_some() { f64::INFINITY } else { r.mismatch })
            .fold(0.0, f64::max)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }
}

fn sweep_point(base: &CaseConfig, eps: f64, d_eps: f64, exec: Execution) -> Result<SweepRow> {
    let mut cfg = base.clone();
    cfg.eps = eps;
    let mesh = cfg.build_mesh()?;
    let (zp, zs) = solve_zeroth(&mesh, &cfg, exec)?;
    let first = FirstProblem::new(&zp, &zs)?.solve(exec)?;
    let tangent = zp.tangent(&zs, exec)?;
    let mut f = [0.0; 2];
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let mut shifted = cfg.clone();
        shifted.eps = eps + sign * d_eps;
        let p = ZerothProblem::new(&mesh, &shifted)?;
        f[k] = solve_zeroth_from(&p, zs.state.clone(), exec)?.f0;
    }
    let dfd = (f[0] - f[1]) / (2.0 * d_eps);
    log::info!("eps = {eps}: f0 = {:.6e}, f1 = {:.6e}, dfd = {dfd:.6e}", zs.f0, first.f1);
    Ok(SweepRow {
        eps,
        f0: zs.f0,
        f1: first.f1,
        dfd_eps: dfd,
        tangent: tangent[zp.off.f],
        v0: zs.v0,
        dp0: zs.dp0,
        pg0: zs.pg0,
        v1: first.v1,
        mismatch: (first.f1 - dfd).abs() / dfd.abs().max(MISMATCH_FLOOR),
        failure: None,
    })
}

/// Compares the first-order force `f1` with the centred difference of `f0`
/// over `eps_grid`. Each offset is solved on its own mesh; the shifted solves
/// reuse that mesh and move the bubble through the interface motion.
/// Offsets run through `outer`, assembly inside each solve through `inner`.
pub fn sensitivity_validation(
    base: &CaseConfig,
    eps_grid: &[f64],
    d_eps: f64,
    outer: Execution,
    inner: Execution,
) -> SweepReport {
    let rows = outer.map(eps_grid.len(), |i| {
        let eps = eps_grid[i];
        sweep_point(base, eps, d_eps, inner).unwrap_or_else(|e| {
            log::warn!("eps = {eps}: {e}");
            SweepRow::failed(eps, e.to_string())
        })
    });
    SweepReport { rows }
}

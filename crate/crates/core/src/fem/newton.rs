use super::assembly::WeakForm;
use super::linsolve::solve_sparse;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// initial step factor
    pub damping: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { abs_tol: 1e-10, rel_tol: 1e-14, max_iter: 25, damping: 1.0 }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_iter >= 1 && self.damping > 0.0) {
            return Err(Error::Config(format!("invalid Newton settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonReport {
    /// number of Newton steps taken
    pub iterations: usize,
    /// residual norm before each step and at the end
    pub history: Vec<f64>,
}

const MAX_HALVINGS: usize = 8;

/// Damped Newton iteration. A trial step whose residual grows, or which
/// inverts an element, is halved up to eight times.
pub fn newton_solve<F: WeakForm + ?Sized>(
    form: &F,
    initial: Vec<f64>,
    settings: &NewtonSettings,
    exec: Execution,
) -> Result<(Vec<f64>, NewtonReport)> {
    settings.validate()?;
    let n = form.layout().len();
    let mut x = initial;
    let mut report = NewtonReport::default();
    let mut sys = form.assemble(&x, true, exec)?;
    let mut r = sys.norm();
    let r0 = r;
    report.history.push(r);
    log::info!("newton 0: |r| = {r:.3e}");
    loop {
        if !r.is_finite() {
            break;
        }
        if r <= settings.abs_tol || (report.iterations > 0 && r <= settings.rel_tol * r0) {
            return Ok((x, report));
        }
        if report.iterations == settings.max_iter {
            break;
        }
        let rhs: Vec<f64> = sys.residual.iter().map(|v| -v).collect();
        let dx = solve_sparse(n, &sys.triplets, &rhs, Some(form.layout()))?;
        let mut step = settings.damping;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            match form.assemble(&trial, false, exec) {
                Ok(a) if a.norm() < r || a.norm() <= settings.abs_tol => {
                    accepted = Some(trial);
                    break;
                }
                Ok(_) | Err(Error::InvertedElement { .. }) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        report.iterations += 1;
        let Some(trial) = accepted else {
            log::warn!("newton {}: no decrease after {MAX_HALVINGS} halvings", report.iterations);
            break;
        };
        x = trial;
        sys = form.assemble(&x, true, exec)?;
        r = sys.norm();
        report.history.push(r);
        log::info!("newton {}: |r| = {r:.3e} (step {step})", report.iterations);
    }
    Err(Error::Convergence { iterations: report.iterations, last_residual: r, history: report.history })
}

//! Fixtures shared by the integration and acceptance targets.
#![allow(dead_code)]

use defdom::bubble::{solve_zeroth, CaseConfig, FirstProblem};
use defdom::dbp::{MixedBc, RobinPoisson};
use defdom::fem::{jacobian_fd_error, WeakForm};
use defdom::mesh::build_disk_mesh;
use defdom::motion::BaleProblem;
use defdom::{Execution, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEQ: Execution = Execution::Sequential;

/// Centred-bubble case from the validation figure.
pub fn validation_case(eps: f64, mesh_h: f64) -> CaseConfig {
    CaseConfig::new(0.2, std::f64::consts::PI * 0.04, 3.0, eps, mesh_h)
}

pub fn jitter(x: &[f64], size: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x.iter().map(|v| v + size * rng.gen_range(-1.0..1.0)).collect()
}

fn check<F: WeakForm>(name: &'static str, form: &F, state: &[f64], seed: u64) -> Result<(&'static str, f64)> {
    Ok((name, jacobian_fd_error(form, state, 50, seed, SEQ)?))
}

/// Worst FD mismatch of every nonlinear or linear weak form in the crate,
/// each evaluated at a perturbed, nontrivial state.
pub fn jacobian_suite(seed: u64) -> Result<Vec<(&'static str, f64)>> {
    let mut out = Vec::new();

    let case = validation_case(0.05, 0.12);
    let mesh = case.build_mesh()?;
    let (zp, zs) = solve_zeroth(&mesh, &case, SEQ)?;
    out.push(check("zeroth bubble system", &zp, &jitter(&zs.state, 1e-3, seed), seed)?);
    let fp = FirstProblem::new(&zp, &zs)?;
    let n = fp.layout().len();
    out.push(check("first-order bubble system", &fp, &jitter(&vec![0.0; n], 0.1, seed + 1), seed)?);

    let disk = build_disk_mesh(1.0, 0.2, true)?;
    let edges: Vec<usize> = (0..disk.boundary.len()).collect();
    let g: Vec<f64> = (0..disk.n_nodes()).map(|i| 0.3 * disk.position(i, None)[0]).collect();
    let bale = BaleProblem::new(&disk, &edges, g)?;
    let n = bale.layout().len();
    out.push(check("boundary mesh motion", &bale, &jitter(&vec![0.0; n], 0.05, seed + 2), seed)?);

    let gamma = |x: [f64; 2]| (1.0 + 0.5 * x[0] * x[1], [0.5 * x[1], 0.5 * x[0]]);
    let sigma = |_: [f64; 2], p: f64| (p * p, 2.0 * p);
    let bc = MixedBc { c: -1.0, gamma: &gamma, sigma: &sigma };
    let rp = RobinPoisson::new(&disk, &bc)?;
    let n = rp.layout().len();
    out.push(check("Robin-Poisson", &rp, &jitter(&vec![0.5; n], 0.3, seed + 3), seed)?);
    Ok(out)
}

/// Velocity and pressure L2 errors of the mixed solver against the
/// divergence-free field `curl (x(1-x)y(1-y))^2` with `p = sin(pi x) cos(pi y)`
/// on the unit square with `n x n` cells.
pub fn stokes_mms_errors(n: usize) -> Result<(f64, f64)> {
    use defdom::fem::problems::{l2_error, solve_stokes_dirichlet};
    use std::f64::consts::PI;
    let q = |t: f64| [t * t * (1.0 - t).powi(2), 2.0 * t - 6.0 * t * t + 4.0 * t.powi(3), 2.0 - 12.0 * t + 12.0 * t * t, -12.0 + 24.0 * t];
    let u = move |p: [f64; 2]| {
        let (a, b) = (q(p[0]), q(p[1]));
        [a[0] * b[1], -a[1] * b[0]]
    };
    let pres = |p: [f64; 2]| (PI * p[0]).sin() * (PI * p[1]).cos();
    let f = move |p: [f64; 2]| {
        let (a, b) = (q(p[0]), q(p[1]));
        let lap = [a[2] * b[1] + a[0] * b[3], -(a[3] * b[0] + a[1] * b[2])];
        let gp = [PI * (PI * p[0]).cos() * (PI * p[1]).cos(), -PI * (PI * p[0]).sin() * (PI * p[1]).sin()];
        [gp[0] - lap[0], gp[1] - lap[1]]
    };
    let mesh = defdom::mesh::build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], n, n)?;
    let x_ref = [0.5, 0.5];
    let sol = solve_stokes_dirichlet(&mesh, f, x_ref, pres(x_ref), SEQ)?;
    let ex = l2_error(&mesh, &sol.velocity, sol.state.block("ux")?, |p| u(p)[0]);
    let ey = l2_error(&mesh, &sol.velocity, sol.state.block("uy")?, |p| u(p)[1]);
    let ep = l2_error(&mesh, &sol.pressure, sol.state.block("p")?, pres);
    Ok((ex.hypot(ey), ep))
}

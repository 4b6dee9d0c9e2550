//! Operator and perturbation checks shared by the `selftest` command and the
//! acceptance suite. Each check reports a measured value against a bound.

use crate::dbp::{contour_variation_discrepancy, form_discrepancy};
use crate::error::Result;
use crate::mesh::{build_disk_mesh, build_rectangle_mesh};
use crate::surface::{
    boundary_l2_error, check_reciprocal_volume, check_stokes_boundary, check_stokes_volume, recover_curvature, Field,
    Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    /// `value` must be at most `bound` (residuals) or at least `bound` (orders)
    pub at_least: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, bound: f64) -> Self {
        Check { name, value, bound, at_least: false }
    }

    fn above(name: &'static str, value: f64, bound: f64) -> Self {
        Check { name, value, bound, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.bound
        } else {
            self.value <= self.bound
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let op = if self.at_least { ">=" } else { "<=" };
        write!(f, "{verdict} {}: {:.3e} (bound {op} {:.1e})", self.name, self.value, self.bound)
    }
}

/// Smallest observed order over consecutive halvings of `h`.
pub fn observed_order(h: &[f64], err: &[f64]) -> f64 {
    h.windows(2)
        .zip(err.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .fold(f64::INFINITY, f64::min)
}

fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// Random cubic with its gradient.
fn cubic(rng: &mut ChaCha8Rng) -> impl Fn(Vec2) -> (f64, Vec2) {
    let c: [f64; 10] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    move |p: Vec2| {
        let (x, y) = (p[0], p[1]);
        (
            c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y + c[6] * x * x * x + c[7] * x * x * y
                + c[8] * x * y * y
                + c[9] * y * y * y,
            [
                c[1] + 2.0 * c[3] * x + c[4] * y + 3.0 * c[6] * x * x + 2.0 * c[7] * x * y + c[8] * y * y,
                c[2] + c[4] * x + 2.0 * c[5] * y + c[7] * x * x + 2.0 * c[8] * x * y + 3.0 * c[9] * y * y,
            ],
        )
    }
}

/// Volume Stokes and reciprocal residuals for random cubics on a distorted
/// straight-edged mesh.
pub fn volume_identities(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = build_rectangle_mesh([-0.5, 0.0], [1.0, 1.2], 5, 4)?;
    // shear the corners so that cells are not right triangles
    for v in m.vertices.iter_mut() {
        v[0] += 0.2 * v[1];
    }
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let a = cubic(&mut rng);
        let b = cubic(&mut rng);
        worst = worst.max(norm(check_stokes_volume(&m, &a, None)));
        worst = worst.max(norm(check_reciprocal_volume(&m, &a, &b, None)));
    }
    Ok(Check::below("volume Stokes and reciprocal residual", worst, 1e-12))
}

const LEVELS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Order of `|oint D_S phi|` on discretised circles under mesh halving.
pub fn boundary_stokes_order(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = cubic(&mut rng);
    let mut err = Vec::new();
    for h in LEVELS {
        let m = build_disk_mesh(1.0, h, true)?;
        let edges: Vec<usize> = (0..m.boundary.len()).collect();
        err.push(norm(check_stokes_boundary(&m, &edges, Field::Domain(&phi), None)?));
    }
    log::info!("boundary Stokes residuals {err:?}");
    Ok(Check::above("boundary Stokes residual order", observed_order(&LEVELS, &err), 1.9))
}

/// Order of the L2 error of the recovered mean curvature vector on a circle.
pub fn curvature_order() -> Result<Check> {
    let a = 0.6;
    let mut err = Vec::new();
    for h in LEVELS {
        let m = build_disk_mesh(a, h * a, true)?;
        let edges: Vec<usize> = (0..m.boundary.len()).collect();
        let k = recover_curvature(&m, &edges, None)?;
        err.push(boundary_l2_error(&m, &edges, &k, |x| [-x[0] / (a * a), -x[1] / (a * a)], None)?);
    }
    log::info!("curvature errors {err:?}");
    Ok(Check::above("curvature vector L2 order", observed_order(&LEVELS, &err), 1.9))
}

pub fn contour_variation(seed: u64) -> Check {
    Check::below("contour normal variation, two constructions", contour_variation_discrepancy(1000, seed), 1e-14)
}

pub fn perturbation_forms(seed: u64) -> Result<Check> {
    let m = build_disk_mesh(1.0, 0.1, true)?;
    let edges: Vec<usize> = (0..m.boundary.len()).collect();
    let mut worst = 0.0f64;
    for s in 0..4 {
        worst = worst.max(form_discrepancy(&m, &edges, seed.wrapping_add(s))?);
    }
    Ok(Check::below("general vs normal perturbation forms", worst, 1e-12))
}

/// All operator and perturbation checks.
pub fn run(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        volume_identities(seed)?,
        boundary_stokes_order(seed)?,
        curvature_order()?,
        contour_variation(seed),
        perturbation_forms(seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_exact_power_law() {
        let h = [0.4, 0.2, 0.1];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powi(3)).collect();
        assert!((observed_order(&h, &e) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn checks_report_direction() {
        assert!(Check::below("r", 1e-13, 1e-12).passed());
        assert!(!Check::above("o", 1.5, 1.9).passed());
        assert!(Check::above("o", 2.0, 1.9).to_string().starts_with("PASS"));
    }
}

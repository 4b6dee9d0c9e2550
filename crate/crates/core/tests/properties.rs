use defdom::dbp::{
    contour_normal_variation, contour_normal_variation_via_tangent, form_discrepancy, perturbed_boundary_integral,
    perturbed_domain_integral, Form, Phi, Rho,
};
use defdom::fem::solve_sparse;
use defdom::mesh::{build_disk_mesh, Mesh2D};
use defdom::Execution;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use std::sync::OnceLock;

fn disk() -> &'static (Mesh2D, Vec<usize>) {
    static DISK: OnceLock<(Mesh2D, Vec<usize>)> = OnceLock::new();
    DISK.get_or_init(|| {
        let m = build_disk_mesh(1.0, 0.25, true).unwrap();
        let e = (0..m.boundary.len()).collect();
        (m, e)
    })
}

/// Normal displacement `sum_k a_k cos(k theta) + b_k sin(k theta)` at every node.
fn fourier(m: &Mesh2D, c: &[f64]) -> Vec<f64> {
    (0..m.n_nodes())
        .map(|i| {
            let p = m.position(i, None);
            let t = p[1].atan2(p[0]);
            c.chunks(2).enumerate().map(|(k, ab)| ab[0] * (k as f64 * t).cos() + ab[1] * (k as f64 * t).sin()).sum()
        })
        .collect()
}

fn field(p: [f64; 2]) -> (f64, [f64; 2]) {
    (1.0 + p[0] * p[1] + p[0] * p[0], [p[1] + 2.0 * p[0], p[0]])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn first_order_changes_are_linear_in_the_displacement(
        c1 in prop::collection::vec(-1.0f64..1.0, 6),
        c2 in prop::collection::vec(-1.0f64..1.0, 6),
        a in -2.0f64..2.0,
    ) {
        let (m, e) = disk();
        let r1 = fourier(m, &c1);
        let r2 = fourier(m, &c2);
        let mix: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + y).collect();
        let dom = |r: &[f64]| perturbed_domain_integral(m, Phi::Analytic(&field), e, Rho::Normal(r), Form::Normal).unwrap().delta;
        let bnd = |r: &[f64]| perturbed_boundary_integral(m, e, Phi::Analytic(&field), Rho::Normal(r), Form::Normal).unwrap().delta;
        let tol = 1e-11 * (1.0 + a.abs());
        prop_assert!((dom(&mix) - a * dom(&r1) - dom(&r2)).abs() < tol);
        prop_assert!((bnd(&mix) - a * bnd(&r1) - bnd(&r2)).abs() < tol);
    }

    #[test]
    fn normal_displacement_in_either_form_gives_the_same_change(seed in any::<u64>()) {
        let (m, e) = disk();
        prop_assert!(form_discrepancy(m, e, seed).unwrap() < 1e-12);
    }

    #[test]
    fn contour_normal_variation_constructions_agree(
        theta in 0.0f64..std::f64::consts::TAU,
        phi in 0.1f64..3.0,
        g in prop::array::uniform9(-3.0f64..3.0),
    ) {
        let n = Vector3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos());
        let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let n_s = n.cross(&helper).normalize();
        let p = Matrix3::identity() - n * n.transpose();
        let g = p * Matrix3::from_row_slice(&g);
        let a = contour_normal_variation(&n, &n_s, &g);
        let b = contour_normal_variation_via_tangent(&n, &n_s, &g);
        prop_assert!((a - b).norm() < 1e-13 * (1.0 + g.norm()));
    }

    #[test]
    fn parallel_map_preserves_order(n in 0usize..500) {
        let f = |i: usize| (i as f64).sqrt().sin();
        prop_assert_eq!(Execution::Parallel.map(n, f), Execution::Sequential.map(n, f));
    }

    #[test]
    fn sparse_solve_inverts_diagonally_dominant_systems(
        vals in prop::collection::vec((0usize..12, 0usize..12, -1.0f64..1.0), 0..40),
        rhs in prop::collection::vec(-5.0f64..5.0, 12),
    ) {
        let n = 12;
        let mut trip = vals.clone();
        let mut diag = vec![1.0; n];
        for &(i, _, v) in &vals {
            diag[i] += v.abs();
        }
        trip.extend(diag.iter().enumerate().map(|(i, d)| (i, i, *d)));
        let x = solve_sparse(n, &trip, &rhs, None).unwrap();
        let mut ax = vec![0.0; n];
        for &(i, j, v) in &trip {
            ax[i] += v * x[j];
        }
        for i in 0..n {
            prop_assert!((ax[i] - rhs[i]).abs() < 1e-10);
        }
    }
}

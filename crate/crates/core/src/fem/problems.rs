//! Model problems on fixed meshes: mass matrices, Poisson with Dirichlet
//! data, and Stokes with the quadratic/linear element pair.

use super::assembly::{assemble, Assembly, Kernel};
use super::basis::{field_grad, interp, TriMap, TriTable};
use super::layout::{BlockLayout, BlockVector};
use super::linsolve::{apply_point_constraint, BlockSystem};
use super::space::{Degree, Space};
use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::Mesh2D;

fn check_cell<S: Scalar>(c: usize, map: &TriMap<S>) -> Result<()> {
    let det = map.det.value();
    if det <= 0.0 {
        return Err(Error::InvertedElement { cell: c, det });
    }
    Ok(())
}

/// Nodes of a cell for the given degree (corners only for P1).
fn nodes(mesh: &Mesh2D, c: usize) -> [usize; 6] {
    mesh.cell_nodes(c)
}

/// Mass matrix of a scalar space as triplets.
pub fn mass_matrix(mesh: &Mesh2D, space: &Space) -> Vec<(usize, usize, f64)> {
    let tab = TriTable::new(4);
    let mut t = Vec::new();
    for c in 0..mesh.cells.len() {
        let x = mesh.cell_coords(c, None);
        let nd = nodes(mesh, c);
        for q in 0..tab.len() {
            let map = TriMap::new(&x, &tab.d2[q]);
            let w = tab.w[q] * map.det;
            let vals: Vec<(usize, f64)> = match space.degree {
                Degree::P1 => (0..3).filter_map(|a| space.dof(nd[a]).map(|d| (d, tab.n1[q][a]))).collect(),
                Degree::P2 => (0..6).filter_map(|a| space.dof(nd[a]).map(|d| (d, tab.n2[q][a]))).collect(),
            };
            for &(i, a) in &vals {
                for &(j, b) in &vals {
                    t.push((i, j, w * a * b));
                }
            }
        }
    }
    t
}

/// L2 norm of `u_h - exact` for a scalar field in `space`.
pub fn l2_error(mesh: &Mesh2D, space: &Space, values: &[f64], exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let tab = TriTable::new(5);
    let nodal = space.to_nodes(values);
    let mut e2 = 0.0;
    for c in 0..mesh.cells.len() {
        let x = mesh.cell_coords(c, None);
        let nd = nodes(mesh, c);
        for q in 0..tab.len() {
            let map = TriMap::new(&x, &tab.d2[q]);
            let p = [interp(&x.map(|v| v[0]), &tab.n2[q]), interp(&x.map(|v| v[1]), &tab.n2[q])];
            let uh = match space.degree {
                Degree::P1 => (0..3).map(|a| nodal[nd[a]] * tab.n1[q][a]).sum::<f64>(),
                Degree::P2 => (0..6).map(|a| nodal[nd[a]] * tab.n2[q][a]).sum::<f64>(),
            };
            e2 += tab.w[q] * map.det * (uh - exact(p)).powi(2);
        }
    }
    e2.sqrt()
}

/// `-div grad u = f` with P2 elements; residual `int grad v . grad u - v f`.
struct PoissonKernel<'a, F> {
    mesh: &'a Mesh2D,
    space: &'a Space,
    tab: TriTable,
    f: F,
}

impl<F: Fn([f64; 2]) -> f64 + Sync> Kernel<6> for PoissonKernel<'_, F> {
    fn len(&self) -> usize {
        self.mesh.cells.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 6], [f64; 6]) {
        let cols = self.mesh.cell_nodes(e).map(|i| self.space.dof(i));
        (cols, cols.map(|c| c.map_or(0.0, |k| state[k])))
    }

    fn eval<S: Scalar>(&self, e: usize, u: &[S; 6], out: &mut Vec<(usize, S)>) -> Result<()> {
        let x = self.mesh.cell_coords(e, None);
        let rows = self.mesh.cell_nodes(e).map(|i| self.space.dof(i));
        let mut r = [S::zero(); 6];
        for q in 0..self.tab.len() {
            let map = TriMap::<f64>::new(&x, &self.tab.d2[q]);
            check_cell(e, &map)?;
            let w = self.tab.w[q] * map.det;
            let gu = field_grad(&TriMap { det: S::cst(map.det), inv: map.inv.map(|r| r.map(S::cst)) }, u, &self.tab.d2[q]);
            let p = [interp(&x.map(|v| v[0]), &self.tab.n2[q]), interp(&x.map(|v| v[1]), &self.tab.n2[q])];
            let fq = (self.f)(p);
            for a in 0..6 {
                let g = map.grad(&self.tab.d2[q][a]);
                r[a] += (gu[0] * g[0] + gu[1] * g[1]) * w - self.tab.n2[q][a] * fq * w;
            }
        }
        for a in 0..6 {
            if let Some(i) = rows[a] {
                out.push((i, r[a]));
            }
        }
        Ok(())
    }
}

/// Solves `-div grad u = f`, `u = g` on every boundary edge, with P2 elements.
pub fn solve_poisson_dirichlet(
    mesh: &Mesh2D,
    f: impl Fn([f64; 2]) -> f64 + Sync,
    g: impl Fn([f64; 2]) -> f64,
    exec: Execution,
) -> Result<(Space, Vec<f64>)> {
    let space = Space::domain(mesh, Degree::P2, false);
    let n = space.len();
    let k = PoissonKernel { mesh, space: &space, tab: TriTable::new(4), f };
    let mut acc = Assembly::new(n);
    assemble(&k, &vec![0.0; n], true, exec, &mut acc)?;
    let layout = BlockLayout::new(&[("u", n)])?;
    let rhs: Vec<f64> = acc.residual.iter().map(|r| -r).collect();
    let mut sys = BlockSystem::new(layout, acc.triplets, rhs);
    let mut dofs = Vec::new();
    let mut vals = Vec::new();
    for e in &mesh.boundary {
        for i in e.v.into_iter().chain(e.mid) {
            let d = space.dof(i).expect("P2 space covers every node");
            if !dofs.contains(&d) {
                dofs.push(d);
                vals.push(g(mesh.vertices[i]));
            }
        }
    }
    sys.apply_dirichlet(&dofs, &vals);
    let x = sys.solve()?;
    Ok((space, x.data))
}

/// Stokes problem `-div(2 e(u)) + grad p = f`, `div u = 0` on a fixed mesh
/// with homogeneous velocity data on all boundaries and `p(x_ref) = p_ref`.
struct StokesKernel<'a, F> {
    mesh: &'a Mesh2D,
    vel: &'a Space,
    pre: &'a Space,
    off: [usize; 3],
    tab: TriTable,
    f: F,
}

impl<F> StokesKernel<'_, F> {
    fn cols(&self, e: usize) -> [Option<usize>; 15] {
        let nd = self.mesh.cell_nodes(e);
        let mut cols = [None; 15];
        for a in 0..6 {
            cols[a] = self.vel.dof(nd[a]).map(|d| self.off[0] + d);
            cols[6 + a] = self.vel.dof(nd[a]).map(|d| self.off[1] + d);
        }
        for a in 0..3 {
            cols[12 + a] = self.pre.dof(nd[a]).map(|d| self.off[2] + d);
        }
        cols
    }
}

impl<F: Fn([f64; 2]) -> [f64; 2] + Sync> Kernel<15> for StokesKernel<'_, F> {
    fn len(&self) -> usize {
        self.mesh.cells.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 15], [f64; 15]) {
        let cols = self.cols(e);
        (cols, cols.map(|c| c.map_or(0.0, |k| state[k])))
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 15], out: &mut Vec<(usize, S)>) -> Result<()> {
        let xs = self.mesh.cell_coords(e, None);
        let cols = self.cols(e);
        let ux: [S; 6] = std::array::from_fn(|a| x[a]);
        let uy: [S; 6] = std::array::from_fn(|a| x[6 + a]);
        let p: [S; 3] = std::array::from_fn(|a| x[12 + a]);
        let mut r = [S::zero(); 15];
        for q in 0..self.tab.len() {
            let m = TriMap::<f64>::new(&xs, &self.tab.d2[q]);
            check_cell(e, &m)?;
            let w = self.tab.w[q] * m.det;
            let ms = TriMap { det: S::cst(m.det), inv: m.inv.map(|r| r.map(S::cst)) };
            let gx = field_grad(&ms, &ux, &self.tab.d2[q]);
            let gy = field_grad(&ms, &uy, &self.tab.d2[q]);
            let pq = interp(&p, &self.tab.n1[q]);
            let pos = [interp(&xs.map(|v| v[0]), &self.tab.n2[q]), interp(&xs.map(|v| v[1]), &self.tab.n2[q])];
            let f = (self.f)(pos);
            let div = gx[0] + gy[1];
            let shear = gx[1] + gy[0];
            for a in 0..6 {
                let g = m.grad(&self.tab.d2[q][a]);
                let n = self.tab.n2[q][a];
                r[a] += ((gx[0] * 2.0 - pq) * g[0] + shear * g[1] - f[0] * n) * w;
                r[6 + a] += (shear * g[0] + (gy[1] * 2.0 - pq) * g[1] - f[1] * n) * w;
            }
            for a in 0..3 {
                r[12 + a] -= div * (self.tab.n1[q][a] * w);
            }
        }
        for k in 0..15 {
            if let Some(i) = cols[k] {
                out.push((i, r[k]));
            }
        }
        Ok(())
    }
}

/// Discrete Stokes solution on a fixed mesh.
pub struct StokesSolution {
    pub velocity: Space,
    pub pressure: Space,
    pub state: BlockVector,
}

/// Solves the Stokes problem with zero velocity on all boundary edges and
/// the pressure pinned to `p_ref` at the mesh node `x_ref`.
pub fn solve_stokes_dirichlet(
    mesh: &Mesh2D,
    f: impl Fn([f64; 2]) -> [f64; 2] + Sync,
    x_ref: [f64; 2],
    p_ref: f64,
    exec: Execution,
) -> Result<StokesSolution> {
    let vel = Space::domain_without(mesh, Degree::P2, &crate::mesh::Tag::ALL);
    let pre = Space::domain(mesh, Degree::P1, false);
    let layout = BlockLayout::new(&[("ux", vel.len()), ("uy", vel.len()), ("p", pre.len())])?;
    let off = [layout.offset("ux")?, layout.offset("uy")?, layout.offset("p")?];
    let k = StokesKernel { mesh, vel: &vel, pre: &pre, off, tab: TriTable::new(5), f };
    let mut acc = Assembly::new(layout.len());
    assemble(&k, &vec![0.0; layout.len()], true, exec, &mut acc)?;
    let rhs: Vec<f64> = acc.residual.iter().map(|r| -r).collect();
    let sys = BlockSystem::new(layout, acc.triplets, rhs);
    let sys = apply_point_constraint(sys, mesh, "p", &pre, x_ref, p_ref, "p_ref")?;
    let state = sys.solve()?;
    Ok(StokesSolution { velocity: vel, pressure: pre, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rectangle_mesh;
    use std::f64::consts::PI;

    #[test]
    fn p1_mass_matrix_sums_to_area() {
        let m = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 5, 4).unwrap();
        for deg in [Degree::P1, Degree::P2] {
            let s = Space::domain(&m, deg, false);
            let total: f64 = mass_matrix(&m, &s).iter().map(|t| t.2).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_laplace_reproduces_linear_fields() {
        let m = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 4, 4).unwrap();
        let g = |p: [f64; 2]| 0.3 + 2.0 * p[0] - 1.5 * p[1];
        let (s, u) = solve_poisson_dirichlet(&m, |_| 0.0, g, Execution::Sequential).unwrap();
        for d in 0..s.len() {
            assert!((u[d] - g(m.vertices[s.node(d)])).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_converges_at_third_order() {
        let exact = |p: [f64; 2]| (PI * p[0]).sin() * (PI * p[1]).sin();
        let f = |p: [f64; 2]| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin();
        let errs: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let m = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], n, n).unwrap();
                let (s, u) = solve_poisson_dirichlet(&m, f, |_| 0.0, Execution::Parallel).unwrap();
                l2_error(&m, &s, &u, exact)
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 2.8, "{errs:?}");
        }
    }

    #[test]
    fn unpinned_pressure_is_singular() {
        let m = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap();
        let vel = Space::domain_without(&m, Degree::P2, &crate::mesh::Tag::ALL);
        let pre = Space::domain(&m, Degree::P1, false);
        let layout = BlockLayout::new(&[("ux", vel.len()), ("uy", vel.len()), ("p", pre.len())]).unwrap();
        let off = [layout.offset("ux").unwrap(), layout.offset("uy").unwrap(), layout.offset("p").unwrap()];
        let k = StokesKernel { mesh: &m, vel: &vel, pre: &pre, off, tab: TriTable::new(5), f: |_| [1.0, 0.0] };
        let mut acc = Assembly::new(layout.len());
        assemble(&k, &vec![0.0; layout.len()], true, Execution::Sequential, &mut acc).unwrap();
        let sys = BlockSystem::new(layout, acc.triplets, acc.residual);
        match sys.solve() {
            Err(Error::Solver(msg)) => assert!(msg.contains("p "), "{msg}"),
            other => panic!("expected a singular system, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn point_constraint_rules() {
        let m = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 2, 2).unwrap();
        let s = Space::domain(&m, Degree::P1, false);
        let layout = BlockLayout::new(&[("p", s.len())]).unwrap();
        let sys = BlockSystem::new(layout, mass_matrix(&m, &s), vec![0.0; s.len()]);
        assert!(matches!(
            apply_point_constraint(sys.clone(), &m, "p", &s, [0.3, 0.3], 0.0, "m"),
            Err(Error::Constraint(_))
        ));
        let once = apply_point_constraint(sys, &m, "p", &s, [0.5, 0.5], 0.0, "m1").unwrap();
        assert!(matches!(
            apply_point_constraint(once, &m, "p", &s, [0.5, 0.5], 1.0, "m2"),
            Err(Error::Constraint(_))
        ));
    }
}

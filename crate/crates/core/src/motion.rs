//! Mesh motion: harmonic extension of boundary displacement into the domain
//! (ALE) and the boundary Poisson equation for the boundary displacement
//! with a purely normal source (BALE).

use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::assembly::{assemble, Assembly, Kernel, WeakForm};
use crate::fem::basis::{EdgeMap, EdgeTable, TriMap, TriTable};
use crate::fem::layout::BlockLayout;
use crate::fem::linsolve::solve_sparse;
use crate::fem::newton::{newton_solve, NewtonReport, NewtonSettings};
use crate::fem::space::{Degree, Space};
use crate::mesh::{Mesh2D, Tag};
use crate::surface::{is_closed, Vec2};

/// Laplace stiffness of a quadratic cell on the reference configuration.
pub fn ale_stiffness(mesh: &Mesh2D, c: usize, tab: &TriTable) -> [[f64; 6]; 6] {
    let x = mesh.cell_coords(c, None);
    let mut k = [[0.0; 6]; 6];
    for q in 0..tab.len() {
        let m = TriMap::new(&x, &tab.d2[q]);
        let g: [[f64; 2]; 6] = std::array::from_fn(|a| m.grad(&tab.d2[q][a]));
        let w = tab.w[q] * m.det;
        for a in 0..6 {
            for b in 0..6 {
                k[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    k
}

/// BALE residual of one boundary edge on the displaced configuration
/// `x = X + q`: `int grad_S q~ : grad_S q + g (q~ . n)` for the three edge
/// nodes (start, end, mid), with `g` linear along the edge.
pub fn bale_edge<S: Scalar>(xref: &[Vec2; 3], q: &[[S; 2]; 3], g: [S; 2], tab: &EdgeTable) -> [[S; 2]; 3] {
    let mut r = [[S::zero(); 2]; 3];
    for k in 0..tab.len() {
        let d = &tab.d[k];
        let mut xp = [S::zero(); 2];
        let mut qp = [S::zero(); 2];
        for a in 0..3 {
            for c in 0..2 {
                xp[c] += (q[a][c] + xref[a][c]) * d[a];
                qp[c] += q[a][c] * d[a];
            }
        }
        let js = (xp[0] * xp[0] + xp[1] * xp[1]).sqrt();
        // outward normal scaled by the arclength metric
        let nj = [xp[1], -xp[0]];
        let gq = g[0] * tab.n1[k][0] + g[1] * tab.n1[k][1];
        let w = tab.w[k];
        for a in 0..3 {
            for c in 0..2 {
                r[a][c] += qp[c] * (d[a] * w) / js + gq * nj[c] * (tab.n[k][a] * w);
            }
        }
    }
    r
}

/// Harmonic extension of boundary data: every node on a boundary edge takes
/// `data(node, tag)`, interior nodes solve the Laplace equation per component.
pub fn solve_ale(mesh: &Mesh2D, data: &dyn Fn(usize, Tag) -> Vec2, exec: Execution) -> Result<Vec<Vec2>> {
    let space = Space::domain_without(mesh, Degree::P2, &Tag::ALL);
    let mut fixed = vec![None; mesh.n_nodes()];
    for e in &mesh.boundary {
        for i in e.v.into_iter().chain(e.mid) {
            fixed[i] = Some(data(i, e.tag));
        }
    }
    let n = space.len();
    let tab = TriTable::new(2);
    let kern = AleKernel { mesh, space: &space, fixed: &fixed, tab: &tab };
    let layout = BlockLayout::new(&[("dx", n), ("dy", n)])?;
    let mut acc = Assembly::new(layout.len());
    assemble(&kern, &vec![0.0; layout.len()], true, exec, &mut acc)?;
    let rhs: Vec<f64> = acc.residual.iter().map(|r| -r).collect();
    let x = solve_sparse(layout.len(), &acc.triplets, &rhs, Some(&layout))?;
    Ok((0..mesh.n_nodes())
        .map(|i| match (space.dof(i), fixed[i]) {
            (Some(d), _) => [x[d], x[n + d]],
            (None, Some(v)) => v,
            (None, None) => [0.0, 0.0],
        })
        .collect())
}

struct AleKernel<'a> {
    mesh: &'a Mesh2D,
    space: &'a Space,
    fixed: &'a [Option<Vec2>],
    tab: &'a TriTable,
}

impl Kernel<12> for AleKernel<'_> {
    fn len(&self) -> usize {
        self.mesh.cells.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 12], [f64; 12]) {
        let nd = self.mesh.cell_nodes(e);
        let n = self.space.len();
        let mut cols = [None; 12];
        let mut vals = [0.0; 12];
        for a in 0..6 {
            for c in 0..2 {
                let k = 2 * a + c;
                cols[k] = self.space.dof(nd[a]).map(|d| c * n + d);
                vals[k] = match cols[k] {
                    Some(j) => state[j],
                    None => self.fixed[nd[a]].map_or(0.0, |v| v[c]),
                };
            }
        }
        (cols, vals)
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 12], out: &mut Vec<(usize, S)>) -> Result<()> {
        let k = ale_stiffness(self.mesh, e, self.tab);
        let nd = self.mesh.cell_nodes(e);
        let n = self.space.len();
        for a in 0..6 {
            let Some(d) = self.space.dof(nd[a]) else { continue };
            for c in 0..2 {
                let mut r = S::zero();
                for b in 0..6 {
                    r += x[2 * b + c] * k[a][b];
                }
                out.push((c * n + d, r));
            }
        }
        Ok(())
    }
}

/// Standalone BALE problem on a closed curve with a prescribed nodal source
/// `g`; the translation kernel is removed by `oint q dS = 0` on the reference curve.
pub struct BaleProblem<'a> {
    mesh: &'a Mesh2D,
    edges: Vec<usize>,
    pub space: Space,
    g: Vec<f64>,
    layout: BlockLayout,
    tab: EdgeTable,
}

impl<'a> BaleProblem<'a> {
    /// `g` is indexed by mesh node and read at edge end points (linear source).
    pub fn new(mesh: &'a Mesh2D, edges: &[usize], g: Vec<f64>) -> Result<Self> {
        if !is_closed(mesh, edges)? {
            return Err(Error::Topology("the BALE boundary must be a closed curve".into()));
        }
        let space = Space::on_edges(mesh, Degree::P2, edges);
        let n = space.len();
        let layout = BlockLayout::new(&[("qx", n), ("qy", n), ("anchor", 2)])?;
        Ok(BaleProblem { mesh, edges: edges.to_vec(), space, g, layout, tab: EdgeTable::new(4) })
    }

    fn cols(&self, e: usize) -> [Option<usize>; 8] {
        let be = &self.mesh.boundary[self.edges[e]];
        let n = self.space.len();
        let nodes = [be.v[0], be.v[1], be.mid.expect("quadratic mesh")];
        let mut cols = [None; 8];
        for a in 0..3 {
            let d = self.space.dof(nodes[a]).unwrap();
            cols[2 * a] = Some(d);
            cols[2 * a + 1] = Some(n + d);
        }
        cols[6] = Some(2 * n);
        cols[7] = Some(2 * n + 1);
        cols
    }

    pub fn solve(&self, settings: &NewtonSettings, exec: Execution) -> Result<(Vec<Vec2>, NewtonReport)> {
        let (x, rep) = newton_solve(self, vec![0.0; self.layout.len()], settings, exec)?;
        Ok((self.nodal(&x), rep))
    }

    /// Per-node displacement (zero off the curve).
    pub fn nodal(&self, x: &[f64]) -> Vec<Vec2> {
        let n = self.space.len();
        (0..self.mesh.n_nodes())
            .map(|i| self.space.dof(i).map_or([0.0, 0.0], |d| [x[d], x[n + d]]))
            .collect()
    }

    /// State vector holding the given per-node displacement.
    pub fn state(&self, q: &[Vec2]) -> Vec<f64> {
        let n = self.space.len();
        let mut x = vec![0.0; self.layout.len()];
        for d in 0..n {
            let v = q[self.space.node(d)];
            x[d] = v[0];
            x[n + d] = v[1];
        }
        x
    }
}

impl Kernel<8> for BaleProblem<'_> {
    fn len(&self) -> usize {
        self.edges.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 8], [f64; 8]) {
        let cols = self.cols(e);
        (cols, cols.map(|c| state[c.unwrap()]))
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 8], out: &mut Vec<(usize, S)>) -> Result<()> {
        let be = &self.mesh.boundary[self.edges[e]];
        let xref = self.mesh.edge_coords(be, None);
        let q = [[x[0], x[1]], [x[2], x[3]], [x[4], x[5]]];
        let g = [S::cst(self.g[be.v[0]]), S::cst(self.g[be.v[1]])];
        let mut r = bale_edge(&xref, &q, g, &self.tab);
        let cols = self.cols(e);
        let mut anchor = [S::zero(); 2];
        for k in 0..self.tab.len() {
            let js = EdgeMap::<f64>::new(&xref, self.tab.xi[k]).js;
            let w = self.tab.w[k] * js;
            for a in 0..3 {
                let na = self.tab.n[k][a] * w;
                for c in 0..2 {
                    r[a][c] += x[6 + c] * na;
                    anchor[c] += q[a][c] * na;
                }
            }
        }
        for a in 0..3 {
            for c in 0..2 {
                out.push((cols[2 * a + c].unwrap(), r[a][c]));
            }
        }
        out.push((cols[6].unwrap(), anchor[0]));
        out.push((cols[7].unwrap(), anchor[1]));
        Ok(())
    }
}

impl WeakForm for BaleProblem<'_> {
    fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    fn assemble(&self, state: &[f64], jacobian: bool, exec: Execution) -> Result<Assembly> {
        let mut acc = Assembly::new(self.layout.len());
        assemble(self, state, jacobian, exec, &mut acc)?;
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_channel_mesh, build_disk_mesh, quality, ChannelGeometry};

    fn channel() -> Mesh2D {
        build_channel_mesh(ChannelGeometry { length: 2.0, radius: 0.2, center_y: 0.05, h: 0.08 }).unwrap()
    }

    #[test]
    fn zero_boundary_data_gives_zero_displacement() {
        let m = channel();
        let d = solve_ale(&m, &|_, _| [0.0, 0.0], Execution::Sequential).unwrap();
        assert!(d.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn linear_boundary_data_extends_linearly() {
        let m = channel();
        let f = |p: Vec2| [0.1 * p[0] - 0.02 * p[1] + 0.01, 0.03 * p[0] + 0.05 * p[1]];
        let d = solve_ale(&m, &|i, _| f(m.vertices[i]), Execution::Parallel).unwrap();
        for (i, v) in d.iter().enumerate() {
            let e = f(m.vertices[i]);
            assert!((v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn ale_is_linear_in_boundary_data() {
        let m = channel();
        let a = |_: usize, t: Tag| if t == Tag::Bubble { [0.01, 0.0] } else { [0.0, 0.0] };
        let b = |i: usize, t: Tag| if t == Tag::Bubble { [0.0, (m.vertices[i][0]).sin() * 0.01] } else { [0.0, 0.0] };
        let da = solve_ale(&m, &a, Execution::Parallel).unwrap();
        let db = solve_ale(&m, &b, Execution::Parallel).unwrap();
        let dab = solve_ale(&m, &|i, t| {
            let (x, y) = (a(i, t), b(i, t));
            [2.0 * x[0] - 3.0 * y[0], 2.0 * x[1] - 3.0 * y[1]]
        }, Execution::Parallel)
        .unwrap();
        for i in 0..m.n_nodes() {
            for c in 0..2 {
                assert!((dab[i][c] - 2.0 * da[i][c] + 3.0 * db[i][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_source_with_anchor_gives_zero_motion() {
        let m = build_disk_mesh(0.5, 0.1, true).unwrap();
        let edges: Vec<usize> = (0..m.boundary.len()).collect();
        let p = BaleProblem::new(&m, &edges, vec![0.0; m.n_nodes()]).unwrap();
        let (q, _) = p.solve(&NewtonSettings::default(), Execution::Sequential).unwrap();
        assert!(q.iter().all(|v| v[0].abs() < 1e-14 && v[1].abs() < 1e-14));
    }

    #[test]
    fn uniform_source_scales_the_circle_and_keeps_spacing() {
        let r = 0.5;
        let m = build_disk_mesh(r, 0.1, true).unwrap();
        let edges: Vec<usize> = (0..m.boundary.len()).collect();
        let g = 0.3;
        let p = BaleProblem::new(&m, &edges, vec![g; m.n_nodes()]).unwrap();
        let (q, rep) = p.solve(&NewtonSettings::default(), Execution::Sequential).unwrap();
        assert!(rep.iterations < 10);
        let rep = quality(&m, Some(&q));
        assert!(rep.boundary_spacing_cv < 1e-10, "cv {}", rep.boundary_spacing_cv);
        // displaced nodes stay on one circle
        let radii: Vec<f64> = (0..m.n_nodes())
            .filter(|&i| p.space.dof(i).is_some() && i < m.n_corners())
            .map(|i| (m.vertices[i][0] + q[i][0]).hypot(m.vertices[i][1] + q[i][1]))
            .collect();
        let spread = radii.iter().cloned().fold(f64::MIN, f64::max) - radii.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-12);
    }

    #[test]
    fn open_curve_is_rejected() {
        let m = build_disk_mesh(0.5, 0.1, true).unwrap();
        let edges: Vec<usize> = (0..m.boundary.len() / 2).collect();
        assert!(matches!(BaleProblem::new(&m, &edges, vec![0.0; m.n_nodes()]), Err(Error::Topology(_))));
    }
}

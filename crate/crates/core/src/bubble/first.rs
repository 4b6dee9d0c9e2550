//! First-order system: linear response of the converged zeroth-order state
//! to a unit transverse shift of the bubble, posed on the zeroth-order
//! configuration with a normal boundary perturbation `rho1`.

use super::common::{InletKernel, PressureRef, WallKernel};
use super::zeroth::{ZerothProblem, ZerothState};
use crate::ad::Scalar;
use crate::error::Result;
use crate::exec::Execution;
use crate::fem::assembly::{assemble, Assembly, Kernel, WeakForm};
use crate::fem::basis::{edge_to_tri, EdgeMap, TriMap};
use crate::fem::{solve_sparse, BlockLayout};
use crate::surface::Vec2;

#[derive(Clone, Copy, Debug)]
struct Offsets {
    ux: usize,
    uy: usize,
    p: usize,
    rho: usize,
    tx: usize,
    ty: usize,
    v: usize,
    dp: usize,
    pg: usize,
    f: usize,
    pref: usize,
}

pub struct FirstProblem<'p, 'a> {
    zp: &'p ZerothProblem<'a>,
    zs: &'p ZerothState,
    layout: BlockLayout,
    off: Offsets,
    /// zeroth-order node positions
    pos: Vec<Vec2>,
    u0: Vec<Vec2>,
}

/// Solution of the first-order system.
#[derive(Clone, Debug)]
pub struct FirstState {
    pub state: Vec<f64>,
    pub v1: f64,
    pub dp1: f64,
    pub pg1: f64,
    /// sensitivity of the transverse force to the offset
    pub f1: f64,
    /// normal boundary perturbation at the bubble corners (zero elsewhere)
    pub rho: Vec<f64>,
    /// `oint rho1`, `oint x rho1`, `oint y rho1`
    pub moments: [f64; 3],
}

impl<'p, 'a> FirstProblem<'p, 'a> {
    pub fn new(zp: &'p ZerothProblem<'a>, zs: &'p ZerothState) -> Result<Self> {
        let n = zp.vel.len();
        let layout = BlockLayout::new(&[
            ("u1x", n),
            ("u1y", n),
            ("p1", zp.pre.len()),
            ("rho1", zp.src.len()),
            ("t1x", zp.wall.len()),
            ("t1y", zp.wall.len()),
            ("V1", 1),
            ("dp1", 1),
            ("pG1", 1),
            ("f1", 1),
            ("p1ref", 1),
        ])?;
        let o = |s: &str| layout.offset(s);
        let off = Offsets {
            ux: o("u1x")?,
            uy: o("u1y")?,
            p: o("p1")?,
            rho: o("rho1")?,
            tx: o("t1x")?,
            ty: o("t1y")?,
            v: o("V1")?,
            dp: o("dp1")?,
            pg: o("pG1")?,
            f: o("f1")?,
            pref: o("p1ref")?,
        };
        let pos = (0..zp.mesh.n_nodes()).map(|i| zp.mesh.position(i, Some(&zs.displacement))).collect();
        let u0 = zp.velocity(&zs.state);
        Ok(FirstProblem { zp, zs, layout, off, pos, u0 })
    }

    /// Assembles and solves the linear system.
    pub fn solve(&self, exec: Execution) -> Result<FirstState> {
        let zero = vec![0.0; self.layout.len()];
        let a = self.assemble(&zero, true, exec)?;
        let rhs: Vec<f64> = a.residual.iter().map(|r| -r).collect();
        let x = solve_sparse(self.layout.len(), &a.triplets, &rhs, Some(&self.layout))?;
        Ok(self.extract(x))
    }

    fn extract(&self, x: Vec<f64>) -> FirstState {
        let mesh = self.zp.mesh;
        let rho: Vec<f64> = (0..mesh.n_nodes())
            .map(|i| if i < mesh.n_corners() { self.zp.src.dof(i).map_or(0.0, |d| x[self.off.rho + d]) } else { 0.0 })
            .collect();
        let mut moments = [0.0; 3];
        let tab = &self.zp.edge;
        for &e in &self.zp.bubble {
            let be = &mesh.boundary[e];
            let xs = mesh.edge_coords(be, Some(&self.zs.displacement));
            for q in 0..tab.len() {
                let m = EdgeMap::<f64>::new(&xs, tab.xi[q]);
                let r = rho[be.v[0]] * tab.n1[q][0] + rho[be.v[1]] * tab.n1[q][1];
                let w = tab.w[q] * m.js * r;
                moments[0] += w;
                moments[1] += w * m.x[0];
                moments[2] += w * m.x[1];
            }
        }
        FirstState {
            v1: x[self.off.v],
            dp1: x[self.off.dp],
            pg1: x[self.off.pg],
            f1: x[self.off.f],
            rho,
            moments,
            state: x,
        }
    }
}

impl WeakForm for FirstProblem<'_, '_> {
    fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    fn assemble(&self, state: &[f64], jacobian: bool, exec: Execution) -> Result<Assembly> {
        let o = self.off;
        let zp = self.zp;
        let mut acc = Assembly::new(self.layout.len());
        assemble(&Domain(self), state, jacobian, exec, &mut acc)?;
        assemble(&Interface(self), state, jacobian, exec, &mut acc)?;
        let wall = WallKernel {
            mesh: zp.mesh,
            edges: &zp.walls,
            vel: &zp.vel,
            wall: &zp.wall,
            off: [o.ux, o.uy, o.tx, o.ty, o.v],
            tab: &zp.edge,
        };
        assemble(&wall, state, jacobian, exec, &mut acc)?;
        let inlet = InletKernel {
            mesh: zp.mesh,
            edges: &zp.inlet,
            vel: &zp.vel,
            off: [o.ux, o.v, o.dp],
            drive: 0.0,
            rate: 0.0,
            tab: &zp.edge,
        };
        assemble(&inlet, state, jacobian, exec, &mut acc)?;
        let pref = PressureRef { p: o.p + zp.pre.dof(zp.pref_node).unwrap(), multiplier: o.pref };
        assemble(&pref, state, jacobian, exec, &mut acc)?;
        // a unit upward shift of the bubble: oint y rho1 = -V_B since n points into the bubble
        acc.residual[o.f] += zp.config.v_b;
        Ok(acc)
    }
}

/// Stokes on the fixed zeroth-order cells.
struct Domain<'q, 'p, 'a>(&'q FirstProblem<'p, 'a>);

impl Domain<'_, '_, '_> {
    fn cols(&self, e: usize) -> [Option<usize>; 15] {
        let (fp, zp) = (self.0, self.0.zp);
        let nd = zp.mesh.cell_nodes(e);
        let mut c = [None; 15];
        for a in 0..6 {
            let u = zp.vel.dof(nd[a]).unwrap();
            c[a] = Some(fp.off.ux + u);
            c[6 + a] = Some(fp.off.uy + u);
        }
        for a in 0..3 {
            c[12 + a] = Some(fp.off.p + zp.pre.dof(nd[a]).unwrap());
        }
        c
    }
}

impl Kernel<15> for Domain<'_, '_, '_> {
    fn len(&self) -> usize {
        self.0.zp.mesh.cells.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 15], [f64; 15]) {
        let c = self.cols(e);
        (c, c.map(|k| state[k.unwrap()]))
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 15], out: &mut Vec<(usize, S)>) -> Result<()> {
        let fp = self.0;
        let tab = &fp.zp.tri;
        let xs = fp.zp.mesh.cell_nodes(e).map(|i| fp.pos[i]);
        let mut r = [S::zero(); 15];
        for q in 0..tab.len() {
            let m = TriMap::<f64>::new(&xs, &tab.d2[q]);
            let w = m.det * tab.w[q];
            let g: [[f64; 2]; 6] = std::array::from_fn(|a| m.grad(&tab.d2[q][a]));
            let mut gx = [S::zero(); 2];
            let mut gy = [S::zero(); 2];
            for a in 0..6 {
                for k in 0..2 {
                    gx[k] += x[a] * g[a][k];
                    gy[k] += x[6 + a] * g[a][k];
                }
            }
            let pq = x[12] * tab.n1[q][0] + x[13] * tab.n1[q][1] + x[14] * tab.n1[q][2];
            let shear = gx[1] + gy[0];
            let sxx = gx[0] * 2.0 - pq;
            let syy = gy[1] * 2.0 - pq;
            for a in 0..6 {
                r[a] -= (sxx * g[a][0] + shear * g[a][1]) * w;
                r[6 + a] -= (shear * g[a][0] + syy * g[a][1]) * w;
            }
            let div = (gx[0] + gy[1]) * w;
            for a in 0..3 {
                r[12 + a] += div * tab.n1[q][a];
            }
        }
        let c = self.cols(e);
        for (k, rk) in r.into_iter().enumerate() {
            out.push((c[k].unwrap(), rk));
        }
        Ok(())
    }
}

/// Perturbed interface rows: stress balance with the boundary perturbation,
/// linearised impermeability and the area and centroid moments of `rho1`.
struct Interface<'q, 'p, 'a>(&'q FirstProblem<'p, 'a>);

impl Interface<'_, '_, '_> {
    fn cols(&self, e: usize) -> [Option<usize>; 10] {
        let (fp, zp) = (self.0, self.0.zp);
        let nd = zp.mesh.boundary[zp.bubble[e]].nodes();
        let mut c = [None; 10];
        for a in 0..3 {
            let u = zp.vel.dof(nd[a]).unwrap();
            c[a] = Some(fp.off.ux + u);
            c[3 + a] = Some(fp.off.uy + u);
        }
        for b in 0..2 {
            c[6 + b] = Some(fp.off.rho + zp.src.dof(nd[b]).unwrap());
        }
        c[8] = Some(fp.off.pg);
        c[9] = Some(fp.off.f);
        c
    }
}

impl Kernel<10> for Interface<'_, '_, '_> {
    fn len(&self) -> usize {
        self.0.zp.bubble.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 10], [f64; 10]) {
        let c = self.cols(e);
        (c, c.map(|k| state[k.unwrap()]))
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 10], out: &mut Vec<(usize, S)>) -> Result<()> {
        let (fp, zp) = (self.0, self.0.zp);
        let zs = fp.zs;
        let tab = &zp.edge;
        let inv_ca = 1.0 / zp.config.ca;
        let be = &zp.mesh.boundary[zp.bubble[e]];
        let nd = be.nodes();
        let cn = zp.mesh.cell_nodes(be.cell);
        debug_assert_eq!(cn[be.local], be.v[0]);
        let xc = cn.map(|i| fp.pos[i]);
        let xe = nd.map(|i| fp.pos[i]);
        let u0c = cn.map(|i| fp.u0[i]);
        let p0c: [f64; 3] = std::array::from_fn(|a| zs.state[zp.off.p + zp.pre.dof(cn[a]).unwrap()]);
        let rho = [x[6], x[7]];
        let mut r = [S::zero(); 8];
        let mut glob = [S::zero(); 3];
        for q in 0..tab.len() {
            let xi = tab.xi[q];
            let em = EdgeMap::<f64>::new(&xe, xi);
            let (_, dc) = &tab.tri[be.local][q];
            let cm = TriMap::<f64>::new(&xc, dc);
            let mut gu = [[0.0; 2]; 2];
            for a in 0..6 {
                let g = cm.grad(&dc[a]);
                for i in 0..2 {
                    for j in 0..2 {
                        gu[i][j] += u0c[a][i] * g[j];
                    }
                }
            }
            let (rr, ss) = edge_to_tri(be.local, xi);
            let p0 = p0c[0] * (1.0 - rr - ss) + p0c[1] * rr + p0c[2] * ss;
            let y = em.x[1];
            let hyd = zs.pg0 - zs.f0 * y - p0;
            let jump = [[2.0 * gu[0][0] + hyd, gu[0][1] + gu[1][0]], [gu[0][1] + gu[1][0], 2.0 * gu[1][1] + hyd]];
            let tj = [em.t[0] * jump[0][0] + em.t[1] * jump[1][0], em.t[0] * jump[0][1] + em.t[1] * jump[1][1]];
            let (t, n, dn) = (em.t, em.n, em.dn_ds);
            let divn = em.div_n();
            let ds = tab.w[q] * em.js;
            let n1 = tab.n1[q];
            let rq = rho[0] * n1[0] + rho[1] * n1[1];
            let drq = (rho[1] - rho[0]) / em.js;
            let load = x[9] * y - x[8];
            let mut u0 = [0.0; 2];
            let mut u1 = [S::zero(); 2];
            for a in 0..3 {
                for i in 0..2 {
                    u0[i] += fp.u0[nd[a]][i] * tab.n[q][a];
                    u1[i] += x[3 * i + a] * tab.n[q][a];
                }
            }
            for a in 0..3 {
                let na = tab.n[q][a];
                let da = tab.d[q][a] / em.js;
                for i in 0..2 {
                    let mut v = rq * (-da * tj[i] - inv_ca * da * t[i] * divn + inv_ca * da * dn[i]) + load * (na * n[i])
                        - drq * (inv_ca * n[i] * da);
                    if i == 1 {
                        v += rq * (na * zs.f0);
                    }
                    r[3 * i + a] += v * ds;
                }
            }
            let u0t = u0[0] * t[0] + u0[1] * t[1];
            let un = u1[0] * n[0] + u1[1] * n[1];
            r[6] += (un * n1[0] - rq * (u0t / em.js)) * ds;
            r[7] += (un * n1[1] + rq * (u0t / em.js)) * ds;
            glob[0] += rq * ds;
            glob[1] += rq * (em.x[0] * ds);
            glob[2] += rq * (y * ds);
        }
        let c = self.cols(e);
        for k in 0..8 {
            out.push((c[k].unwrap(), r[k]));
        }
        out.push((fp.off.pg, glob[0]));
        out.push((fp.off.dp, glob[1]));
        out.push((fp.off.f, glob[2]));
        Ok(())
    }
}

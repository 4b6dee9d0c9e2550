//! Zeroth-order system: Stokes flow around a free bubble on the configuration
//! `x = X + d`, with BALE motion of the interface and ALE motion of the
//! interior, closed by the flow rate and the bubble area and centroid.

use super::common::{reference_node, InletKernel, PressureRef, WallKernel};
use super::CaseConfig;
use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::assembly::{assemble, Assembly, Kernel, WeakForm};
use crate::fem::basis::{EdgeMap, EdgeTable, TriMap, TriTable};
use crate::fem::newton::{newton_solve, NewtonReport};
use crate::fem::{solve_sparse, BlockLayout, Degree, Space};
use crate::mesh::{quality, Mesh2D, Tag};
use crate::motion::{ale_stiffness, bale_edge};
use crate::surface::Vec2;

/// Pressure drop per unit length of the undisturbed Poiseuille flow.
pub(crate) const POISEUILLE_DROP: f64 = 12.0;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Offsets {
    pub ux: usize,
    pub uy: usize,
    pub p: usize,
    pub dx: usize,
    pub dy: usize,
    pub g: usize,
    pub tx: usize,
    pub ty: usize,
    pub v: usize,
    pub dp: usize,
    pub pg: usize,
    pub f: usize,
    pub pref: usize,
}

pub struct ZerothProblem<'a> {
    pub mesh: &'a Mesh2D,
    pub config: CaseConfig,
    pub vel: Space,
    pub pre: Space,
    /// mesh displacement: interior and bubble nodes
    pub disp: Space,
    /// BALE source, linear on the bubble
    pub src: Space,
    pub wall: Space,
    layout: BlockLayout,
    pub(crate) off: Offsets,
    pub(crate) bubble: Vec<usize>,
    pub(crate) walls: Vec<usize>,
    pub(crate) inlet: Vec<usize>,
    on_bubble: Vec<bool>,
    pub(crate) pref_node: usize,
    stiff: Vec<[[f64; 6]; 6]>,
    pub(crate) tri: TriTable,
    pub(crate) edge: EdgeTable,
}

/// Converged zeroth-order solution.
#[derive(Clone, Debug)]
pub struct ZerothState {
    pub state: Vec<f64>,
    /// bubble speed
    pub v0: f64,
    /// extra pressure drop
    pub dp0: f64,
    /// gas pressure
    pub pg0: f64,
    /// transverse force density
    pub f0: f64,
    /// capillary number the state was solved at
    pub ca: f64,
    /// per-node mesh displacement `x - X`
    pub displacement: Vec<Vec2>,
    pub report: NewtonReport,
}

impl<'a> ZerothProblem<'a> {
    pub fn new(mesh: &'a Mesh2D, config: &CaseConfig) -> Result<Self> {
        config.validate()?;
        if !mesh.is_quadratic() {
            return Err(Error::Mesh("the bubble problem needs a quadratic mesh".into()));
        }
        let vel = Space::domain(mesh, Degree::P2, true);
        let pre = Space::domain(mesh, Degree::P1, false);
        let disp = Space::domain_without(mesh, Degree::P2, &[Tag::Wall, Tag::Inlet, Tag::Outlet]);
        let src = Space::boundary(mesh, Degree::P1, &[Tag::Bubble], false);
        let wall = Space::boundary(mesh, Degree::P2, &[Tag::Wall], true);
        let layout = BlockLayout::new(&[
            ("ux", vel.len()),
            ("uy", vel.len()),
            ("p", pre.len()),
            ("dx", disp.len()),
            ("dy", disp.len()),
            ("g", src.len()),
            ("tx", wall.len()),
            ("ty", wall.len()),
            ("V0", 1),
            ("dp0", 1),
            ("pG0", 1),
            ("f0", 1),
            ("p0ref", 1),
        ])?;
        let o = |n: &str| layout.offset(n);
        let off = Offsets {
            ux: o("ux")?,
            uy: o("uy")?,
            p: o("p")?,
            dx: o("dx")?,
            dy: o("dy")?,
            g: o("g")?,
            tx: o("tx")?,
            ty: o("ty")?,
            v: o("V0")?,
            dp: o("dp0")?,
            pg: o("pG0")?,
            f: o("f0")?,
            pref: o("p0ref")?,
        };
        let bubble = mesh.edges_with(Tag::Bubble);
        if bubble.is_empty() {
            return Err(Error::Mesh("mesh has no bubble boundary".into()));
        }
        let mut on_bubble = vec![false; mesh.n_nodes()];
        for &e in &bubble {
            for i in mesh.boundary[e].nodes() {
                on_bubble[i] = true;
            }
        }
        let tri = TriTable::new(4);
        let stiff = (0..mesh.cells.len()).map(|c| ale_stiffness(mesh, c, &tri)).collect();
        Ok(ZerothProblem {
            mesh,
            config: config.clone(),
            vel,
            pre,
            disp,
            src,
            wall,
            layout,
            off,
            bubble,
            walls: mesh.edges_with(Tag::Wall),
            inlet: mesh.edges_with(Tag::Inlet),
            on_bubble,
            pref_node: reference_node(mesh, config.x_p),
            stiff,
            tri,
            edge: EdgeTable::new(4),
        })
    }

    /// Circular bubble in a fluid at rest relative to the walls, with the
    /// Young-Laplace gas pressure.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.layout.len()];
        x[self.off.v] = 1.0;
        x[self.off.pg] = 1.0 / (self.config.ca * self.config.radius());
        x
    }

    /// Per-node displacement stored in a state vector.
    pub fn displacement(&self, x: &[f64]) -> Vec<Vec2> {
        (0..self.mesh.n_nodes())
            .map(|i| self.disp.dof(i).map_or([0.0, 0.0], |d| [x[self.off.dx + d], x[self.off.dy + d]]))
            .collect()
    }

    /// Per-node velocity.
    pub fn velocity(&self, x: &[f64]) -> Vec<Vec2> {
        (0..self.mesh.n_nodes())
            .map(|i| {
                let d = self.vel.dof(i).unwrap();
                [x[self.off.ux + d], x[self.off.uy + d]]
            })
            .collect()
    }

    /// Per-node pressure, mid nodes interpolated linearly.
    pub fn pressure(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.mesh.n_nodes()];
        for i in 0..self.mesh.n_corners() {
            p[i] = x[self.off.p + self.pre.dof(i).unwrap()];
        }
        for c in 0..self.mesh.cells.len() {
            let nd = self.mesh.cell_nodes(c);
            for k in 0..3 {
                p[nd[3 + k]] = 0.5 * (p[nd[k]] + p[nd[(k + 1) % 3]]);
            }
        }
        p
    }

    pub fn extract(&self, x: Vec<f64>, report: NewtonReport) -> ZerothState {
        ZerothState {
            v0: x[self.off.v],
            dp0: x[self.off.dp],
            pg0: x[self.off.pg],
            f0: x[self.off.f],
            ca: self.config.ca,
            displacement: self.displacement(&x),
            state: x,
            report,
        }
    }

    /// Total wall traction `int_W tau_n`.
    pub fn wall_force(&self, x: &[f64]) -> Vec2 {
        let mut f = [0.0; 2];
        for &e in &self.walls {
            let be = &self.mesh.boundary[e];
            let xs = self.mesh.edge_coords(be, None);
            let nd = be.nodes();
            for q in 0..self.edge.len() {
                let w = self.edge.w[q] * EdgeMap::<f64>::new(&xs, self.edge.xi[q]).js;
                for a in 0..3 {
                    let t = self.wall.dof(nd[a]).unwrap();
                    f[0] += w * self.edge.n[q][a] * x[self.off.tx + t];
                    f[1] += w * self.edge.n[q][a] * x[self.off.ty + t];
                }
            }
        }
        f
    }

    /// Transverse momentum balance of the liquid: wall traction against the
    /// transverse force density times the bubble area. Zero up to solver
    /// tolerance for any converged state.
    pub fn force_balance(&self, s: &ZerothState) -> f64 {
        self.wall_force(&s.state)[1] - s.f0 * self.mesh.bubble_area(Some(&s.displacement))
    }

    /// Derivative of the discrete solution with respect to the prescribed
    /// offset `eps`, from the converged Jacobian.
    pub fn tangent(&self, s: &ZerothState, exec: Execution) -> Result<Vec<f64>> {
        let a = self.assemble(&s.state, true, exec)?;
        let mut rhs = vec![0.0; self.layout.len()];
        rhs[self.off.f] = self.config.v_b;
        solve_sparse(self.layout.len(), &a.triplets, &rhs, Some(&self.layout))
    }
}

impl WeakForm for ZerothProblem<'_> {
    fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    fn assemble(&self, state: &[f64], jacobian: bool, exec: Execution) -> Result<Assembly> {
        let o = self.off;
        let c = &self.config;
        let mut acc = Assembly::new(self.layout.len());
        assemble(&Domain(self), state, jacobian, exec, &mut acc)?;
        assemble(&Interface(self), state, jacobian, exec, &mut acc)?;
        let wall = WallKernel {
            mesh: self.mesh,
            edges: &self.walls,
            vel: &self.vel,
            wall: &self.wall,
            off: [o.ux, o.uy, o.tx, o.ty, o.v],
            tab: &self.edge,
        };
        assemble(&wall, state, jacobian, exec, &mut acc)?;
        let inlet = InletKernel {
            mesh: self.mesh,
            edges: &self.inlet,
            vel: &self.vel,
            off: [o.ux, o.v, o.dp],
            drive: POISEUILLE_DROP * c.length,
            rate: 1.0,
            tab: &self.edge,
        };
        assemble(&inlet, state, jacobian, exec, &mut acc)?;
        let pref = PressureRef { p: o.p + self.pre.dof(self.pref_node).unwrap(), multiplier: o.pref };
        assemble(&pref, state, jacobian, exec, &mut acc)?;
        acc.residual[o.pg] -= c.v_b;
        acc.residual[o.dp] -= c.v_b * 0.5 * c.length;
        acc.residual[o.f] -= c.v_b * c.eps;
        Ok(acc)
    }
}

/// Stokes on the displaced cells plus reference-configuration Laplace rows
/// for interior mesh motion.
struct Domain<'p, 'a>(&'p ZerothProblem<'a>);

impl Domain<'_, '_> {
    fn cols(&self, e: usize) -> [Option<usize>; 27] {
        let p = self.0;
        let nd = p.mesh.cell_nodes(e);
        let mut c = [None; 27];
        for a in 0..6 {
            let u = p.vel.dof(nd[a]).unwrap();
            c[a] = Some(p.off.ux + u);
            c[6 + a] = Some(p.off.uy + u);
            let d = p.disp.dof(nd[a]);
            c[15 + a] = d.map(|d| p.off.dx + d);
            c[21 + a] = d.map(|d| p.off.dy + d);
        }
        for a in 0..3 {
            c[12 + a] = Some(p.off.p + p.pre.dof(nd[a]).unwrap());
        }
        c
    }
}

impl Kernel<27> for Domain<'_, '_> {
    fn len(&self) -> usize {
        self.0.mesh.cells.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 27], [f64; 27]) {
        let c = self.cols(e);
        (c, c.map(|k| k.map_or(0.0, |k| state[k])))
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 27], out: &mut Vec<(usize, S)>) -> Result<()> {
        let p = self.0;
        let tab = &p.tri;
        let xr = p.mesh.cell_coords(e, None);
        let xs: [[S; 2]; 6] = std::array::from_fn(|a| [x[15 + a] + xr[a][0], x[21 + a] + xr[a][1]]);
        let mut r = [S::zero(); 27];
        for q in 0..tab.len() {
            let m = TriMap::new(&xs, &tab.d2[q]);
            let det = m.det.value();
            if det <= 0.0 {
                return Err(Error::InvertedElement { cell: e, det });
            }
            let w = m.det * tab.w[q];
            let g: [[S; 2]; 6] = std::array::from_fn(|a| m.grad(&tab.d2[q][a]));
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
        let k = &p.stiff[e];
        let nd = p.mesh.cell_nodes(e);
        for a in 0..6 {
            if p.on_bubble[nd[a]] {
                continue;
            }
            for b in 0..6 {
                r[15 + a] += x[15 + b] * k[a][b];
                r[21 + a] += x[21 + b] * k[a][b];
            }
        }
        let c = self.cols(e);
        for (k, rk) in r.into_iter().enumerate() {
            if let Some(i) = c[k] {
                out.push((i, rk));
            }
        }
        Ok(())
    }
}

/// Interface rows on the displaced bubble boundary: BALE, impermeability,
/// gas pressure, hydrostatic and capillary loads, area and centroid.
struct Interface<'p, 'a>(&'p ZerothProblem<'a>);

impl Interface<'_, '_> {
    fn cols(&self, e: usize) -> [Option<usize>; 16] {
        let p = self.0;
        let nd = p.mesh.boundary[p.bubble[e]].nodes();
        let mut c = [None; 16];
        for a in 0..3 {
            let d = p.disp.dof(nd[a]).unwrap();
            c[a] = Some(p.off.dx + d);
            c[3 + a] = Some(p.off.dy + d);
            let u = p.vel.dof(nd[a]).unwrap();
            c[6 + a] = Some(p.off.ux + u);
            c[9 + a] = Some(p.off.uy + u);
        }
        for b in 0..2 {
            c[12 + b] = Some(p.off.g + p.src.dof(nd[b]).unwrap());
        }
        c[14] = Some(p.off.pg);
        c[15] = Some(p.off.f);
        c
    }
}

impl Kernel<16> for Interface<'_, '_> {
    fn len(&self) -> usize {
        self.0.bubble.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 16], [f64; 16]) {
        let c = self.cols(e);
        (c, c.map(|k| state[k.unwrap()]))
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 16], out: &mut Vec<(usize, S)>) -> Result<()> {
        let p = self.0;
        let tab = &p.edge;
        let inv_ca = 1.0 / p.config.ca;
        let xr = p.mesh.edge_coords(&p.mesh.boundary[p.bubble[e]], None);
        let q = [[x[0], x[3]], [x[1], x[4]], [x[2], x[5]]];
        let bale = bale_edge(&xr, &q, [x[12], x[13]], tab);
        let xs: [[S; 2]; 3] = std::array::from_fn(|a| [q[a][0] + xr[a][0], q[a][1] + xr[a][1]]);
        let mut r = [S::zero(); 14];
        let mut glob = [S::zero(); 3];
        for k in 0..tab.len() {
            let (n, d) = (&tab.n[k], &tab.d[k]);
            let mut xp = [S::zero(); 2];
            let mut pos = [S::zero(); 2];
            let mut u = [S::zero(); 2];
            for a in 0..3 {
                for c in 0..2 {
                    xp[c] += xs[a][c] * d[a];
                    pos[c] += xs[a][c] * n[a];
                    u[c] += x[6 + 3 * c + a] * n[a];
                }
            }
            let js = (xp[0] * xp[0] + xp[1] * xp[1]).sqrt();
            let nj = [xp[1], -xp[0]];
            let w = tab.w[k];
            let load = (x[15] * pos[1] - x[14]) * w;
            let cap = [xp[0] * (inv_ca * w) / js, xp[1] * (inv_ca * w) / js];
            for a in 0..3 {
                r[a] += load * nj[0] * n[a] - cap[0] * d[a];
                r[3 + a] += load * nj[1] * n[a] - cap[1] * d[a];
            }
            let un = (u[0] * nj[0] + u[1] * nj[1]) * w;
            r[6] += un * tab.n1[k][0];
            r[7] += un * tab.n1[k][1];
            glob[0] -= (pos[0] * nj[0] + pos[1] * nj[1]) * (0.5 * w);
            glob[1] -= pos[0] * pos[0] * nj[0] * (0.5 * w);
            glob[2] -= pos[1] * pos[1] * nj[1] * (0.5 * w);
        }
        let c = self.cols(e);
        for a in 0..3 {
            out.push((c[a].unwrap(), bale[a][0]));
            out.push((c[3 + a].unwrap(), bale[a][1]));
            out.push((c[6 + a].unwrap(), r[a]));
            out.push((c[9 + a].unwrap(), r[3 + a]));
        }
        out.push((c[12].unwrap(), r[6]));
        out.push((c[13].unwrap(), r[7]));
        out.push((p.off.pg, glob[0]));
        out.push((p.off.dp, glob[1]));
        out.push((p.off.f, glob[2]));
        Ok(())
    }
}

/// Newton solve from a given state.
pub fn solve_zeroth_from(problem: &ZerothProblem, initial: Vec<f64>, exec: Execution) -> Result<ZerothState> {
    let (x, report) = newton_solve(problem, initial, &problem.config.newton, exec)?;
    let s = problem.extract(x, report);
    let q = quality(problem.mesh, Some(&s.displacement));
    if !q.inverted.is_empty() {
        return Err(Error::Geometry(format!(
            "{} cells inverted at Ca = {}; use smaller Ca steps or a finer mesh",
            q.inverted.len(),
            problem.config.ca
        )));
    }
    Ok(s)
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::Convergence { .. } | Error::InvertedElement { .. } | Error::Geometry(_))
}

/// Solves the zeroth-order problem at `config.ca`. Starts from the circular
/// bubble; if that fails, continues in Ca from `Ca / 8`, halving the
/// logarithmic step whenever Newton fails.
pub fn solve_zeroth<'a>(mesh: &'a Mesh2D, config: &CaseConfig, exec: Execution) -> Result<(ZerothProblem<'a>, ZerothState)> {
    let mut problem = ZerothProblem::new(mesh, config)?;
    let target = config.ca;
    match solve_zeroth_from(&problem, problem.initial_state(), exec) {
        Ok(s) => return Ok((problem, s)),
        Err(e) if recoverable(&e) => log::info!("direct solve at Ca = {target} failed ({e}); continuing in Ca"),
        Err(e) => return Err(e),
    }
    let mut ca = target / 8.0;
    problem.config.ca = ca;
    let mut state = solve_zeroth_from(&problem, problem.initial_state(), exec)
        .map_err(|e| Error::Geometry(format!("continuation could not start at Ca = {ca}: {e}")))?;
    let mut factor: f64 = 2.0;
    while ca < target {
        let next = (ca * factor).min(target);
        problem.config.ca = next;
        match solve_zeroth_from(&problem, state.state.clone(), exec) {
            Ok(s) => {
                log::info!("continuation: converged at Ca = {next}");
                state = s;
                ca = next;
            }
            Err(e) if recoverable(&e) => {
                factor = factor.sqrt();
                if factor < 1.01 {
                    return Err(Error::Geometry(format!(
                        "Ca continuation stalled at Ca = {ca} ({e}); use smaller Ca steps or a finer mesh"
                    )));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok((problem, state))
}

//! Kernels shared by the zeroth- and first-order systems.

use crate::ad::Scalar;
use crate::error::Result;
use crate::fem::assembly::Kernel;
use crate::fem::basis::{EdgeMap, EdgeTable};
use crate::fem::Space;
use crate::mesh::{Mesh2D, Tag};

/// `int_W u~ . tau + tau~ . (u + V e_x)`: wall velocity imposed through the
/// wall traction multiplier.
pub(crate) struct WallKernel<'a> {
    pub mesh: &'a Mesh2D,
    pub edges: &'a [usize],
    pub vel: &'a Space,
    pub wall: &'a Space,
    /// offsets of ux, uy, tx, ty and the wall speed
    pub off: [usize; 5],
    pub tab: &'a EdgeTable,
}

impl WallKernel<'_> {
    fn cols(&self, e: usize) -> [Option<usize>; 13] {
        let nd = self.mesh.boundary[self.edges[e]].nodes();
        let mut c = [None; 13];
        for a in 0..3 {
            let u = self.vel.dof(nd[a]).unwrap();
            let t = self.wall.dof(nd[a]).unwrap();
            c[a] = Some(self.off[0] + u);
            c[3 + a] = Some(self.off[1] + u);
            c[6 + a] = Some(self.off[2] + t);
            c[9 + a] = Some(self.off[3] + t);
        }
        c[12] = Some(self.off[4]);
        c
    }
}

impl Kernel<13> for WallKernel<'_> {
    fn len(&self) -> usize {
        self.edges.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 13], [f64; 13]) {
        let c = self.cols(e);
        (c, c.map(|k| state[k.unwrap()]))
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 13], out: &mut Vec<(usize, S)>) -> Result<()> {
        let xs = self.mesh.edge_coords(&self.mesh.boundary[self.edges[e]], None);
        let c = self.cols(e);
        let mut r = [S::zero(); 12];
        for q in 0..self.tab.len() {
            let js = EdgeMap::<f64>::new(&xs, self.tab.xi[q]).js;
            let n = &self.tab.n[q];
            let w = self.tab.w[q] * js;
            let mut v = [S::zero(); 4];
            for a in 0..3 {
                for k in 0..4 {
                    v[k] += x[3 * k + a] * n[a];
                }
            }
            for a in 0..3 {
                let wa = n[a] * w;
                r[a] += v[2] * wa;
                r[3 + a] += v[3] * wa;
                r[6 + a] += (v[0] + x[12]) * wa;
                r[9 + a] += v[1] * wa;
            }
        }
        for k in 0..12 {
            out.push((c[k].unwrap(), r[k]));
        }
        Ok(())
    }
}

/// Inlet rows: pressure-jump load `int_in u~x (dp + drive)` and the flow-rate
/// constraint `int_in (ux + V - rate) = 0`.
pub(crate) struct InletKernel<'a> {
    pub mesh: &'a Mesh2D,
    pub edges: &'a [usize],
    pub vel: &'a Space,
    /// offsets of ux, the wall speed and the extra pressure drop
    pub off: [usize; 3],
    pub drive: f64,
    pub rate: f64,
    pub tab: &'a EdgeTable,
}

impl InletKernel<'_> {
    fn cols(&self, e: usize) -> [Option<usize>; 5] {
        let nd = self.mesh.boundary[self.edges[e]].nodes();
        let mut c = [None; 5];
        for a in 0..3 {
            c[a] = Some(self.off[0] + self.vel.dof(nd[a]).unwrap());
        }
        c[3] = Some(self.off[1]);
        c[4] = Some(self.off[2]);
        c
    }
}

impl Kernel<5> for InletKernel<'_> {
    fn len(&self) -> usize {
        self.edges.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 5], [f64; 5]) {
        let c = self.cols(e);
        (c, c.map(|k| state[k.unwrap()]))
    }

    fn eval<S: Scalar>(&self, e: usize, x: &[S; 5], out: &mut Vec<(usize, S)>) -> Result<()> {
        let xs = self.mesh.edge_coords(&self.mesh.boundary[self.edges[e]], None);
        let c = self.cols(e);
        let mut r = [S::zero(); 4];
        for q in 0..self.tab.len() {
            let w = self.tab.w[q] * EdgeMap::<f64>::new(&xs, self.tab.xi[q]).js;
            let n = &self.tab.n[q];
            let ux = x[0] * n[0] + x[1] * n[1] + x[2] * n[2];
            for a in 0..3 {
                r[a] += (x[4] + self.drive) * (n[a] * w);
            }
            r[3] += (ux + x[3] - self.rate) * w;
        }
        for k in 0..4 {
            out.push((c[k].unwrap(), r[k]));
        }
        Ok(())
    }
}

/// Point constraint `p(x_p) = 0` with its multiplier added to the
/// continuity row of the same node.
pub(crate) struct PressureRef {
    pub p: usize,
    pub multiplier: usize,
}

impl Kernel<2> for PressureRef {
    fn len(&self) -> usize {
        1
    }

    fn gather(&self, _: usize, state: &[f64]) -> ([Option<usize>; 2], [f64; 2]) {
        ([Some(self.p), Some(self.multiplier)], [state[self.p], state[self.multiplier]])
    }

    fn eval<S: Scalar>(&self, _: usize, x: &[S; 2], out: &mut Vec<(usize, S)>) -> Result<()> {
        out.push((self.multiplier, x[0]));
        out.push((self.p, x[1]));
        Ok(())
    }
}

/// Inlet corner closest to `target` (the default target is the channel axis).
pub(crate) fn reference_node(mesh: &Mesh2D, target: Option<[f64; 2]>) -> usize {
    let t = target.unwrap_or([0.0, 0.0]);
    let mut best = (f64::INFINITY, usize::MAX);
    for e in mesh.boundary.iter().filter(|e| e.tag == Tag::Inlet) {
        for i in e.v {
            let p = mesh.vertices[i];
            let d = (p[0] - t[0]).hypot(p[1] - t[1]);
            if d < best.0 {
                best = (d, i);
            }
        }
    }
    best.1
}

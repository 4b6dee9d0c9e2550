//! First-order domain perturbation through a boundary displacement `rho`.
//!
//! Every quantity posed on the displaced domain is rewritten as its value on
//! the unperturbed configuration plus a correction linear in `rho`. Each
//! operation comes in a general form, valid for any displacement vector, and
//! a normal form for `rho = rho n`. Boundary divergences `D_S . w` are always
//! discretised weakly as `[psi n_S . w] - int grad_S psi . w`.

use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::assembly::{assemble, Assembly, Kernel, WeakForm};
use crate::fem::basis::{edge_to_tri, interp, p2_edge, p2_tri, EdgeMap, EdgeTable, TriMap, TriTable};
use crate::fem::layout::BlockLayout;
use crate::fem::linsolve::solve_sparse;
use crate::fem::newton::{newton_solve, NewtonSettings};
use crate::fem::quadrature::interval;
use crate::fem::space::{Degree, Space};
use crate::mesh::Mesh2D;
use crate::surface::{contour, BoundaryLoad, Vec2};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POINTS: usize = 5;

/// Boundary displacement as nodal P2 data, indexed by mesh node.
#[derive(Clone, Copy, Debug)]
pub enum Rho<'a> {
    Vector(&'a [Vec2]),
    /// amplitude of a displacement along the outward normal
    Normal(&'a [f64]),
}

/// Which expansion is evaluated. The general form accepts both kinds of
/// [`Rho`]; the normal form needs [`Rho::Normal`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    General,
    Normal,
}

/// A perturbed quantity.
#[derive(Clone, Copy)]
pub enum Phi<'a> {
    /// value and gradient on a neighbourhood of the boundary
    Analytic(&'a (dyn Fn(Vec2) -> (f64, Vec2) + Sync)),
    /// P2 field on the whole mesh, indexed by node
    Fe(&'a [f64]),
    /// nodal values on the boundary only; no normal derivative
    Boundary(&'a [f64]),
}

/// Data of `div grad phi = sigma(x, phi)` with `n . grad phi = c phi + gamma`.
#[derive(Clone, Copy)]
pub struct MixedBc<'a> {
    pub c: f64,
    /// `gamma` extended off the boundary, with its gradient
    pub gamma: &'a (dyn Fn(Vec2) -> (f64, Vec2) + Sync),
    /// `sigma` and `d sigma / d phi`
    pub sigma: &'a (dyn Fn(Vec2, f64) -> (f64, f64) + Sync),
}

impl MixedBc<'_> {
    /// Checks `c` and the consistency of `d sigma / d phi` at the probes.
    pub fn validate(&self, probes: &[(Vec2, f64)]) -> Result<()> {
        if !self.c.is_finite() {
            return Err(Error::Config(format!("Robin coefficient {} is not finite", self.c)));
        }
        for &(x, phi) in probes {
            let h = 1e-6 * (1.0 + phi.abs());
            let fd = ((self.sigma)(x, phi + h).0 - (self.sigma)(x, phi - h).0) / (2.0 * h);
            let d = (self.sigma)(x, phi).1;
            if (fd - d).abs() > 1e-6 * (1.0 + d.abs()) {
                return Err(Error::Config(format!("d sigma/d phi = {d} disagrees with {fd} at {x:?}, phi = {phi}")));
            }
            if !(self.gamma)(x).0.is_finite() {
                return Err(Error::Config(format!("gamma is not finite at {x:?}")));
            }
        }
        Ok(())
    }
}

/// Unperturbed value and first-order correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbed {
    pub base: f64,
    pub delta: f64,
}

impl Perturbed {
    pub fn total(&self) -> f64 {
        self.base + self.delta
    }
}

#[derive(Clone, Copy, Debug)]
struct RhoAt {
    v: Vec2,
    /// `d rho / ds`
    ds: Vec2,
    /// scalar amplitude and its arclength derivative
    amp: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug)]
struct PhiAt {
    v: f64,
    ds: f64,
    grad: Option<Vec2>,
}

/// Boundary quadrature point with the P2 test functions of its edge.
struct Pt {
    m: EdgeMap<f64>,
    w: f64,
    psi: [f64; 3],
    /// `d psi / ds`
    dpsi: [f64; 3],
    rho: RhoAt,
    phi: PhiAt,
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn edge_nodes(mesh: &Mesh2D, e: usize) -> Result<[usize; 3]> {
    let be = mesh.boundary.get(e).ok_or_else(|| Error::Usage(format!("edge {e} is not a boundary edge")))?;
    let mid = be.mid.ok_or_else(|| Error::Usage("perturbations need a quadratic mesh".into()))?;
    Ok([be.v[0], be.v[1], mid])
}

fn rho_at(rho: Rho, nodes: [usize; 3], m: &EdgeMap<f64>, n: &[f64; 3], d: &[f64; 3]) -> RhoAt {
    match rho {
        Rho::Vector(r) => {
            let mut v = [0.0; 2];
            let mut ds = [0.0; 2];
            for a in 0..3 {
                for k in 0..2 {
                    v[k] += n[a] * r[nodes[a]][k];
                    ds[k] += d[a] * r[nodes[a]][k] / m.js;
                }
            }
            RhoAt { v, ds, amp: None }
        }
        Rho::Normal(r) => {
            let s: f64 = (0..3).map(|a| n[a] * r[nodes[a]]).sum();
            let sd: f64 = (0..3).map(|a| d[a] * r[nodes[a]]).sum::<f64>() / m.js;
            RhoAt {
                v: [s * m.n[0], s * m.n[1]],
                ds: [sd * m.n[0] + s * m.dn_ds[0], sd * m.n[1] + s * m.dn_ds[1]],
                amp: Some((s, sd)),
            }
        }
    }
}

fn phi_at(phi: Phi, mesh: &Mesh2D, e: usize, nodes: [usize; 3], xi: f64, m: &EdgeMap<f64>) -> PhiAt {
    match phi {
        Phi::Analytic(f) => {
            let (v, g) = f(m.x);
            PhiAt { v, ds: dot(g, m.t), grad: Some(g) }
        }
        Phi::Fe(vals) => {
            let be = mesh.boundary[e];
            let (r, s) = edge_to_tri(be.local, xi);
            let (nn, dn) = p2_tri(r, s);
            let map = TriMap::<f64>::new(&mesh.cell_coords(be.cell, None), &dn);
            let cn = mesh.cell_nodes(be.cell);
            let mut v = 0.0;
            let mut g = [0.0; 2];
            for a in 0..6 {
                let ga = map.grad(&dn[a]);
                v += nn[a] * vals[cn[a]];
                g[0] += ga[0] * vals[cn[a]];
                g[1] += ga[1] * vals[cn[a]];
            }
            PhiAt { v, ds: dot(g, m.t), grad: Some(g) }
        }
        Phi::Boundary(vals) => {
            let (n, d, _) = p2_edge(xi);
            let v = (0..3).map(|a| n[a] * vals[nodes[a]]).sum();
            let dxi: f64 = (0..3).map(|a| d[a] * vals[nodes[a]]).sum();
            PhiAt { v, ds: dxi / m.js, grad: None }
        }
    }
}

fn point(mesh: &Mesh2D, e: usize, xi: f64, w: f64, rho: Rho, phi: Phi) -> Result<Pt> {
    let nodes = edge_nodes(mesh, e)?;
    let m = EdgeMap::<f64>::new(&mesh.edge_coords(&mesh.boundary[e], None), xi);
    if !(m.js > 1e-14) {
        return Err(Error::Geometry(format!("degenerate boundary edge {e}")));
    }
    let (n, d, _) = p2_edge(xi);
    Ok(Pt {
        w: w * m.js,
        psi: n,
        dpsi: d.map(|v| v / m.js),
        rho: rho_at(rho, nodes, &m, &n, &d),
        phi: phi_at(phi, mesh, e, nodes, xi, &m),
        m,
    })
}

enum Site {
    /// interior quadrature point of an edge with these nodes
    Inner([usize; 3]),
    /// end node of an open curve and its contour normal
    End(usize, Vec2),
}

/// Quadrature points of every edge, then the curve end points.
fn sweep(mesh: &Mesh2D, edges: &[usize], rho: Rho, phi: Phi, mut visit: impl FnMut(Site, &Pt) -> Result<()>) -> Result<()> {
    let rule = interval(POINTS);
    for &e in edges {
        let nodes = edge_nodes(mesh, e)?;
        for &(xi, w) in &rule {
            visit(Site::Inner(nodes), &point(mesh, e, xi, w, rho, phi)?)?;
        }
    }
    for (node, ns) in contour(mesh, edges, None)? {
        let e = edges.iter().copied().find(|&e| mesh.boundary[e].v.contains(&node)).expect("contour node on curve");
        let xi = if mesh.boundary[e].v[0] == node { 0.0 } else { 1.0 };
        visit(Site::End(node, ns), &point(mesh, e, xi, 0.0, rho, phi)?)?;
    }
    Ok(())
}

fn check_form(rho: Rho, form: Form) -> Result<()> {
    match (form, rho) {
        (Form::Normal, Rho::Vector(_)) => Err(Error::Usage("normal form needs a normal displacement".into())),
        _ => Ok(()),
    }
}

fn need_grad(p: &PhiAt) -> Result<Vec2> {
    p.grad.ok_or_else(|| Error::Usage("the normal derivative of a boundary-only field is unavailable".into()))
}

fn domain_value(phi: Phi, mesh: &Mesh2D, c: usize, q: usize, tab: &TriTable, x: Vec2) -> Result<f64> {
    match phi {
        Phi::Analytic(f) => Ok(f(x).0),
        Phi::Fe(v) => Ok(interp(&mesh.cell_nodes(c).map(|i| v[i]), &tab.n2[q])),
        Phi::Boundary(_) => Err(Error::Usage("a boundary-only field has no domain integral".into())),
    }
}

/// `int_V phi` on the displaced domain: `int_V0 phi + int_S0 (n . rho) phi`.
/// `edges` must be the whole boundary that moves.
pub fn perturbed_domain_integral(mesh: &Mesh2D, phi: Phi, edges: &[usize], rho: Rho, form: Form) -> Result<Perturbed> {
    check_form(rho, form)?;
    let tab = TriTable::new(5);
    let mut base = 0.0;
    for c in 0..mesh.cells.len() {
        let x = mesh.cell_coords(c, None);
        for q in 0..tab.len() {
            let map = TriMap::<f64>::new(&x, &tab.d2[q]);
            let p = [interp(&x.map(|v| v[0]), &tab.n2[q]), interp(&x.map(|v| v[1]), &tab.n2[q])];
            base += tab.w[q] * map.det * domain_value(phi, mesh, c, q, &tab, p)?;
        }
    }
    let mut delta = 0.0;
    sweep(mesh, edges, rho, phi, |site, p| {
        if let Site::Inner(_) = site {
            let rn = match (form, p.rho.amp) {
                (Form::Normal, Some((s, _))) => s,
                _ => dot(p.rho.v, p.m.n),
            };
            delta += p.w * rn * p.phi.v;
        }
        Ok(())
    })?;
    Ok(Perturbed { base, delta })
}

/// `int_S phi` on the displaced boundary portion `edges`. The general form
/// adds `[n_S . rho phi]` at the ends of an open curve and
/// `int [phi (rho . n) div_S n + (rho . n) n . grad phi]`.
pub fn perturbed_boundary_integral(mesh: &Mesh2D, edges: &[usize], phi: Phi, rho: Rho, form: Form) -> Result<Perturbed> {
    check_form(rho, form)?;
    let mut base = 0.0;
    let mut delta = 0.0;
    sweep(mesh, edges, rho, phi, |site, p| {
        match site {
            Site::Inner(_) => {
                let g = need_grad(&p.phi)?;
                let rn = match (form, p.rho.amp) {
                    (Form::Normal, Some((s, _))) => s,
                    _ => dot(p.rho.v, p.m.n),
                };
                base += p.w * p.phi.v;
                delta += p.w * rn * (p.phi.v * p.m.div_n() + dot(p.m.n, g));
            }
            Site::End(_, ns) if form == Form::General => delta += dot(ns, p.rho.v) * p.phi.v,
            Site::End(..) => {}
        }
        Ok(())
    })?;
    Ok(Perturbed { base, delta })
}

/// Scalar load tested against the P2 functions of a boundary curve.
#[derive(Clone, Debug)]
pub struct MixedBcLoad {
    pub space: Space,
    /// `int psi n . grad phi`
    pub flux: Vec<f64>,
    /// first-order change of the flux through the displaced boundary
    pub d_flux: Vec<f64>,
    /// `int psi (c phi + gamma)`
    pub robin: Vec<f64>,
    pub d_robin: Vec<f64>,
}

impl MixedBcLoad {
    /// Weak residual of the perturbed mixed condition.
    pub fn residual(&self) -> Vec<f64> {
        (0..self.flux.len()).map(|i| self.flux[i] + self.d_flux[i] - self.robin[i] - self.d_robin[i]).collect()
    }

    /// The part of the residual linear in `rho`.
    pub fn perturbation(&self) -> Vec<f64> {
        (0..self.flux.len()).map(|i| self.d_flux[i] - self.d_robin[i]).collect()
    }
}

/// Weak form of the mixed condition `n . grad phi = c phi + gamma` imposed
/// on the displaced boundary and rewritten on `edges`. The flux through the
/// displaced boundary uses `div grad phi = sigma` in the swept layer.
pub fn perturbed_mixed_bc(
    mesh: &Mesh2D,
    edges: &[usize],
    phi: Phi,
    bc: &MixedBc,
    rho: Rho,
    form: Form,
) -> Result<MixedBcLoad> {
    check_form(rho, form)?;
    bc.validate(&[])?;
    let space = Space::on_edges(mesh, Degree::P2, edges);
    let n = space.len();
    let mut out = MixedBcLoad { flux: vec![0.0; n], d_flux: vec![0.0; n], robin: vec![0.0; n], d_robin: vec![0.0; n], space };
    let sp = out.space.clone();
    let dofs = |nodes: [usize; 3]| nodes.map(|i| sp.dof(i).expect("node on the curve"));
    let (mut flux, mut d_flux, mut robin, mut d_robin) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    sweep(mesh, edges, rho, phi, |site, p| {
        let g = need_grad(&p.phi)?;
        let (m, r) = (&p.m, &p.rho);
        let nodes = match site {
            Site::Inner(nodes) => nodes,
            Site::End(node, ns) => {
                let d = sp.dof(node).expect("node on the curve");
                d_flux[d] += match (form, r.amp) {
                    (Form::Normal, Some((s, _))) => -s * dot(ns, g),
                    _ => dot(ns, r.v) * dot(m.n, g) - dot(r.v, m.n) * dot(ns, g),
                };
                return Ok(());
            }
        };
        let (gam, dgam) = (bc.gamma)(m.x);
        let chi = bc.c * p.phi.v + gam;
        let dchi = [bc.c * g[0] + dgam[0], bc.c * g[1] + dgam[1]];
        let sigma = (bc.sigma)(m.x, p.phi.v).0;
        let gn = dot(m.n, g);
        let dof = dofs(nodes);
        for a in 0..3 {
            let sg = [m.t[0] * p.dpsi[a], m.t[1] * p.dpsi[a]];
            flux[dof[a]] += p.w * p.psi[a] * gn;
            robin[dof[a]] += p.w * p.psi[a] * chi;
            match (form, r.amp) {
                (Form::Normal, Some((s, _))) => {
                    d_flux[dof[a]] += p.w * (s * dot(sg, g) + p.psi[a] * s * sigma);
                    d_robin[dof[a]] += p.w * p.psi[a] * s * (m.div_n() * chi + dot(m.n, dchi));
                }
                _ => {
                    let rn = dot(r.v, m.n);
                    let wv = [r.v[0] * gn - rn * g[0], r.v[1] * gn - rn * g[1]];
                    let div_rho_chi = chi * dot(m.t, r.ds) + dot(r.v, m.t) * dot(m.t, dchi);
                    d_flux[dof[a]] += p.w * (-dot(sg, wv) + p.psi[a] * sigma * rn);
                    d_robin[dof[a]] += p.w * p.psi[a] * (div_rho_chi + rn * dot(m.n, dchi));
                }
            }
        }
        Ok(())
    })?;
    out.flux = flux;
    out.d_flux = d_flux;
    out.robin = robin;
    out.d_robin = d_robin;
    Ok(out)
}

/// Weak `int psi D_S phi` on `edges` and its first-order change when the
/// boundary is displaced. Each node's test function moves with it.
#[derive(Clone, Debug)]
pub struct ExteriorLoad {
    pub base: BoundaryLoad,
    pub delta: BoundaryLoad,
}

/// `t_ij` acting on `a` from the left: `(a . T)_j`.
fn left(a: Vec2, t: &[[f64; 2]; 2]) -> Vec2 {
    [a[0] * t[0][0] + a[1] * t[1][0], a[0] * t[0][1] + a[1] * t[1][1]]
}

/// Tensor multiplying `phi` (plus the identity times `delta phi`) in the
/// perturbation of `D_S phi`.
fn exterior_tensor(p: &Pt, form: Form) -> Result<[[f64; 2]; 2]> {
    let (m, r) = (&p.m, &p.rho);
    let (t, n) = (m.t, m.n);
    let mut w = [[0.0; 2]; 2];
    let dphi = match (form, r.amp) {
        (Form::Normal, Some((s, sd))) => {
            let k = m.div_n();
            for i in 0..2 {
                w[i][i] += s * k;
                for j in 0..2 {
                    w[i][j] += -s * t[i] * m.dn_ds[j] + sd * t[i] * n[j];
                }
            }
            s * dot(n, need_grad(&p.phi)?)
        }
        _ => {
            // grad_S rho = t (x) d rho/ds
            let div = dot(t, r.ds);
            let gn = dot(r.ds, n);
            for i in 0..2 {
                w[i][i] += div;
                for j in 0..2 {
                    w[i][j] += -r.ds[i] * t[j] + t[i] * gn * n[j];
                }
            }
            match p.phi.grad {
                Some(g) => dot(r.v, g),
                None => dot(r.v, t) * p.phi.ds,
            }
        }
    };
    for i in 0..2 {
        for j in 0..2 {
            w[i][j] *= p.phi.v;
        }
        w[i][i] += dphi;
    }
    Ok(w)
}

pub fn perturbed_exterior_load(mesh: &Mesh2D, edges: &[usize], phi: Phi, rho: Rho, form: Form) -> Result<ExteriorLoad> {
    check_form(rho, form)?;
    let mut base = BoundaryLoad::new(mesh, edges);
    let mut delta = BoundaryLoad::new(mesh, edges);
    let sp = base.space.clone();
    let add = |l: &mut BoundaryLoad, node: usize, v: Vec2| {
        let d = sp.dof(node).expect("node on the curve");
        l.values[d][0] += v[0];
        l.values[d][1] += v[1];
    };
    let (mut b, mut dl) = (base.clone(), delta.clone());
    sweep(mesh, edges, rho, phi, |site, p| {
        let w = exterior_tensor(p, form)?;
        match site {
            Site::Inner(nodes) => {
                for a in 0..3 {
                    let sg = [p.m.t[0] * p.dpsi[a], p.m.t[1] * p.dpsi[a]];
                    add(&mut b, nodes[a], [-sg[0] * p.phi.v * p.w, -sg[1] * p.phi.v * p.w]);
                    let v = left(sg, &w);
                    add(&mut dl, nodes[a], [-v[0] * p.w, -v[1] * p.w]);
                }
            }
            Site::End(node, ns) => {
                add(&mut b, node, [ns[0] * p.phi.v, ns[1] * p.phi.v]);
                add(&mut dl, node, left(ns, &w));
            }
        }
        Ok(())
    })?;
    base.values = b.values;
    delta.values = dl.values;
    Ok(ExteriorLoad { base, delta })
}

/// `delta(n_S dGamma)` per unit contour length from the variation of the
/// contour normal: `n_S . [I div_S rho - (grad_S rho)^T + (grad_S rho . n) n]`.
/// `g` is `grad_S rho` with rows in the tangent plane.
pub fn contour_normal_variation(n: &Vector3<f64>, n_s: &Vector3<f64>, g: &Matrix3<f64>) -> Vector3<f64> {
    let div = g.trace();
    let gn = g * n;
    n_s * div - g * n_s + n * n_s.dot(&gn)
}

/// The same variation built from the line element `t dGamma` and the
/// rotation of the normal: `delta(t dGamma) x n + t x delta(n)`.
pub fn contour_normal_variation_via_tangent(n: &Vector3<f64>, n_s: &Vector3<f64>, g: &Matrix3<f64>) -> Vector3<f64> {
    let t = n.cross(n_s);
    let dt = g.transpose() * t;
    let dn = -(g * n);
    dt.cross(n) + t.cross(&dn)
}

/// Largest difference between the two constructions over random
/// orthonormal frames and random surface gradients.
pub fn contour_variation_discrepancy(frames: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..frames {
        let mut v = || Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v().normalize();
        let a = v();
        let n_s = (a - n * n.dot(&a)).normalize();
        let proj = Matrix3::identity() - n * n.transpose();
        let g = proj * Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let d = contour_normal_variation(&n, &n_s, &g) - contour_normal_variation_via_tangent(&n, &n_s, &g);
        worst = worst.max(d.amax());
    }
    worst
}

/// Largest relative difference between the general expressions evaluated
/// with `rho n` and the normal forms, over random normal displacements and
/// random polynomial fields on `edges`.
pub fn form_discrepancy(mesh: &Mesh2D, edges: &[usize], seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho: Vec<f64> = (0..mesh.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let c = rng.gen_range(-2.0..0.0);
    let phi = move |x: Vec2| {
        (
            a[0] + a[1] * x[0] + a[2] * x[1] + a[3] * x[0] * x[1] + a[4] * x[0] * x[0] + a[5] * x[1] * x[1],
            [a[1] + a[3] * x[1] + 2.0 * a[4] * x[0], a[2] + a[3] * x[0] + 2.0 * a[5] * x[1]],
        )
    };
    let gamma = move |x: Vec2| (a[5] * x[0] - a[4], [a[5], 0.0]);
    let sigma = |x: Vec2, p: f64| (p * p + x[1], 2.0 * p);
    let bc = MixedBc { c, gamma: &gamma, sigma: &sigma };
    let f = Phi::Analytic(&phi);
    let (g, nr) = (Rho::Normal(&rho), Form::Normal);
    let rel = |x: f64, y: f64, s: f64| (x - y).abs() / s.max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;

    let d0 = perturbed_domain_integral(mesh, f, edges, g, Form::General)?;
    let d1 = perturbed_domain_integral(mesh, f, edges, g, nr)?;
    worst = worst.max(rel(d0.delta, d1.delta, d1.delta.abs().max(d1.base.abs())));

    let b0 = perturbed_boundary_integral(mesh, edges, f, g, Form::General)?;
    let b1 = perturbed_boundary_integral(mesh, edges, f, g, nr)?;
    worst = worst.max(rel(b0.delta, b1.delta, b1.delta.abs().max(b1.base.abs())));

    let m0 = perturbed_mixed_bc(mesh, edges, f, &bc, g, Form::General)?.perturbation();
    let m1 = perturbed_mixed_bc(mesh, edges, f, &bc, g, nr)?.perturbation();
    let scale = m1.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    worst = worst.max(m0.iter().zip(&m1).fold(0.0f64, |w, (x, y)| w.max(rel(*x, *y, scale))));

    let e0 = perturbed_exterior_load(mesh, edges, f, g, Form::General)?.delta.values;
    let e1 = perturbed_exterior_load(mesh, edges, f, g, nr)?.delta.values;
    let scale = e1.iter().fold(0.0f64, |s, v| s.max(v[0].abs()).max(v[1].abs()));
    for (x, y) in e0.iter().zip(&e1) {
        worst = worst.max(rel(x[0], y[0], scale)).max(rel(x[1], y[1], scale));
    }
    Ok(worst)
}

/// `int grad psi . grad phi + psi sigma(phi) - oint psi (c phi + gamma)`
/// with P2 elements over the whole mesh.
pub struct RobinPoisson<'a> {
    mesh: &'a Mesh2D,
    bc: &'a MixedBc<'a>,
    pub space: Space,
    layout: BlockLayout,
    tri: TriTable,
    edge: EdgeTable,
}

struct Cells<'a, 'b>(&'b RobinPoisson<'a>);
struct Edges<'a, 'b>(&'b RobinPoisson<'a>);

impl<'a> RobinPoisson<'a> {
    pub fn new(mesh: &'a Mesh2D, bc: &'a MixedBc<'a>) -> Result<Self> {
        if !mesh.is_quadratic() {
            return Err(Error::Usage("the Robin problem needs a quadratic mesh".into()));
        }
        let space = Space::domain(mesh, Degree::P2, false);
        let layout = BlockLayout::new(&[("phi", space.len())])?;
        Ok(RobinPoisson { mesh, bc, space, layout, tri: TriTable::new(5), edge: EdgeTable::new(POINTS) })
    }
}

impl Kernel<6> for Cells<'_, '_> {
    fn len(&self) -> usize {
        self.0.mesh.cells.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 6], [f64; 6]) {
        let cols = self.0.mesh.cell_nodes(e).map(|i| self.0.space.dof(i));
        (cols, cols.map(|c| c.map_or(0.0, |k| state[k])))
    }

    fn eval<S: Scalar>(&self, e: usize, u: &[S; 6], out: &mut Vec<(usize, S)>) -> Result<()> {
        let p = self.0;
        let x = p.mesh.cell_coords(e, None);
        let mut r = [S::zero(); 6];
        for q in 0..p.tri.len() {
            let map = TriMap::<f64>::new(&x, &p.tri.d2[q]);
            if map.det <= 0.0 {
                return Err(Error::InvertedElement { cell: e, det: map.det });
            }
            let w = p.tri.w[q] * map.det;
            let g: Vec<Vec2> = (0..6).map(|a| map.grad(&p.tri.d2[q][a])).collect();
            let mut gu = [S::zero(); 2];
            for a in 0..6 {
                gu[0] += u[a] * g[a][0];
                gu[1] += u[a] * g[a][1];
            }
            let uq = interp(u, &p.tri.n2[q]);
            let xq = [interp(&x.map(|v| v[0]), &p.tri.n2[q]), interp(&x.map(|v| v[1]), &p.tri.n2[q])];
            let (s, ds) = (p.bc.sigma)(xq, uq.value());
            let sig = uq.chain(s, ds);
            for a in 0..6 {
                r[a] += (gu[0] * g[a][0] + gu[1] * g[a][1]) * w + sig * (p.tri.n2[q][a] * w);
            }
        }
        for (a, i) in p.mesh.cell_nodes(e).into_iter().enumerate() {
            out.push((p.space.dof(i).expect("P2 space covers every node"), r[a]));
        }
        Ok(())
    }
}

impl Kernel<3> for Edges<'_, '_> {
    fn len(&self) -> usize {
        self.0.mesh.boundary.len()
    }

    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; 3], [f64; 3]) {
        let cols = self.0.mesh.boundary[e].nodes().map(|i| self.0.space.dof(i));
        (cols, cols.map(|c| c.map_or(0.0, |k| state[k])))
    }

    fn eval<S: Scalar>(&self, e: usize, u: &[S; 3], out: &mut Vec<(usize, S)>) -> Result<()> {
        let p = self.0;
        let be = p.mesh.boundary[e];
        let x = p.mesh.edge_coords(&be, None);
        let mut r = [S::zero(); 3];
        for q in 0..p.edge.len() {
            let m = EdgeMap::<f64>::new(&x, p.edge.xi[q]);
            let w = p.edge.w[q] * m.js;
            let chi = interp(u, &p.edge.n[q]) * p.bc.c + (p.bc.gamma)(m.x).0;
            for a in 0..3 {
                r[a] -= chi * (p.edge.n[q][a] * w);
            }
        }
        for (a, i) in be.nodes().into_iter().enumerate() {
            out.push((p.space.dof(i).expect("boundary nodes carry dofs"), r[a]));
        }
        Ok(())
    }
}

impl WeakForm for RobinPoisson<'_> {
    fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    fn assemble(&self, state: &[f64], jacobian: bool, exec: Execution) -> Result<Assembly> {
        let mut acc = Assembly::new(self.layout.len());
        assemble(&Cells(self), state, jacobian, exec, &mut acc)?;
        assemble(&Edges(self), state, jacobian, exec, &mut acc)?;
        Ok(acc)
    }
}

impl RobinPoisson<'_> {
    pub fn solve(&self, initial: Option<Vec<f64>>, settings: &NewtonSettings, exec: Execution) -> Result<Vec<f64>> {
        let x0 = initial.unwrap_or_else(|| vec![0.0; self.space.len()]);
        Ok(newton_solve(self, x0, settings, exec)?.0)
    }
}

/// One row of the comparison against direct solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DemoRow {
    pub delta: f64,
    /// `|phi_delta - phi_0 - delta phi_1| / |phi_0|` on the undisturbed core
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct PoissonDemoReport {
    pub space: Space,
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
    pub rows: Vec<DemoRow>,
}

impl PoissonDemoReport {
    /// `log2`-type slopes between consecutive rows.
    pub fn slopes(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| (w[0].error / w[1].error).ln() / (w[0].delta / w[1].delta).ln())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,error\n");
        for r in &self.rows {
            s.push_str(&format!("{:.12e},{:.12e}\n", r.delta, r.error));
        }
        s
    }
}

/// Copy of a disk mesh with the outer half stretched so that the boundary
/// radius grows by `d`; nodes inside half the radius stay put.
fn stretched_disk(mesh: &Mesh2D, radius: f64, d: f64) -> Mesh2D {
    let mut out = mesh.clone();
    for v in out.vertices.iter_mut() {
        let u = ((v[0].hypot(v[1]) / radius - 0.5) / 0.5).clamp(0.0, 1.0);
        let s = 1.0 + d / radius * u * u * (3.0 - 2.0 * u);
        v[0] *= s;
        v[1] *= s;
    }
    out
}

/// Linearised Robin-Poisson problem on a disk centred at the origin whose
/// radius grows by `eps rho1`. The first-order field solves the zeroth-order
/// Jacobian with the normal-form boundary load; the check compares
/// `phi_0 + delta phi_1` with direct solves on stretched meshes.
pub fn linearize_poisson_demo(
    mesh: &Mesh2D,
    bc: &MixedBc,
    rho1: f64,
    deltas: &[f64],
    settings: &NewtonSettings,
    exec: Execution,
) -> Result<PoissonDemoReport> {
    let edges: Vec<usize> = (0..mesh.boundary.len()).collect();
    let radius = mesh.boundary.iter().map(|e| mesh.vertices[e.v[0]][0].hypot(mesh.vertices[e.v[0]][1])).fold(0.0, f64::max);
    let zeroth = RobinPoisson::new(mesh, bc)?;
    let phi0 = zeroth.solve(None, settings, exec)?;
    let nodal0 = zeroth.space.to_nodes(&phi0);
    let rho = vec![rho1; mesh.n_nodes()];
    let load = perturbed_mixed_bc(mesh, &edges, Phi::Fe(&nodal0), bc, Rho::Normal(&rho), Form::Normal)?;
    let jac = zeroth.assemble(&phi0, true, exec)?;
    let mut rhs = vec![0.0; phi0.len()];
    for (d, v) in load.perturbation().into_iter().enumerate() {
        let node = load.space.node(d);
        rhs[zeroth.space.dof(node).expect("P2 space covers every node")] -= v;
    }
    let phi1 = solve_sparse(phi0.len(), &jac.triplets, &rhs, Some(&zeroth.layout))?;

    let core: Vec<usize> = (0..mesh.cells.len())
        .filter(|&c| mesh.cell_nodes(c).iter().all(|&i| mesh.vertices[i][0].hypot(mesh.vertices[i][1]) <= 0.5 * radius))
        .collect();
    if core.is_empty() {
        return Err(Error::Mesh("mesh too coarse for the comparison core".into()));
    }
    let tab = TriTable::new(5);
    let core_norm = |f: &dyn Fn(usize) -> f64| {
        let mut s = 0.0;
        for &c in &core {
            let x = mesh.cell_coords(c, None);
            let v = mesh.cell_nodes(c).map(|i| f(zeroth.space.dof(i).unwrap()));
            for q in 0..tab.len() {
                s += tab.w[q] * TriMap::<f64>::new(&x, &tab.d2[q]).det * interp(&v, &tab.n2[q]).powi(2);
            }
        }
        s.sqrt()
    };
    let norm0 = core_norm(&|d| phi0[d]);
    let mut rows = Vec::new();
    for &delta in deltas {
        let m = stretched_disk(mesh, radius, delta * rho1);
        let direct = RobinPoisson::new(&m, bc)?.solve(Some(phi0.clone()), settings, exec)?;
        let err = core_norm(&|d| direct[d] - phi0[d] - delta * phi1[d]);
        log::info!("poisson demo: delta {delta:.3e} error {:.3e}", err / norm0);
        rows.push(DemoRow { delta, error: err / norm0 });
    }
    Ok(PoissonDemoReport { space: zeroth.space, phi0, phi1, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, build_rectangle_mesh};
    use std::f64::consts::PI;

    fn disk(r: f64, h: f64) -> (Mesh2D, Vec<usize>) {
        let m = build_disk_mesh(r, h, true).unwrap();
        let e = (0..m.boundary.len()).collect();
        (m, e)
    }

    fn displaced(mesh: &Mesh2D, d: &[Vec2], s: f64) -> Mesh2D {
        let mut m = mesh.clone();
        for (v, di) in m.vertices.iter_mut().zip(d) {
            v[0] += s * di[0];
            v[1] += s * di[1];
        }
        m
    }

    fn random_boundary_vectors(mesh: &Mesh2D, seed: u64) -> Vec<Vec2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = vec![[0.0; 2]; mesh.n_nodes()];
        for e in &mesh.boundary {
            for i in e.nodes() {
                v[i] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            }
        }
        v
    }

    fn quad(x: Vec2) -> (f64, Vec2) {
        (1.0 + x[0] * x[1] + 0.5 * x[0] * x[0], [x[1] + x[0], x[0]])
    }

    #[test]
    fn contour_variation_constructions_agree() {
        assert!(contour_variation_discrepancy(1000, 3) < 1e-14);
    }

    #[test]
    fn disk_area_grows_with_uniform_normal_displacement() {
        let (m, e) = disk(0.7, 0.1);
        let one = |_: Vec2| (1.0, [0.0, 0.0]);
        for rb in [1e-2, 1e-3] {
            let rho = vec![rb; m.n_nodes()];
            let p = perturbed_domain_integral(&m, Phi::Analytic(&one), &e, Rho::Normal(&rho), Form::Normal).unwrap();
            let exact = PI * (0.7f64 + rb).powi(2);
            assert!((p.total() - exact).abs() < 2.0 * PI * rb * rb + 1e-6, "{} vs {exact}", p.total());
        }
    }

    #[test]
    fn domain_integral_ignores_zero_and_tangential_displacement() {
        let (m, e) = disk(1.0, 0.2);
        let zero = vec![[0.0; 2]; m.n_nodes()];
        let p = perturbed_domain_integral(&m, Phi::Analytic(&quad), &e, Rho::Vector(&zero), Form::General).unwrap();
        assert_eq!(p.delta, 0.0);
        // the rigid rotation field is tangent to a circle
        let rot: Vec<Vec2> = m.vertices.iter().map(|x| [-x[1], x[0]]).collect();
        let p = perturbed_domain_integral(&m, Phi::Analytic(&quad), &e, Rho::Vector(&rot), Form::General).unwrap();
        assert!(p.delta.abs() < 1e-5, "{}", p.delta);
    }

    #[test]
    fn domain_integral_matches_displaced_mesh() {
        let (m, e) = disk(1.0, 0.25);
        let rho = random_boundary_vectors(&m, 11);
        let p = perturbed_domain_integral(&m, Phi::Analytic(&quad), &e, Rho::Vector(&rho), Form::General).unwrap();
        let h = 1e-6;
        let plus = perturbed_domain_integral(&displaced(&m, &rho, h), Phi::Analytic(&quad), &e, Rho::Vector(&rho), Form::General).unwrap();
        let minus = perturbed_domain_integral(&displaced(&m, &rho, -h), Phi::Analytic(&quad), &e, Rho::Vector(&rho), Form::General).unwrap();
        let fd = (plus.base - minus.base) / (2.0 * h);
        assert!((fd - p.delta).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} vs {}", p.delta);
    }

    #[test]
    fn circumference_grows_with_outward_displacement() {
        let (m, e) = disk(0.8, 0.1);
        let one = |_: Vec2| (1.0, [0.0, 0.0]);
        let rb = 1e-3;
        let rho = vec![rb; m.n_nodes()];
        for form in [Form::General, Form::Normal] {
            let p = perturbed_boundary_integral(&m, &e, Phi::Analytic(&one), Rho::Normal(&rho), form).unwrap();
            assert!((p.total() - 2.0 * PI * (0.8 + rb)).abs() < 1e-4, "{}", p.total());
            assert!((p.delta - 2.0 * PI * rb).abs() < 1e-5, "{}", p.delta);
        }
    }

    #[test]
    fn boundary_integral_rejects_boundary_only_fields() {
        let (m, e) = disk(1.0, 0.3);
        let v = vec![1.0; m.n_nodes()];
        let rho = vec![0.1; m.n_nodes()];
        let r = perturbed_boundary_integral(&m, &e, Phi::Boundary(&v), Rho::Normal(&rho), Form::General);
        assert!(matches!(r, Err(Error::Usage(_))));
        let rv = vec![[0.0; 2]; m.n_nodes()];
        let r = perturbed_boundary_integral(&m, &e, Phi::Analytic(&quad), Rho::Vector(&rv), Form::Normal);
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn boundary_integral_matches_displaced_mesh_on_open_arc() {
        let (m, _) = disk(1.0, 0.05);
        let arc: Vec<usize> = (0..m.boundary.len()).filter(|&e| m.vertices[m.boundary[e].mid.unwrap()][1] > 0.0).collect();
        let rho = random_boundary_vectors(&m, 5);
        let p = perturbed_boundary_integral(&m, &arc, Phi::Analytic(&quad), Rho::Vector(&rho), Form::General).unwrap();
        let h = 1e-6;
        let f = |s: f64| perturbed_boundary_integral(&displaced(&m, &rho, s), &arc, Phi::Analytic(&quad), Rho::Vector(&rho), Form::General).unwrap().base;
        let fd = (f(h) - f(-h)) / (2.0 * h);
        // kinks between curved edges are invisible to the smooth expansion
        assert!((fd - p.delta).abs() < 2e-2 * (1.0 + fd.abs()), "{fd} vs {}", p.delta);
    }

    fn no_gamma(_: Vec2) -> (f64, Vec2) {
        (0.0, [0.0, 0.0])
    }

    fn no_sigma(_: Vec2, _: f64) -> (f64, f64) {
        (0.0, 0.0)
    }

    #[test]
    fn mixed_condition_without_displacement_is_the_robin_residual() {
        let (m, e) = disk(1.0, 0.2);
        let gamma = |x: Vec2| (x[0], [1.0, 0.0]);
        let bc = MixedBc { c: -0.5, gamma: &gamma, sigma: &no_sigma };
        let zero = vec![0.0; m.n_nodes()];
        let l = perturbed_mixed_bc(&m, &e, Phi::Analytic(&quad), &bc, Rho::Normal(&zero), Form::General).unwrap();
        assert!(l.perturbation().iter().all(|v| *v == 0.0));
        let direct = |x: Vec2| {
            let (p, g) = quad(x);
            let n = [x[0], x[1]];
            dot(n, g) + 0.5 * p - x[0]
        };
        let sum: f64 = l.residual().iter().sum();
        let rule = interval(POINTS);
        let exact: f64 = (0..m.boundary.len())
            .flat_map(|e| rule.iter().map(move |q| (e, *q)))
            .map(|(e, (xi, w))| {
                let mp = EdgeMap::<f64>::new(&m.edge_coords(&m.boundary[e], None), xi);
                w * mp.js * direct(mp.x)
            })
            .sum();
        assert!((sum - exact).abs() < 1e-3, "{sum} vs {exact}");
    }

    #[test]
    fn flat_neumann_boundary_is_unaffected_by_normal_shift() {
        let m = build_rectangle_mesh([0.0, 0.0], [2.0, 1.0], 6, 3).unwrap();
        let bottom: Vec<usize> = (0..m.boundary.len())
            .filter(|&e| m.boundary[e].v.iter().all(|&i| m.vertices[i][1] == 0.0))
            .collect();
        assert!(!bottom.is_empty());
        let lin = |_: Vec2| (0.0, [0.7, -0.3]);
        let lin = move |x: Vec2| (0.7 * x[0] - 0.3 * x[1], lin(x).1);
        let bc = MixedBc { c: 0.0, gamma: &no_gamma, sigma: &no_sigma };
        let rho = vec![0.25; m.n_nodes()];
        for form in [Form::General, Form::Normal] {
            let l = perturbed_mixed_bc(&m, &bottom, Phi::Analytic(&lin), &bc, Rho::Normal(&rho), form).unwrap();
            assert!(l.perturbation().iter().all(|v| v.abs() < 1e-14), "{:?}", l.perturbation());
        }
    }

    #[test]
    fn flux_through_displaced_half_circle() {
        // harmonic part plus y^2, so that div grad phi = 2
        let phi = |x: Vec2| (x[0] * x[0] * x[1] - x[1].powi(3) / 3.0 + x[1] * x[1] + x[0], [2.0 * x[0] * x[1] + 1.0, x[0] * x[0] - x[1] * x[1] + 2.0 * x[1]]);
        let sigma = |_: Vec2, _: f64| (2.0, 0.0);
        let bc = MixedBc { c: 0.0, gamma: &no_gamma, sigma: &sigma };
        // flux through the upper half of the circle of radius r
        let flux = |r: f64| {
            let n = 4000;
            (0..n)
                .map(|k| {
                    let th = PI * (k as f64 + 0.5) / n as f64;
                    let (c, s) = (th.cos(), th.sin());
                    dot([c, s], phi([r * c, r * s]).1) * r * PI / n as f64
                })
                .sum::<f64>()
        };
        let exact = (flux(1.0 + 1e-5) - flux(1.0 - 1e-5)) / 2e-5;
        let (m, _) = disk(1.0, 0.05);
        let arc: Vec<usize> = (0..m.boundary.len()).filter(|&e| m.vertices[m.boundary[e].mid.unwrap()][1] > 0.0).collect();
        let rho = vec![1.0; m.n_nodes()];
        for form in [Form::General, Form::Normal] {
            let l = perturbed_mixed_bc(&m, &arc, Phi::Analytic(&phi), &bc, Rho::Normal(&rho), form).unwrap();
            let d: f64 = l.d_flux.iter().sum();
            assert!((d - exact).abs() < 1e-3 * exact.abs().max(1.0), "{d} vs {exact}");
        }
    }

    #[test]
    fn exterior_load_is_the_derivative_of_the_displaced_load() {
        let (m, _) = disk(1.0, 0.2);
        let arc: Vec<usize> = (0..m.boundary.len()).filter(|&e| m.vertices[m.boundary[e].mid.unwrap()][1] > 0.0).collect();
        let rho = random_boundary_vectors(&m, 9);
        let l = perturbed_exterior_load(&m, &arc, Phi::Analytic(&quad), Rho::Vector(&rho), Form::General).unwrap();
        let h = 1e-6;
        let f = |s: f64| perturbed_exterior_load(&displaced(&m, &rho, s), &arc, Phi::Analytic(&quad), Rho::Vector(&rho), Form::General).unwrap().base.values;
        let (p, q) = (f(h), f(-h));
        for i in 0..p.len() {
            for k in 0..2 {
                let fd = (p[i][k] - q[i][k]) / (2.0 * h);
                assert!((fd - l.delta.values[i][k]).abs() < 1e-6, "{fd} vs {}", l.delta.values[i][k]);
            }
        }
        let zero = vec![[0.0; 2]; m.n_nodes()];
        let z = perturbed_exterior_load(&m, &arc, Phi::Analytic(&quad), Rho::Vector(&zero), Form::General).unwrap();
        assert!(z.delta.values.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn uniform_normal_shift_keeps_the_curvature_load_of_a_circle() {
        let (m, e) = disk(0.5, 0.1);
        let one = |_: Vec2| (1.0, [0.0, 0.0]);
        let rho = vec![1.0; m.n_nodes()];
        let l = perturbed_exterior_load(&m, &e, Phi::Analytic(&one), Rho::Normal(&rho), Form::Normal).unwrap();
        let scale = l.base.values.iter().fold(0.0f64, |s, v| s.max(v[0].abs()));
        assert!(l.delta.values.iter().all(|v| v[0].abs() < 1e-12 * scale && v[1].abs() < 1e-12 * scale));
        // the weak load of the scaled circle is indeed unchanged
        let bigger = displaced(&m, &m.vertices.iter().map(|x| [x[0] * 0.2, x[1] * 0.2]).collect::<Vec<_>>(), 1.0);
        let b = perturbed_exterior_load(&bigger, &e, Phi::Analytic(&one), Rho::Normal(&rho), Form::Normal).unwrap();
        for (x, y) in b.base.values.iter().zip(&l.base.values) {
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_only_field_uses_the_surface_gradient() {
        let (m, e) = disk(1.0, 0.25);
        let v: Vec<f64> = m.vertices.iter().map(|x| x[0]).collect();
        let rho = random_boundary_vectors(&m, 2);
        assert!(perturbed_exterior_load(&m, &e, Phi::Boundary(&v), Rho::Vector(&rho), Form::General).is_ok());
        let rn = vec![1.0; m.n_nodes()];
        let r = perturbed_exterior_load(&m, &e, Phi::Boundary(&v), Rho::Normal(&rn), Form::Normal);
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn general_and_normal_forms_agree_on_a_circle() {
        let (m, e) = disk(1.0, 0.15);
        for seed in 0..3 {
            assert!(form_discrepancy(&m, &e, seed).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sigma_derivative_is_checked() {
        let bad = |_: Vec2, p: f64| (p * p, p);
        let bc = MixedBc { c: -1.0, gamma: &no_gamma, sigma: &bad };
        assert!(matches!(bc.validate(&[([0.0, 0.0], 1.0)]), Err(Error::Config(_))));
        let nan = MixedBc { c: f64::NAN, gamma: &no_gamma, sigma: &no_sigma };
        assert!(nan.validate(&[]).is_err());
    }

    #[test]
    fn homogeneous_robin_problem_stays_trivial() {
        let (m, _) = disk(1.0, 0.3);
        let bc = MixedBc { c: -1.0, gamma: &no_gamma, sigma: &no_sigma };
        let r = linearize_poisson_demo(&m, &bc, 1.0, &[], &NewtonSettings::default(), Execution::Sequential).unwrap();
        assert!(r.phi0.iter().all(|v| v.abs() < 1e-12));
        assert!(r.phi1.iter().all(|v| v.abs() < 1e-12));
    }
}

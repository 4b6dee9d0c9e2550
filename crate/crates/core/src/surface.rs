//! Boundary frames and the boundary operators: surface gradient and the
//! exterior differential `D_S`, realised weakly through
//! `int psi D_S phi = [n_S psi phi] - int (grad_S psi) phi`, together with
//! discrete checks of the volume and boundary Stokes theorems.

use crate::error::{Error, Result};
use crate::fem::basis::{p2_edge, EdgeMap, TriMap, TriTable};
use crate::fem::quadrature::interval;
use crate::fem::space::{Degree, Space};
use crate::fem::linsolve::solve_sparse;
use crate::mesh::Mesh2D;
use std::collections::HashMap;

pub type Vec2 = [f64; 2];

/// Geometric frame at one point of a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceFrame {
    pub point: Vec2,
    /// outward normal of the domain
    pub n: Vec2,
    pub t: Vec2,
    /// contour normal, present at the two ends of the edge (`-t`, `+t`)
    pub n_s: Option<Vec2>,
    /// surface identity `I - n n`
    pub i_s: [[f64; 2]; 2],
    /// arclength metric of the edge parametrisation
    pub jacobian: f64,
    /// `div_S n`
    pub div_n: f64,
}

/// Gradient data of a field at a boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorSample {
    pub grad: Option<Vec2>,
    pub sgrad: Vec2,
    /// pointwise mean curvature vector `-n div_S n`
    pub curvature_vector: Vec2,
}

/// Scalar field known either on a neighbourhood of the boundary (value and
/// full gradient) or only through nodal values on the boundary.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Domain(&'a (dyn Fn(Vec2) -> (f64, Vec2) + Sync)),
    /// values indexed by mesh node
    Nodal(&'a [f64]),
}

fn edge_map(mesh: &Mesh2D, edge: usize, xi: f64, disp: Option<&[Vec2]>) -> Result<EdgeMap<f64>> {
    let e = mesh
        .boundary
        .get(edge)
        .ok_or_else(|| Error::Usage(format!("edge {edge} is not a boundary edge")))?;
    let m = EdgeMap::new(&mesh.edge_coords(e, disp), xi);
    if !(m.js > 1e-14) {
        return Err(Error::Geometry(format!("degenerate boundary edge {edge}")));
    }
    Ok(m)
}

pub fn frame_at(mesh: &Mesh2D, edge: usize, xi: f64, disp: Option<&[Vec2]>) -> Result<SurfaceFrame> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::Usage(format!("local coordinate {xi} outside [0, 1]")));
    }
    let m = edge_map(mesh, edge, xi, disp)?;
    let n = m.n;
    let n_s = if xi == 0.0 {
        Some([-m.t[0], -m.t[1]])
    } else if xi == 1.0 {
        Some(m.t)
    } else {
        None
    };
    Ok(SurfaceFrame {
        point: m.x,
        n,
        t: m.t,
        n_s,
        i_s: [[1.0 - n[0] * n[0], -n[0] * n[1]], [-n[1] * n[0], 1.0 - n[1] * n[1]]],
        jacobian: m.js,
        div_n: m.div_n(),
    })
}

fn nodal_on_edge(mesh: &Mesh2D, edge: usize, v: &[f64], xi: f64) -> Result<(f64, f64)> {
    let e = &mesh.boundary[edge];
    let mid = e.mid.ok_or_else(|| Error::Usage("nodal boundary fields need a quadratic mesh".into()))?;
    let (n, d, _) = p2_edge(xi);
    let vals = [v[e.v[0]], v[e.v[1]], v[mid]];
    Ok((
        vals.iter().zip(n).map(|(a, b)| a * b).sum(),
        vals.iter().zip(d).map(|(a, b)| a * b).sum(),
    ))
}

/// Value and surface gradient of a field at a boundary point.
fn sample(field: Field, mesh: &Mesh2D, edge: usize, m: &EdgeMap<f64>, xi: f64) -> Result<(f64, Vec2, Option<Vec2>)> {
    match field {
        Field::Domain(f) => {
            let (v, g) = f(m.x);
            let gn = g[0] * m.n[0] + g[1] * m.n[1];
            Ok((v, [g[0] - gn * m.n[0], g[1] - gn * m.n[1]], Some(g)))
        }
        Field::Nodal(vals) => {
            let (v, dxi) = nodal_on_edge(mesh, edge, vals, xi)?;
            Ok((v, m.sgrad(dxi), None))
        }
    }
}

/// `I_S . grad phi`, or the arclength derivative along `t` for boundary-only fields.
pub fn surface_gradient(field: Field, mesh: &Mesh2D, edge: usize, xi: f64, disp: Option<&[Vec2]>) -> Result<Vec2> {
    let m = edge_map(mesh, edge, xi, disp)?;
    Ok(sample(field, mesh, edge, &m, xi)?.1)
}

/// Full gradient; boundary-only fields have none.
pub fn volume_gradient(field: Field, mesh: &Mesh2D, edge: usize, xi: f64, disp: Option<&[Vec2]>) -> Result<Vec2> {
    let m = edge_map(mesh, edge, xi, disp)?;
    sample(field, mesh, edge, &m, xi)?
        .2
        .ok_or_else(|| Error::Usage("field is only defined on the boundary".into()))
}

pub fn operator_sample(field: Field, mesh: &Mesh2D, edge: usize, xi: f64, disp: Option<&[Vec2]>) -> Result<OperatorSample> {
    let m = edge_map(mesh, edge, xi, disp)?;
    let (_, sgrad, grad) = sample(field, mesh, edge, &m, xi)?;
    let k = m.div_n();
    Ok(OperatorSample { grad, sgrad, curvature_vector: [-m.n[0] * k, -m.n[1] * k] })
}

/// End points of the curve formed by `edges` with their contour normals.
/// Empty for a closed curve; an error for branching curves.
pub fn contour(mesh: &Mesh2D, edges: &[usize], disp: Option<&[Vec2]>) -> Result<Vec<(usize, Vec2)>> {
    let mut starts: HashMap<usize, usize> = HashMap::new();
    let mut ends: HashMap<usize, usize> = HashMap::new();
    for &e in edges {
        let v = mesh.boundary[e].v;
        if starts.insert(v[0], e).is_some() || ends.insert(v[1], e).is_some() {
            return Err(Error::Topology("boundary curve branches".into()));
        }
    }
    let mut out = Vec::new();
    for (&node, &e) in &starts {
        if !ends.contains_key(&node) {
            let t = frame_at(mesh, e, 0.0, disp)?.t;
            out.push((node, [-t[0], -t[1]]));
        }
    }
    for (&node, &e) in &ends {
        if !starts.contains_key(&node) {
            out.push((node, frame_at(mesh, e, 1.0, disp)?.t));
        }
    }
    out.sort_by_key(|p| p.0);
    Ok(out)
}

pub fn is_closed(mesh: &Mesh2D, edges: &[usize]) -> Result<bool> {
    Ok(contour(mesh, edges, None)?.is_empty())
}

/// Boundary load indexed by the dofs of a P2 space on the edges.
#[derive(Clone, Debug)]
pub struct BoundaryLoad {
    pub space: Space,
    pub values: Vec<Vec2>,
}

impl BoundaryLoad {
    pub fn new(mesh: &Mesh2D, edges: &[usize]) -> Self {
        let space = Space::on_edges(mesh, Degree::P2, edges);
        let values = vec![[0.0; 2]; space.len()];
        BoundaryLoad { space, values }
    }

    pub fn total(&self) -> Vec2 {
        self.values.iter().fold([0.0; 2], |a, v| [a[0] + v[0], a[1] + v[1]])
    }

    fn add(&mut self, node: usize, v: Vec2) {
        let d = self.space.dof(node).expect("node on the curve");
        self.values[d][0] += v[0];
        self.values[d][1] += v[1];
    }
}

pub(crate) const EDGE_POINTS: usize = 4;

/// Weak form of `int psi D_S phi` for every P2 test function on `edges`.
/// Open curves need `with_contour` so that the end-point terms are added.
pub fn weak_exterior_differential(
    mesh: &Mesh2D,
    edges: &[usize],
    field: Field,
    with_contour: bool,
    disp: Option<&[Vec2]>,
) -> Result<BoundaryLoad> {
    let ends = contour(mesh, edges, disp)?;
    if !ends.is_empty() && !with_contour {
        return Err(Error::Usage("open boundary needs contour terms".into()));
    }
    let mut load = BoundaryLoad::new(mesh, edges);
    let rule = interval(EDGE_POINTS);
    for &e in edges {
        let be = mesh.boundary[e];
        let nodes = [be.v[0], be.v[1], be.mid.unwrap_or(usize::MAX)];
        for &(xi, w) in &rule {
            let m = edge_map(mesh, e, xi, disp)?;
            let (phi, _, _) = sample(field, mesh, e, &m, xi)?;
            let (_, d, _) = p2_edge(xi);
            for a in 0..3 {
                if nodes[a] == usize::MAX {
                    continue;
                }
                let g = m.sgrad(d[a]);
                load.add(nodes[a], [-g[0] * phi * w * m.js, -g[1] * phi * w * m.js]);
            }
        }
    }
    for (node, ns) in ends {
        let e = edges.iter().copied().find(|&e| mesh.boundary[e].v.contains(&node)).unwrap();
        let xi = if mesh.boundary[e].v[0] == node { 0.0 } else { 1.0 };
        let m = edge_map(mesh, e, xi, disp)?;
        let (phi, _, _) = sample(field, mesh, e, &m, xi)?;
        load.add(node, [ns[0] * phi, ns[1] * phi]);
    }
    Ok(load)
}

/// `int psi grad_S phi` and `int psi (-n div_S n) phi` for every P2 test function.
pub fn weak_gradient_and_curvature(
    mesh: &Mesh2D,
    edges: &[usize],
    field: Field,
    disp: Option<&[Vec2]>,
) -> Result<(BoundaryLoad, BoundaryLoad)> {
    let mut grad = BoundaryLoad::new(mesh, edges);
    let mut curv = BoundaryLoad::new(mesh, edges);
    for &e in edges {
        let be = mesh.boundary[e];
        for &(xi, w) in &interval(EDGE_POINTS) {
            let m = edge_map(mesh, e, xi, disp)?;
            let (phi, sg, _) = sample(field, mesh, e, &m, xi)?;
            let (n, _, _) = p2_edge(xi);
            let k = m.div_n();
            let ww = w * m.js;
            for (a, node) in [be.v[0], be.v[1]].into_iter().chain(be.mid).enumerate() {
                grad.add(node, [n[a] * sg[0] * ww, n[a] * sg[1] * ww]);
                curv.add(node, [-n[a] * m.n[0] * k * phi * ww, -n[a] * m.n[1] * k * phi * ww]);
            }
        }
    }
    Ok((grad, curv))
}

/// Boundary mass matrix of the P2 space on `edges`.
pub fn boundary_mass(mesh: &Mesh2D, space: &Space, edges: &[usize], disp: Option<&[Vec2]>) -> Result<Vec<(usize, usize, f64)>> {
    let mut t = Vec::new();
    for &e in edges {
        let be = mesh.boundary[e];
        let nodes: Vec<usize> = [be.v[0], be.v[1]].into_iter().chain(be.mid).collect();
        for &(xi, w) in &interval(EDGE_POINTS) {
            let m = edge_map(mesh, e, xi, disp)?;
            let (n, _, _) = p2_edge(xi);
            for (a, &i) in nodes.iter().enumerate() {
                for (b, &j) in nodes.iter().enumerate() {
                    if let (Some(di), Some(dj)) = (space.dof(i), space.dof(j)) {
                        t.push((di, dj, n[a] * n[b] * w * m.js));
                    }
                }
            }
        }
    }
    Ok(t)
}

/// Mean curvature vector recovered as the L2 projection of the weak `D_S 1`
/// on a closed curve. Returns nodal vectors in the load's space.
pub fn recover_curvature(mesh: &Mesh2D, edges: &[usize], disp: Option<&[Vec2]>) -> Result<BoundaryLoad> {
    if !is_closed(mesh, edges)? {
        return Err(Error::Topology("curvature recovery needs a closed curve".into()));
    }
    let one = |_: Vec2| (1.0, [0.0, 0.0]);
    let mut load = weak_exterior_differential(mesh, edges, Field::Domain(&one), false, disp)?;
    let mass = boundary_mass(mesh, &load.space, edges, disp)?;
    let n = load.space.len();
    for c in 0..2 {
        let b: Vec<f64> = load.values.iter().map(|v| v[c]).collect();
        let x = solve_sparse(n, &mass, &b, None)?;
        for (v, xi) in load.values.iter_mut().zip(x) {
            v[c] = xi;
        }
    }
    Ok(load)
}

/// L2 distance over `edges` between a nodal P2 vector field and `exact`.
pub fn boundary_l2_error(
    mesh: &Mesh2D,
    edges: &[usize],
    field: &BoundaryLoad,
    exact: impl Fn(Vec2) -> Vec2,
    disp: Option<&[Vec2]>,
) -> Result<f64> {
    let mut e2 = 0.0;
    for &e in edges {
        let be = mesh.boundary[e];
        let nodes: Vec<usize> = [be.v[0], be.v[1]].into_iter().chain(be.mid).collect();
        for &(xi, w) in &interval(5) {
            let m = edge_map(mesh, e, xi, disp)?;
            let (n, _, _) = p2_edge(xi);
            let mut v = [0.0; 2];
            for (a, &i) in nodes.iter().enumerate() {
                let d = field.space.dof(i).expect("node on the curve");
                v[0] += n[a] * field.values[d][0];
                v[1] += n[a] * field.values[d][1];
            }
            let ex = exact(m.x);
            e2 += w * m.js * ((v[0] - ex[0]).powi(2) + (v[1] - ex[1]).powi(2));
        }
    }
    Ok(e2.sqrt())
}

/// `int_V grad phi - oint n phi` over the whole mesh boundary.
pub fn check_stokes_volume(mesh: &Mesh2D, phi: &dyn Fn(Vec2) -> (f64, Vec2), disp: Option<&[Vec2]>) -> Vec2 {
    check_reciprocal_volume(mesh, &|_| (1.0, [0.0, 0.0]), phi, disp)
}

/// `int_V (psi grad phi + phi grad psi) - oint n psi phi`.
pub fn check_reciprocal_volume(
    mesh: &Mesh2D,
    psi: &dyn Fn(Vec2) -> (f64, Vec2),
    phi: &dyn Fn(Vec2) -> (f64, Vec2),
    disp: Option<&[Vec2]>,
) -> Vec2 {
    let tab = TriTable::new(5);
    let mut r = [0.0; 2];
    for c in 0..mesh.cells.len() {
        let x = mesh.cell_coords(c, disp);
        for q in 0..tab.len() {
            let map = TriMap::new(&x, &tab.d2[q]);
            let p = [0, 1].map(|k| (0..6).map(|a| x[a][k] * tab.n2[q][a]).sum::<f64>());
            let (a, ga) = psi(p);
            let (b, gb) = phi(p);
            let w = tab.w[q] * map.det;
            for k in 0..2 {
                r[k] += w * (a * gb[k] + b * ga[k]);
            }
        }
    }
    for e in &mesh.boundary {
        let x = mesh.edge_coords(e, disp);
        for &(xi, w) in &interval(5) {
            let m = EdgeMap::new(&x, xi);
            let f = psi(m.x).0 * phi(m.x).0;
            for k in 0..2 {
                r[k] -= w * m.js * m.n[k] * f;
            }
        }
    }
    r
}

/// `oint D_S phi` on a closed curve, with `D_S phi = grad_S phi - n (div_S n) phi`
/// evaluated edge by edge on the isoparametric geometry.
pub fn check_stokes_boundary(mesh: &Mesh2D, edges: &[usize], phi: Field, disp: Option<&[Vec2]>) -> Result<Vec2> {
    let one = |_: Vec2| (1.0, [0.0, 0.0]);
    check_reciprocal_boundary(mesh, edges, Field::Domain(&one), phi, disp)
}

/// `oint [psi D_S phi + (grad_S psi) phi]` on a closed curve.
pub fn check_reciprocal_boundary(
    mesh: &Mesh2D,
    edges: &[usize],
    psi: Field,
    phi: Field,
    disp: Option<&[Vec2]>,
) -> Result<Vec2> {
    if !is_closed(mesh, edges)? {
        return Err(Error::Topology("boundary Stokes check needs a closed curve".into()));
    }
    let mut r = [0.0; 2];
    for &e in edges {
        for &(xi, w) in &interval(5) {
            let m = edge_map(mesh, e, xi, disp)?;
            let (a, ga, _) = sample(psi, mesh, e, &m, xi)?;
            let (b, gb, _) = sample(phi, mesh, e, &m, xi)?;
            let k = m.div_n();
            for c in 0..2 {
                r[c] += w * m.js * (a * (gb[c] - m.n[c] * k * b) + ga[c] * b);
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, build_rectangle_mesh, Tag};

    fn norm(v: Vec2) -> f64 {
        v[0].hypot(v[1])
    }

    #[test]
    fn frames_are_orthonormal_and_outward() {
        let m = build_disk_mesh(1.0, 0.2, true).unwrap();
        for e in 0..m.boundary.len() {
            for xi in [0.0, 0.3, 1.0] {
                let f = frame_at(&m, e, xi, None).unwrap();
                assert!((norm(f.n) - 1.0).abs() < 1e-12 && (norm(f.t) - 1.0).abs() < 1e-12);
                assert!((f.n[0] * f.t[0] + f.n[1] * f.t[1]).abs() < 1e-12);
                // outward from the disk
                assert!(f.n[0] * f.point[0] + f.n[1] * f.point[1] > 0.0);
                let isn = [0, 1].map(|i| f.i_s[i][0] * f.n[0] + f.i_s[i][1] * f.n[1]);
                assert!(norm(isn) < 1e-12);
                if let Some(ns) = f.n_s {
                    assert!((ns[0] * f.n[0] + ns[1] * f.n[1]).abs() < 1e-12);
                }
            }
        }
        let sq = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 2, 2).unwrap();
        let top = sq.boundary.iter().position(|e| e.tag == Tag::Wall && sq.vertices[e.v[0]][1] == 1.0).unwrap();
        let f = frame_at(&sq, top, 0.5, None).unwrap();
        assert_eq!(f.n, [0.0, 1.0]);
    }

    #[test]
    fn surface_gradient_of_x_projects_out_the_normal() {
        let m = build_disk_mesh(1.0, 0.1, true).unwrap();
        let fx = |p: Vec2| (p[0], [1.0, 0.0]);
        let nodal: Vec<f64> = m.vertices.iter().map(|p| p[0]).collect();
        for e in 0..m.boundary.len() {
            let f = frame_at(&m, e, 0.4, None).unwrap();
            let expect = [1.0 - f.n[0] * f.n[0], -f.n[0] * f.n[1]];
            let g = surface_gradient(Field::Domain(&fx), &m, e, 0.4, None).unwrap();
            assert!(norm([g[0] - expect[0], g[1] - expect[1]]) < 1e-12);
            // the trace of x is quadratic on each edge, so the nodal route agrees
            let g = surface_gradient(Field::Nodal(&nodal), &m, e, 0.4, None).unwrap();
            assert!(norm([g[0] - expect[0], g[1] - expect[1]]) < 1e-12);
        }
        assert!(matches!(volume_gradient(Field::Nodal(&nodal), &m, 0, 0.5, None), Err(Error::Usage(_))));
    }

    #[test]
    fn weak_dsone_on_closed_curve_sums_to_zero() {
        let m = build_disk_mesh(0.7, 0.1, true).unwrap();
        let edges: Vec<usize> = (0..m.boundary.len()).collect();
        let one = |_: Vec2| (1.0, [0.0, 0.0]);
        let load = weak_exterior_differential(&m, &edges, Field::Domain(&one), false, None).unwrap();
        assert!(norm(load.total()) < 1e-13);
    }

    #[test]
    fn weak_form_on_open_flat_segment_matches_direct_evaluation() {
        let m = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 4, 4).unwrap();
        let bottom: Vec<usize> = m.edges_with(Tag::Wall).into_iter().filter(|&e| m.vertices[m.boundary[e].v[0]][1] == 0.0).collect();
        let phi = |p: Vec2| (1.0 + 2.0 * p[0], [2.0, 0.0]);
        assert!(matches!(weak_exterior_differential(&m, &bottom, Field::Domain(&phi), false, None), Err(Error::Usage(_))));
        let weak = weak_exterior_differential(&m, &bottom, Field::Domain(&phi), true, None).unwrap();
        // on a flat segment D_S phi reduces to grad_S phi
        let (direct, _) = weak_gradient_and_curvature(&m, &bottom, Field::Domain(&phi), None).unwrap();
        for (a, b) in weak.values.iter().zip(&direct.values) {
            assert!(norm([a[0] - b[0], a[1] - b[1]]) < 1e-12);
        }
    }

    #[test]
    fn volume_stokes_and_reciprocal_are_exact_for_polynomials() {
        let m = build_rectangle_mesh([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap();
        let x = |p: Vec2| (p[0], [1.0, 0.0]);
        assert!(norm(check_stokes_volume(&m, &x, None)) < 1e-13);
        let xy = |p: Vec2| (p[0] * p[1], [p[1], p[0]]);
        let q = |p: Vec2| (p[0] * p[0] - p[1], [2.0 * p[0], -1.0]);
        assert!(norm(check_reciprocal_volume(&m, &q, &xy, None)) < 1e-13);
    }
}

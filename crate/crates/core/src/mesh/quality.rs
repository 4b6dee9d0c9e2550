use super::{Mesh2D, Tag};
use crate::fem::basis::{p2_tri, EdgeMap, TriMap};
use crate::fem::quadrature::interval;

#[derive(Clone, Debug, PartialEq)]
pub struct MeshQualityReport {
    /// smallest interior angle in degrees
    pub min_angle: f64,
    /// largest equiangle skew, 0 for equilateral, 1 for degenerate
    pub max_skew: f64,
    /// coefficient of variation of bubble edge arclengths
    pub boundary_spacing_cv: f64,
    /// cells with a nonpositive Jacobian somewhere
    pub inverted: Vec<usize>,
}

/// Quality metrics of the configuration `X + displacement`.
pub fn quality(mesh: &Mesh2D, displacement: Option<&[[f64; 2]]>) -> MeshQualityReport {
    let mut min_angle = f64::INFINITY;
    let mut max_skew: f64 = 0.0;
    let mut inverted = Vec::new();
    let vertex_ref = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0 / 3.0, 1.0 / 3.0)];
    for c in 0..mesh.cells.len() {
        let p = mesh.cells[c].map(|i| mesh.position(i, displacement));
        let mut ang = [0.0f64; 3];
        for k in 0..3 {
            let (a, b, d) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [d[0] - a[0], d[1] - a[1]];
            let cross = u[0] * v[1] - u[1] * v[0];
            ang[k] = cross.abs().atan2(u[0] * v[0] + u[1] * v[1]).to_degrees();
        }
        let lo = ang.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ang.iter().copied().fold(0.0, f64::max);
        min_angle = min_angle.min(lo);
        max_skew = max_skew.max(((hi - 60.0) / 120.0).max((60.0 - lo) / 60.0));
        let mut bad = mesh.corner_area(c, displacement) <= 0.0;
        if mesh.is_quadratic() && !bad {
            let x = mesh.cell_coords(c, displacement);
            bad = vertex_ref.iter().any(|&(r, s)| TriMap::new(&x, &p2_tri(r, s).1).det <= 0.0);
        }
        if bad {
            inverted.push(c);
        }
    }
    if mesh.cells.is_empty() {
        min_angle = 0.0;
    }
    let rule = interval(5);
    let lengths: Vec<f64> = mesh
        .boundary
        .iter()
        .filter(|e| e.tag == Tag::Bubble)
        .map(|e| {
            let x = mesh.edge_coords(e, displacement);
            rule.iter().map(|&(xi, w)| w * EdgeMap::new(&x, xi).js).sum()
        })
        .collect();
    MeshQualityReport { min_angle, max_skew, boundary_spacing_cv: coefficient_of_variation(&lengths), inverted }
}

pub(crate) fn coefficient_of_variation(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

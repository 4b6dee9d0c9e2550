use super::{Mesh2D, Tag};
use crate::error::{Error, Result};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Channel geometry in solver coordinates: walls at `y = -1/2` and `y = 1/2`,
/// inlet at `x = 0`, outlet at `x = L`, hole centred at `(L/2, center_y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelGeometry {
    pub length: f64,
    pub radius: f64,
    pub center_y: f64,
    pub h: f64,
}

impl ChannelGeometry {
    pub fn center(&self) -> [f64; 2] {
        [0.5 * self.length, self.center_y]
    }

    pub fn bubble_nodes(&self) -> usize {
        let n = ((2.0 * PI * self.radius / self.h).ceil() as usize).max(8);
        n + n % 2
    }

    fn validate(&self) -> Result<()> {
        let ChannelGeometry { length, radius, center_y, h } = *self;
        if !(radius > 0.0 && radius < 0.5) {
            return Err(Error::Config(format!("bubble radius {radius} must lie in (0, 0.5)")));
        }
        if center_y.abs() + radius >= 0.5 {
            return Err(Error::Config(format!(
                "bubble of radius {radius} at offset {center_y} intersects the wall"
            )));
        }
        if length <= 2.0 * radius {
            return Err(Error::Config(format!("period {length} shorter than bubble diameter")));
        }
        if !(h > 0.0 && h <= radius) {
            return Err(Error::Config(format!("mesh size {h} must lie in (0, radius]")));
        }
        Ok(())
    }
}

/// Point cloud plus tagged constraint segments handed to the triangulator.
struct Pslg {
    points: Vec<[f64; 2]>,
    segments: Vec<(usize, usize, Option<Tag>)>,
    h: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl Pslg {
    fn new(h: f64) -> Self {
        Pslg { points: Vec::new(), segments: Vec::new(), h, grid: HashMap::new() }
    }

    fn cell(&self, p: [f64; 2]) -> (i64, i64) {
        ((p[0] / self.h).floor() as i64, (p[1] / self.h).floor() as i64)
    }

    fn push(&mut self, p: [f64; 2]) -> usize {
        let k = self.cell(p);
        self.points.push(p);
        let i = self.points.len() - 1;
        self.grid.entry(k).or_default().push(i);
        i
    }

    /// Adds `p` only if it keeps at least `dmin` from every point already present.
    fn offer(&mut self, p: [f64; 2], dmin: f64) {
        let (cx, cy) = self.cell(p);
        let reach = (dmin / self.h).ceil() as i64;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if let Some(list) = self.grid.get(&(cx + dx, cy + dy)) {
                    for &j in list {
                        let q = self.points[j];
                        if (p[0] - q[0]).hypot(p[1] - q[1]) < dmin {
                            return;
                        }
                    }
                }
            }
        }
        self.push(p);
    }

    /// Polyline through `pts`; consecutive points become constraint segments.
    fn polyline(&mut self, pts: &[[f64; 2]], tag: Option<Tag>, closed: bool) -> Vec<usize> {
        let ids: Vec<usize> = pts.iter().map(|&p| self.push(p)).collect();
        for w in ids.windows(2) {
            self.segments.push((w[0], w[1], tag));
        }
        if closed {
            self.segments.push((ids[ids.len() - 1], ids[0], tag));
        }
        ids
    }

    /// Fills the region accepted by `inside` with a hexagonal lattice.
    fn fill(&mut self, lo: [f64; 2], hi: [f64; 2], inside: impl Fn([f64; 2]) -> bool) {
        let h = self.h;
        let dy = h * 3f64.sqrt() / 2.0;
        let rows = ((hi[1] - lo[1]) / dy).ceil() as i64;
        let cols = ((hi[0] - lo[0]) / h).ceil() as i64 + 1;
        for j in 0..=rows {
            let y = lo[1] + j as f64 * dy;
            let shift = if j % 2 == 0 { 0.0 } else { 0.5 * h };
            for i in 0..=cols {
                let p = [lo[0] + shift + i as f64 * h, y];
                if inside(p) {
                    self.offer(p, 0.7 * h);
                }
            }
        }
    }

    /// Rings of points around a circle, graded from the boundary spacing to `h`.
    fn rings(&mut self, c: [f64; 2], r: f64, nb: usize, inside: impl Fn([f64; 2]) -> bool) {
        let s0 = 2.0 * PI * r / nb as f64;
        let mut rad = r;
        for k in 1.. {
            let s = 2.0 * PI * rad / nb as f64;
            rad += s * 3f64.sqrt() / 2.0;
            if 2.0 * PI * rad / nb as f64 > 1.3 * self.h || k > 64 {
                break;
            }
            let off = if k % 2 == 1 { PI / nb as f64 } else { 0.0 };
            for i in 0..nb {
                let t = 2.0 * PI * i as f64 / nb as f64 + off;
                let p = [c[0] + rad * t.cos(), c[1] + rad * t.sin()];
                if inside(p) {
                    self.offer(p, 0.7 * s0.min(self.h));
                }
            }
        }
    }

    /// Constrained Delaunay triangulation; triangles whose centroid fails
    /// `keep` are discarded. Returns CCW triangles over `self.points`.
    fn triangulate(&self, keep: impl Fn([f64; 2]) -> bool) -> Result<Vec<[usize; 3]>> {
        let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
        let mut handle = Vec::with_capacity(self.points.len());
        for p in &self.points {
            let h = cdt
                .insert(Point2::new(p[0], p[1]))
                .map_err(|e| Error::Mesh(format!("cannot insert point {p:?}: {e:?}")))?;
            handle.push(h);
        }
        if cdt.num_vertices() != self.points.len() {
            return Err(Error::Mesh("duplicate points in the point set".into()));
        }
        for &(a, b, _) in &self.segments {
            if !cdt.can_add_constraint(handle[a], handle[b]) {
                return Err(Error::Mesh(format!("boundary segment {a}-{b} crosses another segment")));
            }
            cdt.add_constraint(handle[a], handle[b]);
        }
        let mut back = vec![usize::MAX; self.points.len()];
        for (i, h) in handle.iter().enumerate() {
            back[h.index()] = i;
        }
        let mut tris = Vec::new();
        for f in cdt.inner_faces() {
            let t = f.vertices().map(|v| back[v.fix().index()]);
            let p = t.map(|i| self.points[i]);
            let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            if !keep(c) {
                continue;
            }
            let area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
            if area.abs() < 1e-14 * self.h * self.h {
                return Err(Error::Mesh(format!("degenerate triangle {t:?}")));
            }
            tris.push(if area > 0.0 { t } else { [t[0], t[2], t[1]] });
        }
        Ok(tris)
    }

    fn tagged(&self) -> Vec<(usize, usize, Tag)> {
        self.segments.iter().filter_map(|&(a, b, t)| t.map(|t| (a, b, t))).collect()
    }
}

fn linspace(a: [f64; 2], b: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
        })
        .collect()
}

fn arc_point(c: [f64; 2], r: f64, nb: usize, k: usize) -> [f64; 2] {
    let t = 2.0 * PI * k as f64 / nb as f64;
    [c[0] + r * t.cos(), c[1] + r * t.sin()]
}

/// Projects the straight midpoint of a chord onto the circle.
fn arc_mid(c: [f64; 2], r: f64, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let m = [0.5 * (a[0] + b[0]) - c[0], 0.5 * (a[1] + b[1]) - c[1]];
    let s = r / m[0].hypot(m[1]);
    [c[0] + s * m[0], c[1] + s * m[1]]
}

/// Periodic channel with a circular hole, quadratic geometry, bubble nodes
/// equally spaced in arclength. A centred hole yields a mirror-symmetric mesh.
pub fn build_channel_mesh(geo: ChannelGeometry) -> Result<Mesh2D> {
    geo.validate()?;
    let ChannelGeometry { length, radius, center_y, h } = geo;
    let c = geo.center();
    let nb = geo.bubble_nodes();
    let nx = (length / h).ceil() as usize;
    let ny = {
        let n = (1.0 / h).ceil() as usize;
        n + n % 2
    };
    let linear = if center_y == 0.0 {
        half_channel(geo, nb, nx, ny)?
    } else {
        let mut g = Pslg::new(h);
        g.polyline(&linspace([0.0, -0.5], [length, -0.5], nx), Some(Tag::Wall), false);
        g.polyline(&linspace([length, 0.5], [0.0, 0.5], nx), Some(Tag::Wall), false);
        let inl: Vec<_> = (0..=ny).rev().map(|j| [0.0, -0.5 + j as f64 / ny as f64]).collect();
        let out: Vec<_> = (0..=ny).map(|j| [length, -0.5 + j as f64 / ny as f64]).collect();
        // corner points are shared with the walls: reuse them
        let corners = [[0.0, -0.5], [length, -0.5], [length, 0.5], [0.0, 0.5]];
        let id = |g: &Pslg, p: [f64; 2]| g.points.iter().position(|&q| q == p).unwrap();
        let chain = |g: &mut Pslg, pts: &[[f64; 2]], tag| {
            let mut prev = id(g, pts[0]);
            for &p in &pts[1..] {
                let next = if corners.contains(&p) { id(g, p) } else { g.push(p) };
                g.segments.push((prev, next, Some(tag)));
                prev = next;
            }
        };
        chain(&mut g, &inl, Tag::Inlet);
        chain(&mut g, &out, Tag::Outlet);
        // clockwise around the hole keeps the liquid on the left
        let circle: Vec<_> = (0..nb).rev().map(|k| arc_point(c, radius, nb, k)).collect();
        g.polyline(&circle, Some(Tag::Bubble), true);
        let inside = |p: [f64; 2]| {
            p[0] > 0.5 * h && p[0] < length - 0.5 * h && p[1].abs() < 0.5 - 0.5 * h
                && (p[0] - c[0]).hypot(p[1] - c[1]) > radius + 0.5 * h
        };
        g.rings(c, radius, nb, inside);
        g.fill([0.0, -0.5], [length, 0.5], inside);
        let tris = g.triangulate(|p| (p[0] - c[0]).hypot(p[1] - c[1]) > radius)?;
        Mesh2D::from_parts(g.points.clone(), tris, Vec::new(), &g.tagged(), Vec::new())?
    };
    let mesh = linear.upgrade(
        |a, b| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
        |e, [a, b]| (e.tag == Tag::Bubble).then(|| arc_mid(c, radius, a, b)),
        Some(length),
    );
    Ok(mesh)
}

/// Upper half of a centred channel triangulated once and mirrored across y = 0.
fn half_channel(geo: ChannelGeometry, nb: usize, nx: usize, ny: usize) -> Result<Mesh2D> {
    let ChannelGeometry { length, radius, h, .. } = geo;
    let c = geo.center();
    let left = c[0] - radius;
    let right = c[0] + radius;
    let ncl = ((left / h).ceil() as usize).max(1);
    let nyh = ny / 2;
    // counter-clockwise boundary of the upper half; `tags[i]` labels the
    // segment leaving point i, `None` marks the axis (interior once mirrored)
    let mut ring: Vec<[f64; 2]> = Vec::new();
    let mut tags: Vec<Option<Tag>> = Vec::new();
    let mut add = |pts: Vec<[f64; 2]>, tag: Option<Tag>| {
        for p in pts {
            ring.push(p);
            tags.push(tag);
        }
    };
    add(linspace([0.0, 0.0], [left, 0.0], ncl)[..ncl].to_vec(), None);
    let arc: Vec<_> = (1..=nb / 2)
        .rev()
        .map(|k| if k == nb / 2 { [left, 0.0] } else { arc_point(c, radius, nb, k) })
        .collect();
    add(arc, Some(Tag::Bubble));
    add(linspace([right, 0.0], [length, 0.0], ncl)[..ncl].to_vec(), None);
    add(linspace([length, 0.0], [length, 0.5], nyh)[..nyh].to_vec(), Some(Tag::Outlet));
    add(linspace([length, 0.5], [0.0, 0.5], nx)[..nx].to_vec(), Some(Tag::Wall));
    add(linspace([0.0, 0.5], [0.0, 0.0], nyh)[..nyh].to_vec(), Some(Tag::Inlet));
    let mut g = Pslg::new(h);
    let ids: Vec<usize> = ring.iter().map(|&p| g.push(p)).collect();
    for i in 0..ids.len() {
        g.segments.push((ids[i], ids[(i + 1) % ids.len()], tags[i]));
    }
    let inside = |p: [f64; 2]| {
        p[0] > 0.5 * h
            && p[0] < length - 0.5 * h
            && p[1] > 0.5 * h
            && p[1] < 0.5 - 0.5 * h
            && (p[0] - c[0]).hypot(p[1] - c[1]) > radius + 0.5 * h
    };
    g.rings(c, radius, nb, inside);
    g.fill([0.0, 0.0], [length, 0.5], inside);
    let tris = g.triangulate(|p| (p[0] - c[0]).hypot(p[1] - c[1]) > radius)?;
    mirror(&g, &tris)
}

/// Reflects an upper-half triangulation across y = 0, merging axis points.
fn mirror(g: &Pslg, tris: &[[usize; 3]]) -> Result<Mesh2D> {
    let n = g.points.len();
    let mut points = g.points.clone();
    let mut image = vec![0usize; n];
    for i in 0..n {
        let p = g.points[i];
        image[i] = if p[1] == 0.0 {
            i
        } else {
            points.push([p[0], -p[1]]);
            points.len() - 1
        };
    }
    let mut cells = tris.to_vec();
    cells.extend(tris.iter().map(|t| [image[t[0]], image[t[2]], image[t[1]]]));
    let mut bnd = g.tagged();
    bnd.extend(g.tagged().into_iter().map(|(a, b, t)| (image[b], image[a], t)));
    Mesh2D::from_parts(points, cells, Vec::new(), &bnd, Vec::new())
}

/// Disk of the given radius centred at the origin, boundary tagged `Wall`.
/// With `curved`, boundary mid nodes lie on the circle; otherwise the
/// boundary is the inscribed polygon.
pub fn build_disk_mesh(radius: f64, h: f64, curved: bool) -> Result<Mesh2D> {
    if !(radius > 0.0 && h > 0.0 && h <= radius) {
        return Err(Error::Config(format!("invalid disk radius {radius} or mesh size {h}")));
    }
    let c = [0.0, 0.0];
    let nb = {
        let n = ((2.0 * PI * radius / h).ceil() as usize).max(8);
        n + n % 2
    };
    let mut g = Pslg::new(h);
    let circle: Vec<_> = (0..nb).map(|k| arc_point(c, radius, nb, k)).collect();
    g.polyline(&circle, Some(Tag::Wall), true);
    let inside = |p: [f64; 2]| p[0].hypot(p[1]) < radius - 0.5 * h;
    // rings grading inward from the boundary
    let mut rad = radius;
    for k in 1.. {
        rad -= (2.0 * PI * rad / nb as f64) * 3f64.sqrt() / 2.0;
        if rad < 0.5 * radius || k > 64 {
            break;
        }
        let off = if k % 2 == 1 { PI / nb as f64 } else { 0.0 };
        for i in 0..nb {
            let t = 2.0 * PI * i as f64 / nb as f64 + off;
            let p = [rad * t.cos(), rad * t.sin()];
            if inside(p) {
                g.offer(p, 0.7 * h);
            }
        }
    }
    g.fill([-radius, -radius], [radius, radius], inside);
    let tris = g.triangulate(|_| true)?;
    let linear = Mesh2D::from_parts(g.points.clone(), tris, Vec::new(), &g.tagged(), Vec::new())?;
    Ok(linear.upgrade(
        |a, b| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
        |_, [a, b]| curved.then(|| arc_mid(c, radius, a, b)),
        None,
    ))
}

/// Structured quadratic mesh of `[x0, x1] x [y0, y1]` with `nx * ny` squares
/// split along alternating diagonals. Bottom and top are `Wall`, left is
/// `Inlet`, right is `Outlet`; inlet and outlet are periodically paired.
pub fn build_rectangle_mesh(lo: [f64; 2], hi: [f64; 2], nx: usize, ny: usize) -> Result<Mesh2D> {
    if nx == 0 || ny == 0 || hi[0] <= lo[0] || hi[1] <= lo[1] {
        return Err(Error::Config("invalid rectangle".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { hi[0] } else { lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64 };
            let y = if j == ny { hi[1] } else { lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64 };
            pts.push([x, y]);
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            } else {
                cells.push([a, b, d]);
                cells.push([b, c, d]);
            }
        }
    }
    let mut bnd = Vec::new();
    for i in 0..nx {
        bnd.push((id(i, 0), id(i + 1, 0), Tag::Wall));
        bnd.push((id(i + 1, ny), id(i, ny), Tag::Wall));
    }
    for j in 0..ny {
        bnd.push((id(0, j + 1), id(0, j), Tag::Inlet));
        bnd.push((id(nx, j), id(nx, j + 1), Tag::Outlet));
    }
    let linear = Mesh2D::from_parts(pts, cells, Vec::new(), &bnd, Vec::new())?;
    Ok(linear.upgrade(
        |a, b| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
        |_, _| None,
        Some(hi[0] - lo[0]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::quality;

    fn total_area(m: &Mesh2D) -> f64 {
        use crate::fem::basis::{TriMap, TriTable};
        let tab = TriTable::new(4);
        (0..m.cells.len())
            .map(|c| {
                let x = m.cell_coords(c, None);
                (0..tab.len()).map(|q| tab.w[q] * TriMap::new(&x, &tab.d2[q]).det).sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn channel_mesh_has_the_requested_hole() {
        for (r, eps) in [(0.2, 0.0), (0.4, 0.0), (0.2, 0.15)] {
            let g = ChannelGeometry { length: 3.0, radius: r, center_y: eps, h: 0.05 };
            let m = build_channel_mesh(g).unwrap();
            let hole = PI * r * r;
            assert!((m.bubble_area(None) - hole).abs() < 0.01 * hole);
            // cells tile the channel minus the quadratic hole
            assert!((total_area(&m) - (3.0 - m.bubble_area(None))).abs() < 1e-10);
            for &(a, b) in &m.periodic {
                assert_eq!(m.vertices[b][0] - m.vertices[a][0], 3.0);
                assert!((m.vertices[a][1] - m.vertices[b][1]).abs() < 1e-12);
            }
            let q = quality(&m, None);
            assert!(q.min_angle > 15.0, "min angle {}", q.min_angle);
            assert!(q.boundary_spacing_cv < 1e-12);
            assert!(q.inverted.is_empty());
        }
    }

    #[test]
    fn centred_channel_is_mirror_symmetric() {
        let g = ChannelGeometry { length: 3.0, radius: 0.2, center_y: 0.0, h: 0.05 };
        let m = build_channel_mesh(g).unwrap();
        let set: std::collections::HashSet<(u64, u64)> =
            m.vertices.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
        for p in &m.vertices {
            let y = if p[1] == 0.0 { 0.0 } else { -p[1] };
            assert!(set.contains(&(p[0].to_bits(), y.to_bits())), "no mirror image of {p:?}");
        }
    }

    #[test]
    fn infeasible_geometry_is_rejected() {
        let g = ChannelGeometry { length: 3.0, radius: 0.2, center_y: 0.4, h: 0.05 };
        assert!(matches!(build_channel_mesh(g), Err(Error::Config(_))));
    }

    #[test]
    fn disk_and_rectangle_meshes_are_valid() {
        let d = build_disk_mesh(1.0, 0.1, true).unwrap();
        assert!((total_area(&d) - PI).abs() < 1e-4);
        assert!(quality(&d, None).min_angle > 15.0);
        let r = build_rectangle_mesh([0.0, 0.0], [2.0, 1.0], 4, 2).unwrap();
        assert!((total_area(&r) - 2.0).abs() < 1e-13);
        assert_eq!(r.periodic.len(), 2 * 2 + 1);
    }
}

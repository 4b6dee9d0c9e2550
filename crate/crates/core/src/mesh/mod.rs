//! Triangulations of the reference domain with tagged, oriented boundary
//! edges, optional quadratic (curved) geometry and periodic node pairing.

mod build;
mod io;
mod quality;

pub use build::{build_channel_mesh, build_disk_mesh, build_rectangle_mesh, ChannelGeometry};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use quality::{quality, MeshQualityReport};

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Wall,
    Inlet,
    Outlet,
    Bubble,
}

impl Tag {
    pub const ALL: [Tag; 4] = [Tag::Wall, Tag::Inlet, Tag::Outlet, Tag::Bubble];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Wall => "wall",
            Tag::Inlet => "inlet",
            Tag::Outlet => "outlet",
            Tag::Bubble => "bubble",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Tag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown boundary tag `{s}`")))
    }
}

/// Boundary edge oriented with the domain on its left, so that
/// `n = (t_y, -t_x)` is the outward normal of the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub mid: Option<usize>,
    pub tag: Tag,
    /// owning cell and the local edge index within it
    pub cell: usize,
    pub local: usize,
}

impl BoundaryEdge {
    /// Node indices in edge-local order: start, end, mid.
    pub fn nodes(&self) -> [usize; 3] {
        [self.v[0], self.v[1], self.mid.unwrap_or(usize::MAX)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    /// Reference positions. Corner vertices come first, mid-edge nodes after.
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise corner triples.
    pub cells: Vec<[usize; 3]>,
    /// Mid-edge nodes per cell for edges (0,1), (1,2), (2,0); empty for linear meshes.
    pub mids: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// Inlet node paired with its outlet image (corners and mid nodes).
    pub periodic: Vec<(usize, usize)>,
    n_corners: usize,
}

impl Mesh2D {
    /// Assembles and validates a mesh. Boundary edges are re-oriented to
    /// follow their owning cell; every edge of the cell complex used by
    /// only one cell must be tagged.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        mids: Vec<[usize; 3]>,
        boundary: &[(usize, usize, Tag)],
        periodic: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if !mids.is_empty() && mids.len() != cells.len() {
            return Err(Error::Validation("mid-node table does not match cell count".into()));
        }
        let n_corners = cells.iter().flatten().map(|&i| i + 1).max().unwrap_or(0);
        for (c, tri) in cells.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Validation(format!("cell {c} references a missing vertex")));
            }
        }
        for (c, m) in mids.iter().enumerate() {
            if m.iter().any(|&i| i >= vertices.len() || i < n_corners) {
                return Err(Error::Validation(format!(
                    "cell {c}: mid-edge nodes must follow all corner vertices"
                )));
            }
        }
        let mut owner: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (c, tri) in cells.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                owner.entry((a.min(b), a.max(b))).or_default().push((c, k));
            }
        }
        let mut edges = Vec::with_capacity(boundary.len());
        let mut tagged = HashMap::new();
        for (i, &(a, b, tag)) in boundary.iter().enumerate() {
            let key = (a.min(b), a.max(b));
            let own = owner.get(&key).map(|v| v.as_slice()).unwrap_or(&[]);
            if own.len() != 1 {
                return Err(Error::Validation(format!(
                    "boundary edge {i} ({a},{b}) belongs to {} cells",
                    own.len()
                )));
            }
            if tagged.insert(key, i).is_some() {
                return Err(Error::Validation(format!("boundary edge ({a},{b}) listed twice")));
            }
            let (c, k) = own[0];
            let v = [cells[c][k], cells[c][(k + 1) % 3]];
            let mid = mids.get(c).map(|m| m[k]);
            edges.push(BoundaryEdge { v, mid, tag, cell: c, local: k });
        }
        if let Some((key, _)) = owner.iter().find(|(k, o)| o.len() == 1 && !tagged.contains_key(*k)) {
            return Err(Error::Validation(format!("untagged boundary edge {key:?}")));
        }
        if let Some((key, o)) = owner.iter().find(|(_, o)| o.len() > 2) {
            return Err(Error::Validation(format!("edge {key:?} shared by {} cells", o.len())));
        }
        let mesh = Mesh2D { vertices, cells, mids, boundary: edges, periodic, n_corners };
        for c in 0..mesh.cells.len() {
            let area = mesh.corner_area(c, None);
            if area <= 0.0 {
                return Err(Error::Validation(format!("cell {c} has nonpositive area {area:e}")));
            }
        }
        Ok(mesh)
    }

    pub fn n_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_corners(&self) -> usize {
        self.n_corners
    }

    pub fn is_quadratic(&self) -> bool {
        !self.mids.is_empty()
    }

    /// All six nodes of a quadratic cell in local P2 order.
    pub fn cell_nodes(&self, c: usize) -> [usize; 6] {
        let t = self.cells[c];
        let m = self.mids[c];
        [t[0], t[1], t[2], m[0], m[1], m[2]]
    }

    pub fn edges_with(&self, tag: Tag) -> Vec<usize> {
        (0..self.boundary.len()).filter(|&e| self.boundary[e].tag == tag).collect()
    }

    /// Position of node `i` in the configuration `X + d`.
    #[inline]
    pub fn position(&self, i: usize, disp: Option<&[[f64; 2]]>) -> [f64; 2] {
        let x = self.vertices[i];
        match disp {
            Some(d) => [x[0] + d[i][0], x[1] + d[i][1]],
            None => x,
        }
    }

    /// Signed area of the straight triangle spanned by the corners.
    pub fn corner_area(&self, c: usize, disp: Option<&[[f64; 2]]>) -> f64 {
        let [a, b, d] = self.cells[c].map(|i| self.position(i, disp));
        0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]))
    }

    /// Adds straight mid-edge nodes to a linear mesh (no-op if already quadratic).
    pub fn with_midpoints(&self) -> Mesh2D {
        if self.is_quadratic() {
            return self.clone();
        }
        self.upgrade(|a, b| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])], |_, _| None, None)
    }

    /// Builds the quadratic mesh. `curved` may override the mid position of a
    /// boundary edge; `period` re-pairs inlet/outlet nodes including mids.
    pub(crate) fn upgrade(
        &self,
        straight: impl Fn([f64; 2], [f64; 2]) -> [f64; 2],
        curved: impl Fn(&BoundaryEdge, [[f64; 2]; 2]) -> Option<[f64; 2]>,
        period: Option<f64>,
    ) -> Mesh2D {
        let mut vertices = self.vertices[..self.n_corners].to_vec();
        let mut special: HashMap<(usize, usize), [f64; 2]> = HashMap::new();
        for e in &self.boundary {
            let ends = [self.vertices[e.v[0]], self.vertices[e.v[1]]];
            if let Some(p) = curved(e, ends) {
                special.insert((e.v[0].min(e.v[1]), e.v[0].max(e.v[1])), p);
            }
        }
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mids = Vec::with_capacity(self.cells.len());
        for tri in &self.cells {
            let mut m = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[k] = *index.entry(key).or_insert_with(|| {
                    let p = special
                        .get(&key)
                        .copied()
                        .unwrap_or_else(|| straight(self.vertices[key.0], self.vertices[key.1]));
                    vertices.push(p);
                    vertices.len() - 1
                });
            }
            mids.push(m);
        }
        let bnd: Vec<_> = self.boundary.iter().map(|e| (e.v[0], e.v[1], e.tag)).collect();
        let mut mesh = Mesh2D::from_parts(vertices, self.cells.clone(), mids, &bnd, Vec::new())
            .expect("upgrading a valid mesh keeps it valid");
        mesh.periodic = match period {
            Some(l) => mesh.pair_periodic(l).expect("periodic pairing of a valid channel mesh"),
            None => self.periodic.clone(),
        };
        mesh
    }

    /// Pairs inlet and outlet nodes by sorted y-coordinate.
    pub(crate) fn pair_periodic(&self, length: f64) -> Result<Vec<(usize, usize)>> {
        let collect = |tag| {
            let mut v: Vec<usize> = self
                .boundary
                .iter()
                .filter(|e| e.tag == tag)
                .flat_map(|e| e.v.into_iter().chain(e.mid))
                .collect();
            v.sort_by(|&a, &b| self.vertices[a][1].total_cmp(&self.vertices[b][1]));
            v.dedup();
            v
        };
        let (inl, out) = (collect(Tag::Inlet), collect(Tag::Outlet));
        if inl.len() != out.len() {
            return Err(Error::Mesh(format!(
                "inlet has {} nodes but outlet has {}",
                inl.len(),
                out.len()
            )));
        }
        let mut pairs = Vec::with_capacity(inl.len());
        for (&i, &o) in inl.iter().zip(&out) {
            let (a, b) = (self.vertices[i], self.vertices[o]);
            if (a[1] - b[1]).abs() > 1e-12 || b[0] - a[0] != length {
                return Err(Error::Mesh(format!("inlet node {i} has no periodic image (found {o})")));
            }
            pairs.push((i, o));
        }
        Ok(pairs)
    }

    /// Hole area enclosed by the bubble edges, exact for the quadratic geometry.
    pub fn bubble_area(&self, disp: Option<&[[f64; 2]]>) -> f64 {
        use crate::fem::basis::EdgeMap;
        use crate::fem::quadrature::interval;
        let rule = interval(4);
        let mut area = 0.0;
        for e in self.boundary.iter().filter(|e| e.tag == Tag::Bubble) {
            let x = self.edge_coords(e, disp);
            for &(xi, w) in &rule {
                let m = EdgeMap::new(&x, xi);
                // n points into the hole, so the hole's own outward normal is -n
                area -= 0.5 * w * m.js * (m.x[0] * m.n[0] + m.x[1] * m.n[1]);
            }
        }
        area
    }

    /// Node coordinates of a boundary edge in edge-local order (start, end, mid).
    pub fn edge_coords(&self, e: &BoundaryEdge, disp: Option<&[[f64; 2]]>) -> [[f64; 2]; 3] {
        let a = self.position(e.v[0], disp);
        let b = self.position(e.v[1], disp);
        let m = match e.mid {
            Some(m) => self.position(m, disp),
            None => [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
        };
        [a, b, m]
    }

    /// Node coordinates of a quadratic cell in local P2 order.
    pub fn cell_coords(&self, c: usize, disp: Option<&[[f64; 2]]>) -> [[f64; 2]; 6] {
        self.cell_nodes(c).map(|i| self.position(i, disp))
    }
}

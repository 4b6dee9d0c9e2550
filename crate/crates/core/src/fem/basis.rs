//! Lagrange bases on the reference triangle and interval, and the
//! isoparametric maps built from them.
//!
//! Local P2 node order on a triangle: corners 0, 1, 2, then mid-edge nodes
//! 3 = (0,1), 4 = (1,2), 5 = (2,0). Local order on an edge: start, end, mid.

use crate::ad::Scalar;

pub type V2<S> = [S; 2];

pub fn p1_tri(r: f64, s: f64) -> ([f64; 3], [[f64; 2]; 3]) {
    ([1.0 - r - s, r, s], [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
}

pub fn p2_tri(r: f64, s: f64) -> ([f64; 6], [[f64; 2]; 6]) {
    let l = [1.0 - r - s, r, s];
    let g = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut n = [0.0; 6];
    let mut dn = [[0.0; 2]; 6];
    for i in 0..3 {
        n[i] = l[i] * (2.0 * l[i] - 1.0);
        for k in 0..2 {
            dn[i][k] = (4.0 * l[i] - 1.0) * g[i][k];
        }
    }
    for (m, (i, j)) in [(0usize, 1usize), (1, 2), (2, 0)].into_iter().enumerate() {
        n[3 + m] = 4.0 * l[i] * l[j];
        for k in 0..2 {
            dn[3 + m][k] = 4.0 * (l[j] * g[i][k] + l[i] * g[j][k]);
        }
    }
    (n, dn)
}

/// P2 edge basis: values, first and second derivatives in `xi`.
pub fn p2_edge(xi: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    (
        [(1.0 - xi) * (1.0 - 2.0 * xi), xi * (2.0 * xi - 1.0), 4.0 * xi * (1.0 - xi)],
        [4.0 * xi - 3.0, 4.0 * xi - 1.0, 4.0 - 8.0 * xi],
        [4.0, 4.0, -8.0],
    )
}

pub fn p1_edge(xi: f64) -> ([f64; 2], [f64; 2]) {
    ([1.0 - xi, xi], [-1.0, 1.0])
}

/// Reference coordinates on the triangle of a point on local edge `k`
/// (edges run 0->1, 1->2, 2->0).
pub fn edge_to_tri(k: usize, xi: f64) -> (f64, f64) {
    match k {
        0 => (xi, 0.0),
        1 => (1.0 - xi, xi),
        _ => (0.0, 1.0 - xi),
    }
}

/// Local triangle node indices (start, end, mid) of local edge `k`.
pub fn tri_edge_nodes(k: usize) -> [usize; 3] {
    match k {
        0 => [0, 1, 3],
        1 => [1, 2, 4],
        _ => [2, 0, 5],
    }
}

/// Isoparametric triangle map evaluated at one reference point.
#[derive(Clone, Copy, Debug)]
pub struct TriMap<S> {
    pub det: S,
    /// inverse of the Jacobian `dx/dxi`
    pub inv: [[S; 2]; 2],
}

impl<S: Scalar> TriMap<S> {
    pub fn new<const K: usize>(x: &[V2<S>; K], dn: &[[f64; 2]; K]) -> Self {
        let mut j = [[S::zero(); 2]; 2];
        for a in 0..K {
            for i in 0..2 {
                for k in 0..2 {
                    j[i][k] += x[a][i] * dn[a][k];
                }
            }
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        TriMap { det, inv }
    }

    /// Physical gradient of a basis function given its reference gradient.
    #[inline]
    pub fn grad(&self, g: &[f64; 2]) -> V2<S> {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

/// Geometry of a P2 boundary curve at one parameter value.
#[derive(Clone, Copy, Debug)]
pub struct EdgeMap<S> {
    pub x: V2<S>,
    /// arclength metric `|dx/dxi|`
    pub js: S,
    pub t: V2<S>,
    /// outward normal for an edge oriented with the domain on its left
    pub n: V2<S>,
    /// `dn/ds` along arclength
    pub dn_ds: V2<S>,
}

impl<S: Scalar> EdgeMap<S> {
    pub fn new(x: &[V2<S>; 3], xi: f64) -> Self {
        let (n, d1, d2) = p2_edge(xi);
        let mut p = [S::zero(); 2];
        let mut xp = [S::zero(); 2];
        let mut xpp = [S::zero(); 2];
        for a in 0..3 {
            for i in 0..2 {
                p[i] += x[a][i] * n[a];
                xp[i] += x[a][i] * d1[a];
                xpp[i] += x[a][i] * d2[a];
            }
        }
        let js = (xp[0] * xp[0] + xp[1] * xp[1]).sqrt();
        let t = [xp[0] / js, xp[1] / js];
        let nrm = [t[1], -t[0]];
        let tdot = t[0] * xpp[0] + t[1] * xpp[1];
        let j2 = js * js;
        let dt = [(xpp[0] - t[0] * tdot) / j2, (xpp[1] - t[1] * tdot) / j2];
        EdgeMap { x: p, js, t, n: nrm, dn_ds: [dt[1], -dt[0]] }
    }

    /// Divergence of the normal along the curve, `t . dn/ds`.
    pub fn div_n(&self) -> S {
        self.t[0] * self.dn_ds[0] + self.t[1] * self.dn_ds[1]
    }

    /// Surface gradient of a quantity whose `xi` derivative is `dxi`.
    pub fn sgrad(&self, dxi: S) -> V2<S> {
        let ds = dxi / self.js;
        [self.t[0] * ds, self.t[1] * ds]
    }
}


/// Basis values at the points of a triangle rule.
#[derive(Clone, Debug)]
pub struct TriTable {
    pub w: Vec<f64>,
    pub rs: Vec<(f64, f64)>,
    pub n2: Vec<[f64; 6]>,
    pub d2: Vec<[[f64; 2]; 6]>,
    pub n1: Vec<[f64; 3]>,
    pub d1: Vec<[[f64; 2]; 3]>,
}

impl TriTable {
    pub fn new(degree: usize) -> Self {
        let rule = super::quadrature::triangle(degree);
        let mut t = TriTable { w: vec![], rs: vec![], n2: vec![], d2: vec![], n1: vec![], d1: vec![] };
        for p in rule {
            let (n2, d2) = p2_tri(p.r, p.s);
            let (n1, d1) = p1_tri(p.r, p.s);
            t.w.push(p.w);
            t.rs.push((p.r, p.s));
            t.n2.push(n2);
            t.d2.push(d2);
            t.n1.push(n1);
            t.d1.push(d1);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Edge basis values at the points of a Gauss rule, plus the matching
/// parent-triangle basis for each local edge.
#[derive(Clone, Debug)]
pub struct EdgeTable {
    pub xi: Vec<f64>,
    pub w: Vec<f64>,
    pub n: Vec<[f64; 3]>,
    pub d: Vec<[f64; 3]>,
    pub n1: Vec<[f64; 2]>,
    /// `tri[k][q]`: P2 values and reference gradients of the parent cell at
    /// point `q` of local edge `k`
    pub tri: [Vec<([f64; 6], [[f64; 2]; 6])>; 3],
}

impl EdgeTable {
    pub fn new(npts: usize) -> Self {
        let rule = super::quadrature::interval(npts);
        let mut t = EdgeTable { xi: vec![], w: vec![], n: vec![], d: vec![], n1: vec![], tri: Default::default() };
        for &(xi, w) in &rule {
            let (n, d, _) = p2_edge(xi);
            t.xi.push(xi);
            t.w.push(w);
            t.n.push(n);
            t.d.push(d);
            t.n1.push(p1_edge(xi).0);
            for k in 0..3 {
                let (r, s) = edge_to_tri(k, xi);
                t.tri[k].push(p2_tri(r, s));
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// `sum_a v[a] * n[a]`
#[inline]
pub fn interp<S: Scalar, const K: usize>(v: &[S; K], n: &[f64; K]) -> S {
    let mut s = S::zero();
    for a in 0..K {
        s += v[a] * n[a];
    }
    s
}

/// Physical gradient of a nodal field through the map.
#[inline]
pub fn field_grad<S: Scalar, const K: usize>(map: &TriMap<S>, v: &[S; K], dn: &[[f64; 2]; K]) -> V2<S> {
    let mut g = [S::zero(); 2];
    for a in 0..K {
        let ga = map.grad(&dn[a]);
        g[0] += v[a] * ga[0];
        g[1] += v[a] * ga[1];
    }
    g
}

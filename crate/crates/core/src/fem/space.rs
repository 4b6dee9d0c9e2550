use crate::mesh::{Mesh2D, Tag};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    P1,
    P2,
}

/// Scalar Lagrange space as a map from mesh nodes to degrees of freedom.
/// Vector fields use one space per component.
#[derive(Clone, Debug)]
pub struct Space {
    pub degree: Degree,
    map: Vec<Option<usize>>,
    nodes: Vec<usize>,
}

impl Space {
    /// Nodes carrying a dof for the given degree: corners for P1, all for P2.
    fn carriers(mesh: &Mesh2D, degree: Degree) -> usize {
        match degree {
            Degree::P1 => mesh.n_corners(),
            Degree::P2 => {
                assert!(mesh.is_quadratic(), "P2 spaces need a quadratic mesh");
                mesh.n_nodes()
            }
        }
    }

    fn from_nodes(mesh: &Mesh2D, degree: Degree, selected: impl Iterator<Item = usize>, periodic: bool) -> Self {
        let mut map = vec![None; mesh.n_nodes()];
        let images: BTreeSet<usize> = if periodic { mesh.periodic.iter().map(|p| p.1).collect() } else { BTreeSet::new() };
        let mut nodes = Vec::new();
        let sel: BTreeSet<usize> = selected.collect();
        for &i in &sel {
            if !images.contains(&i) {
                map[i] = Some(nodes.len());
                nodes.push(i);
            }
        }
        if periodic {
            for &(a, b) in &mesh.periodic {
                if sel.contains(&b) {
                    map[b] = map[a];
                }
            }
        }
        Space { degree, map, nodes }
    }

    /// Whole-domain space, optionally identifying periodic images.
    pub fn domain(mesh: &Mesh2D, degree: Degree, periodic: bool) -> Self {
        let n = Self::carriers(mesh, degree);
        Self::from_nodes(mesh, degree, 0..n, periodic)
    }

    /// Space supported on the edges with the given tags.
    pub fn boundary(mesh: &Mesh2D, degree: Degree, tags: &[Tag], periodic: bool) -> Self {
        let n = Self::carriers(mesh, degree);
        let nodes = mesh
            .boundary
            .iter()
            .filter(|e| tags.contains(&e.tag))
            .flat_map(|e| e.v.into_iter().chain(e.mid))
            .filter(|&i| i < n);
        Self::from_nodes(mesh, degree, nodes, periodic)
    }

    /// Space supported on an explicit set of boundary edges.
    pub fn on_edges(mesh: &Mesh2D, degree: Degree, edges: &[usize]) -> Self {
        let n = Self::carriers(mesh, degree);
        let nodes = edges
            .iter()
            .flat_map(|&e| mesh.boundary[e].v.into_iter().chain(mesh.boundary[e].mid))
            .filter(|&i| i < n);
        Self::from_nodes(mesh, degree, nodes, false)
    }

    /// Domain space with the nodes of the given boundaries removed
    /// (homogeneous Dirichlet data by elimination).
    pub fn domain_without(mesh: &Mesh2D, degree: Degree, fixed: &[Tag]) -> Self {
        let n = Self::carriers(mesh, degree);
        let mut drop = vec![false; mesh.n_nodes()];
        for e in mesh.boundary.iter().filter(|e| fixed.contains(&e.tag)) {
            for i in e.v.into_iter().chain(e.mid) {
                drop[i] = true;
            }
        }
        Self::from_nodes(mesh, degree, (0..n).filter(|&i| !drop[i]), false)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn dof(&self, node: usize) -> Option<usize> {
        self.map.get(node).copied().flatten()
    }

    /// Representative mesh node of a dof.
    pub fn node(&self, dof: usize) -> usize {
        self.nodes[dof]
    }

    /// Expands dof values to a per-node array (zero where the space has no dof).
    pub fn to_nodes(&self, values: &[f64]) -> Vec<f64> {
        self.map.iter().map(|d| d.map_or(0.0, |k| values[k])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rectangle_mesh;

    #[test]
    fn periodic_identification_shares_dofs() {
        let m = build_rectangle_mesh([0.0, 0.0], [2.0, 1.0], 4, 3).unwrap();
        let s = Space::domain(&m, Degree::P2, true);
        let plain = Space::domain(&m, Degree::P2, false);
        assert_eq!(plain.len() - s.len(), m.periodic.len());
        for &(a, b) in &m.periodic {
            assert_eq!(s.dof(a), s.dof(b));
        }
        let p1 = Space::domain(&m, Degree::P1, false);
        assert_eq!(p1.len(), 5 * 4);
    }
}

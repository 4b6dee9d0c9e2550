use super::layout::{BlockLayout, BlockVector};
use super::space::Space;
use crate::error::{Error, Result};
use crate::mesh::Mesh2D;
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sparse square system over a block layout.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub layout: BlockLayout,
    /// `(row, col, value)` entries; duplicates are summed.
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    /// rows replaced by identity rows
    pub bc_mask: Vec<bool>,
    pinned: Vec<usize>,
}

impl BlockSystem {
    pub fn new(layout: BlockLayout, triplets: Vec<(usize, usize, f64)>, rhs: Vec<f64>) -> Self {
        let n = layout.len();
        assert_eq!(rhs.len(), n, "rhs length must match the layout");
        BlockSystem { layout, triplets, rhs, bc_mask: vec![false; n], pinned: Vec::new() }
    }

    /// Replaces the rows of `dofs` by identity rows with the given values.
    pub fn apply_dirichlet(&mut self, dofs: &[usize], values: &[f64]) {
        for (&i, &v) in dofs.iter().zip(values) {
            self.bc_mask[i] = true;
            self.rhs[i] = v;
        }
        let mask = &self.bc_mask;
        self.triplets.retain(|&(i, _, _)| !mask[i]);
        for &i in dofs {
            self.triplets.push((i, i, 1.0));
        }
    }

    pub fn solve(&self) -> Result<BlockVector> {
        let x = solve_sparse(self.layout.len(), &self.triplets, &self.rhs, Some(&self.layout))?;
        Ok(BlockVector { layout: self.layout.clone(), data: x })
    }
}

pub fn solve_linear(system: &BlockSystem) -> Result<BlockVector> {
    system.solve()
}

/// Enforces `field(location) = value` with a Lagrange multiplier appended
/// as a new single-entry block. The location must be a mesh node (reference
/// coordinates) carrying a dof of `space` inside `block`.
pub fn apply_point_constraint(
    mut sys: BlockSystem,
    mesh: &Mesh2D,
    block: &str,
    space: &Space,
    location: [f64; 2],
    value: f64,
    multiplier: &str,
) -> Result<BlockSystem> {
    let range = sys.layout.range(block)?;
    let node = (0..mesh.n_nodes())
        .find(|&i| {
            let p = mesh.vertices[i];
            (p[0] - location[0]).abs() < 1e-12 && (p[1] - location[1]).abs() < 1e-12
        })
        .ok_or_else(|| Error::Constraint(format!("no mesh node at {location:?}")))?;
    let dof = space
        .dof(node)
        .ok_or_else(|| Error::Constraint(format!("node {node} carries no dof of `{block}`")))?;
    if dof >= range.len() {
        return Err(Error::Constraint(format!("dof {dof} outside block `{block}`")));
    }
    let g = range.start + dof;
    if sys.pinned.contains(&g) {
        return Err(Error::Constraint(format!("dof {g} of `{block}` is already constrained")));
    }
    let mut blocks: Vec<(String, usize)> =
        sys.layout.names().iter().map(|n| (n.clone(), sys.layout.range(n).unwrap().len())).collect();
    blocks.push((multiplier.to_string(), 1));
    let layout = BlockLayout::new(&blocks)?;
    let m = layout.len() - 1;
    sys.triplets.push((m, g, 1.0));
    sys.triplets.push((g, m, 1.0));
    sys.rhs.push(value);
    sys.bc_mask.push(false);
    sys.pinned.push(g);
    sys.layout = layout;
    Ok(sys)
}

fn matrix(n: usize, triplets: &[(usize, usize, f64)], shift: f64) -> Result<SparseColMat<usize, f64>> {
    let mut t: Vec<Triplet<usize, usize, f64>> = triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    if shift != 0.0 {
        t.extend((0..n).map(|i| Triplet::new(i, i, shift)));
    }
    SparseColMat::try_new_from_triplets(n, n, &t).map_err(|e| Error::Solver(format!("invalid sparse matrix: {e:?}")))
}

fn residual(n: usize, triplets: &[(usize, usize, f64)], x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    for &(i, j, v) in triplets {
        r[i] -= v * x[j];
    }
    let _ = n;
    r
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn lu_solve(a: &SparseColMat<usize, f64>, b: &[f64]) -> Option<Vec<f64>> {
    let lu = a.sp_lu().ok()?;
    let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    let x: Vec<f64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Direct sparse solve with iterative refinement. A singular matrix is
/// reported with the block composition of an approximate null vector.
pub fn solve_sparse(
    n: usize,
    triplets: &[(usize, usize, f64)],
    rhs: &[f64],
    layout: Option<&BlockLayout>,
) -> Result<Vec<f64>> {
    let a = matrix(n, triplets, 0.0)?;
    let scale = triplets.iter().fold(0.0f64, |m, t| m.max(t.2.abs())).max(f64::MIN_POSITIVE);
    let lu = a.sp_lu().map_err(|_| singular(n, triplets, scale, layout))?;
    let solve = |b: &[f64]| -> Option<Vec<f64>> {
        let m = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = lu.solve(&m);
        let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        x.iter().all(|v| v.is_finite()).then_some(x)
    };
    // smallest-singular-value estimate from one inverse iteration
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let probe: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    match solve(&probe) {
        Some(z) if norm(&probe) / norm(&z) > 1e-14 * scale => {}
        _ => return Err(singular(n, triplets, scale, layout)),
    }
    let mut x = solve(rhs).ok_or_else(|| singular(n, triplets, scale, layout))?;
    let tol = 1e-10 * (1.0 + norm(rhs));
    for _ in 0..4 {
        let r = residual(n, triplets, &x, rhs);
        if norm(&r) < tol {
            return Ok(x);
        }
        let dx = solve(&r).ok_or_else(|| singular(n, triplets, scale, layout))?;
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    let r = norm(&residual(n, triplets, &x, rhs));
    if r < tol {
        Ok(x)
    } else {
        Err(Error::Solver(format!("linear residual {r:.3e} above tolerance {tol:.3e}")))
    }
}

/// Describes an approximate null vector, obtained by one solve with a
/// slightly shifted matrix.
fn singular(n: usize, triplets: &[(usize, usize, f64)], scale: f64, layout: Option<&BlockLayout>) -> Error {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let probe: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let z = matrix(n, triplets, 1e-9 * scale).ok().and_then(|a| lu_solve(&a, &probe));
    let Some(z) = z else {
        return Error::Solver("singular matrix (factorisation failed)".into());
    };
    let total: f64 = z.iter().map(|v| v * v).sum();
    let summary = match layout {
        Some(l) => {
            let mut parts: Vec<(String, f64)> = l
                .names()
                .iter()
                .map(|name| {
                    let r = l.range(name).unwrap();
                    (name.clone(), z[r].iter().map(|v| v * v).sum::<f64>() / total)
                })
                .filter(|p| p.1 > 1e-3)
                .collect();
            parts.sort_by(|a, b| b.1.total_cmp(&a.1));
            parts.iter().map(|(k, f)| format!("{k} {:.0}%", 100.0 * f)).collect::<Vec<_>>().join(", ")
        }
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()));
            format!("largest entries at {:?}", &idx[..idx.len().min(5)])
        }
    };
    Error::Solver(format!("singular matrix; near-null vector concentrated in: {summary}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let t: Vec<_> = (0..4).map(|i| (i, i, 1.0)).collect();
        let x = solve_sparse(4, &t, &[1.0, -2.0, 3.0, 0.5], None).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0, 0.5]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let t = vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)];
        let l = BlockLayout::new(&[("a", 2), ("b", 1)]).unwrap();
        match solve_sparse(3, &t, &[1.0, 2.0, 3.0], Some(&l)) {
            Err(Error::Solver(msg)) => assert!(msg.contains("a 100%"), "{msg}"),
            other => panic!("expected solver error, got {other:?}"),
        }
    }
}

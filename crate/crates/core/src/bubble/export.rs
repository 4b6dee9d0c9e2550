use super::sweep::SweepReport;
use crate::error::Result;
use crate::mesh::Mesh2D;
use crate::surface::Vec2;
use std::fmt::Write as _;
use std::path::Path;

pub const SWEEP_HEADER: &str = "eps,f0,f1,dfd_eps,V0,dp0,pG0";

/// Sweep table, one row per offset.
pub fn write_sweep_csv(report: &SweepReport, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.eps, r.f0, r.f1, r.dfd_eps, r.v0, r.dp0, r.pg0
        );
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Legacy ASCII VTK of the displaced quadratic mesh with the point field
/// `mesh_displacement_norm` plus the given scalar and vector point fields.
pub fn write_vtk(
    path: impl AsRef<Path>,
    mesh: &Mesh2D,
    displacement: &[Vec2],
    scalars: &[(&str, &[f64])],
    vectors: &[(&str, &[Vec2])],
) -> Result<()> {
    let n = mesh.n_nodes();
    let mut s = String::from("# vtk DataFile Version 3.0\ndefdom\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for i in 0..n {
        let p = mesh.position(i, Some(displacement));
        let _ = writeln!(s, "{:?} {:?} 0", p[0], p[1]);
    }
    let nc = mesh.cells.len();
    let _ = writeln!(s, "CELLS {nc} {}", nc * 7);
    for c in 0..nc {
        let nd = mesh.cell_nodes(c);
        let _ = writeln!(s, "6 {} {} {} {} {} {}", nd[0], nd[1], nd[2], nd[3], nd[4], nd[5]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("22\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let norm: Vec<f64> = displacement.iter().map(|d| d[0].hypot(d[1])).collect();
    for (name, v) in std::iter::once(("mesh_displacement_norm", norm.as_slice())).chain(scalars.iter().copied()) {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in v {
            let _ = writeln!(s, "{x:?}");
        }
    }
    for (name, v) in vectors {
        let _ = writeln!(s, "VECTORS {name} double");
        for x in *v {
            let _ = writeln!(s, "{:?} {:?} 0", x[0], x[1]);
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

//! Legacy-ASCII VTK export of the final cellwise fields.
//!
//! One file per sweep point, holding the tetrahedral mesh as an
//! unstructured grid plus cell data: the vector fields `p` and `q`, their
//! magnitudes, and the region label (0 = obstacle, 1 = layer,
//! 2 = exterior). ParaView and VisIt read the format directly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::admm::RunResult;
use crate::mesh::{Region, RegionLabels, TetMesh};

use super::AppError;

fn region_code(region: Region) -> i32 {
    match region {
        Region::Obstacle => 0,
        Region::Layer => 1,
        Region::Exterior => 2,
    }
}

/// Renders the mesh and the solution's cell fields in legacy VTK (ASCII).
pub fn render_vtk(mesh: &TetMesh, labels: &RegionLabels, result: &RunResult) -> String {
    let n_cells = mesh.num_cells();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("line-and-surface energy minimizer output\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");

    let _ = writeln!(out, "POINTS {} double", mesh.num_nodes());
    for node in &mesh.nodes {
        let _ = writeln!(out, "{:.9e} {:.9e} {:.9e}", node.x, node.y, node.z);
    }

    let _ = writeln!(out, "CELLS {} {}", n_cells, 5 * n_cells);
    for v in &mesh.cells {
        let _ = writeln!(out, "4 {} {} {} {}", v[0], v[1], v[2], v[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {n_cells}");
    for _ in 0..n_cells {
        out.push_str("10\n");
    }

    let _ = writeln!(out, "CELL_DATA {n_cells}");

    out.push_str("SCALARS p_mag double 1\nLOOKUP_TABLE default\n");
    for c in 0..n_cells {
        let _ = writeln!(out, "{:.9e}", result.p.get3(c).norm());
    }
    out.push_str("SCALARS q_mag double 1\nLOOKUP_TABLE default\n");
    for c in 0..n_cells {
        let _ = writeln!(out, "{:.9e}", result.q.get3(c).norm());
    }
    out.push_str("SCALARS region int 1\nLOOKUP_TABLE default\n");
    for c in 0..n_cells {
        let _ = writeln!(out, "{}", region_code(labels.region[c]));
    }
    out.push_str("VECTORS p double\n");
    for c in 0..n_cells {
        let v = result.p.get3(c);
        let _ = writeln!(out, "{:.9e} {:.9e} {:.9e}", v.x, v.y, v.z);
    }
    out.push_str("VECTORS q double\n");
    for c in 0..n_cells {
        let v = result.q.get3(c);
        let _ = writeln!(out, "{:.9e} {:.9e} {:.9e}", v.x, v.y, v.z);
    }
    out
}

/// Writes [`render_vtk`] output to `path`.
pub fn write_vtk(
    mesh: &TetMesh,
    labels: &RegionLabels,
    result: &RunResult,
    path: &Path,
) -> Result<(), AppError> {
    fs::write(path, render_vtk(mesh, labels, result))?;
    Ok(())
}

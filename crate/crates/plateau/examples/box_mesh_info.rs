//! Structured tetrahedral meshes of a box: entity counts and sanity checks.
//!
//! ```text
//! cargo run --example box_mesh_info
//! ```

use plateau::prelude::*;

fn main() {
    println!("{:>10} {:>9} {:>9} {:>9} {:>9} {:>6} {:>10}", "subdiv", "nodes", "edges", "facets", "cells", "χ", "volume");
    for n in [4usize, 8, 16, 24] {
        let mesh = build_box_mesh([n; 3], [2.0; 3]).expect("valid subdivisions");
        mesh.validate().expect("sound incidence structure");
        println!(
            "{:>10} {:>9} {:>9} {:>9} {:>9} {:>6} {:>10.4}",
            format!("{n}x{n}x{n}"),
            mesh.num_nodes(),
            mesh.num_edges(),
            mesh.num_facets(),
            mesh.num_cells(),
            mesh.euler_characteristic(),
            mesh.volume(),
        );
    }

    // Anisotropic boxes work too; the characteristic length is the coarsest
    // axis spacing, which the solver uses as the default d_Γ shift.
    let mesh = build_box_mesh([8, 12, 4], [1.0, 1.5, 2.0]).unwrap();
    println!(
        "\n8x12x4 box, half-widths (1, 1.5, 2): h = {} (coarsest axis spacing), {} boundary facets",
        mesh.characteristic_length(),
        mesh.boundary_facet_count(),
    );
}

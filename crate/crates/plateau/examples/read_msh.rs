//! Importing an unstructured tetrahedral mesh from a Gmsh MSH file.
//!
//! The reader accepts ASCII MSH versions 2.2 and 4.1, keeps only the
//! 4-node tetrahedra (lower-dimensional elements in the file are skipped),
//! and records per-cell physical-group tags when present. This example
//! writes a small v2.2 file — a cube split into six tetrahedra, tagged as
//! physical group 3 — and reads it back.
//!
//! ```text
//! cargo run --example read_msh [path/to/mesh.msh]
//! ```

use plateau::prelude::*;

const CUBE_MSH: &str = "\
$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
8
1 0 0 0
2 1 0 0
3 0 1 0
4 1 1 0
5 0 0 1
6 1 0 1
7 0 1 1
8 1 1 1
$EndNodes
$Elements
6
1 4 2 3 1 1 2 4 8
2 4 2 3 1 1 4 3 8
3 4 2 3 1 1 3 7 8
4 4 2 3 1 1 7 5 8
5 4 2 3 1 1 5 6 8
6 4 2 3 1 1 6 2 8
$EndElements
";

fn main() {
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("plateau_cube_demo.msh");
            std::fs::write(&p, CUBE_MSH).expect("writable temp dir");
            println!("no path given; wrote a demo cube to {}", p.display());
            p
        }
    };

    let mesh = read_msh(&path).expect("readable MSH file");
    mesh.validate().expect("sound mesh");
    println!(
        "read {}: {} nodes, {} edges, {} facets, {} cells, volume {:.6}",
        path.display(),
        mesh.num_nodes(),
        mesh.num_edges(),
        mesh.num_facets(),
        mesh.num_cells(),
        mesh.volume(),
    );
    match &mesh.physical_tags {
        Some(tags) => {
            let mut groups: Vec<i32> = tags.clone();
            groups.sort_unstable();
            groups.dedup();
            println!("physical groups present: {groups:?}");
        }
        None => println!("no physical groups in the file"),
    }

    // Imported meshes plug into everything else. A sphere of radius 0.9
    // around the cube's origin corner cuts through every tetrahedron of
    // this coarse decomposition.
    let shape = Shape::sphere(0.9);
    let labels = classify_cells(&mesh, &shape, &ClassifyParams::new(1e5, 1e-6, 0.5));
    println!(
        "a radius-0.9 sphere around the origin corner cuts {} of {} cells",
        labels.count(Region::Layer),
        mesh.num_cells()
    );
}

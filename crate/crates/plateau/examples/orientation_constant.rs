//! The orientation constant C_M = ½∫_M (1 − |ν·H|) dA.
//!
//! Energies of minimizers for differently oriented particles are only
//! comparable after adding the orientation-dependent surface constant
//! `C_M`. For a sphere every orientation is equivalent and `C_M = π`
//! exactly; for a non-symmetric particle like the peanut the constant
//! genuinely varies with the field direction.
//!
//! ```text
//! cargo run --example orientation_constant
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use plateau::admm::compute_c_m;
use plateau::prelude::*;

fn main() {
    let mesh = build_box_mesh([16; 3], [2.0; 3]).unwrap();

    println!("sphere R = 1 (exact C_M = π = {:.6}):", PI);
    for (phi, psi) in [(0.0, 0.0), (FRAC_PI_2, 0.0), (0.4, 1.1)] {
        let shape = Shape::sphere(1.0).with_orientation(phi, psi);
        let labels = classify_cells(&mesh, &shape, &ClassifyParams::new(1e5, 1e-6, 0.5));
        let c_m = compute_c_m(&mesh, &labels, &shape);
        println!(
            "  φ = {phi:>4.2}, ψ = {psi:>4.2}:  C_M = {c_m:.4}  ({:+.2}% off π)",
            100.0 * (c_m - PI) / PI
        );
    }

    println!("\npeanut (axis along x₃):");
    for (phi, label) in [(0.0, "field along the axis"), (FRAC_PI_2, "field across the axis")] {
        let shape = Shape::peanut().with_orientation(phi, 0.0);
        let labels = classify_cells(&mesh, &shape, &ClassifyParams::new(1e5, 1e-6, 0.5));
        let c_m = compute_c_m(&mesh, &labels, &shape);
        println!("  φ = {phi:>4.2} ({label}):  C_M = {c_m:.4}");
    }
    println!("\nC_M is what makes energy-vs-orientation phase diagrams well defined.");
}

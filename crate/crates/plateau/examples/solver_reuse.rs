//! Factorize once, solve many times.
//!
//! The u-step system matrix `γ_C·K + γ_M·M` never changes during a run (or
//! across a whole β sweep), so the solver splits into an expensive one-time
//! Cholesky factorization and cheap triangular solves. This example times
//! both phases on a moderate mesh.
//!
//! ```text
//! cargo run --release --example solver_reuse
//! ```

use std::time::Instant;

use plateau::fespace::{assemble_curlcurl, assemble_mass_ned};
use plateau::prelude::*;

fn main() {
    let mesh = build_box_mesh([20; 3], [2.0; 3]).unwrap();
    let n = mesh.num_edges();
    println!("assembling on a 20³ box: {n} edge unknowns");

    let mass = assemble_mass_ned(&mesh).unwrap();
    let stiff = assemble_curlcurl(&mesh).unwrap();
    let system = stiff.scaled_add(1.0, &mass, 1.0);

    let t0 = Instant::now();
    let factorization = factorize(&system).expect("SPD system");
    let t_factorize = t0.elapsed();
    println!("factorize: {:.3} s", t_factorize.as_secs_f64());

    // Many right-hand sides against the single factorization.
    let mut total = 0.0;
    let solves = 20;
    let mut checksum = 0.0;
    for k in 0..solves {
        let b: Vec<f64> = (0..n).map(|i| ((i + k) % 17) as f64 / 17.0 - 0.5).collect();
        let t0 = Instant::now();
        let x = factorization.solve(&b).unwrap();
        total += t0.elapsed().as_secs_f64();
        checksum += x[0];

        if k == 0 {
            // Confirm it really solved the system.
            let ax = system.matvec(&x);
            let residual: f64 = ax
                .iter()
                .zip(&b)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            println!("first solve residual |Ax − b|/|b| = {:.2e}", residual / scale);
        }
    }
    let per_solve = total / solves as f64;
    println!("{solves} solves: {per_solve:.4} s each");
    println!(
        "factorization pays for itself after ~{:.0} solves (speedup {:.0}x per solve)",
        t_factorize.as_secs_f64() / per_solve.max(1e-12),
        t_factorize.as_secs_f64() / per_solve.max(1e-12)
    );
    let _ = checksum;
}

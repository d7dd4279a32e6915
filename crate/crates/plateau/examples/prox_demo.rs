//! The weighted shrinkage step at the heart of the optimizer.
//!
//! Each iteration solves, independently per cell, the small convex problem
//!
//! ```text
//!   min_y  w·|y| + λ·y + (γ/2)·|y − c|²
//! ```
//!
//! whose minimizer depends on the data only through p̄ = λ − γ·c:
//! it is zero whenever |p̄| ≤ w (the mass term wins) and the shrunk vector
//! ((w/|p̄| − 1)/γ)·p̄ otherwise. This closed form is what turns the
//! surface- and line-mass terms into cheap per-cell updates.
//!
//! ```text
//! cargo run --example prox_demo
//! ```

use nalgebra::Vector3;
use plateau::prelude::*;

fn main() {
    let w = 1.0;
    let gamma = 2.0;
    println!("shrinkage along a ray, weight w = {w}, step γ = {gamma}:");
    println!("{:>8} {:>12}   regime", "|p̄|", "|prox|");
    for t in [0.0, 0.5, 0.9, 1.0, 1.1, 2.0, 4.0, 8.0] {
        let p = Vector3::new(t, 0.0, 0.0);
        let q = prox_weighted_l1(p, w, gamma).unwrap();
        let regime = if q.norm() == 0.0 { "clamped to zero" } else { "shrunk" };
        println!("{t:>8.2} {:>12.4}   {regime}", q.norm());
    }
    println!("(the kink sits exactly at |p̄| = w = {w})");

    // The output never rotates away from the data ray: the minimizer is a
    // multiple of p̄ (pointing against it, since λ enters linearly).
    let p = Vector3::new(3.0, -4.0, 12.0);
    let q = prox_weighted_l1(p, 0.7, 1.3).unwrap();
    let cosine = q.dot(&p) / (q.norm() * p.norm());
    println!("\ncollinear with the data: cos∠(p̄, prox) = {cosine:.12}");

    // Weight zero removes the mass term; the minimizer is the plain
    // quadratic one with |prox| = |p̄|/γ.
    let free = prox_weighted_l1(p, 0.0, 1.3).unwrap();
    println!(
        "w = 0 ⇒ |prox| = |p̄|/γ: {:.6} vs {:.6}",
        free.norm(),
        p.norm() / 1.3
    );
}

//! Finite-element minimization of line-and-surface energies around immersed
//! particles.
//!
//! The library solves a Plateau-type obstacle problem: given a rigid particle
//! `E` immersed in a box `K` and a uniform field direction `H`, it minimizes a
//! weighted mass functional over surface currents `T` spanning the curve
//! `Γ = {ν·H = 0} ⊂ ∂E` together with their free singular line `S = ∂T − Γ`.
//! Configurations of this kind describe defect structures (Saturn rings,
//! dipoles) around colloidal inclusions in nematic liquid crystals, and the
//! same functional appears in classical Plateau problems with obstacles.
//!
//! The discretization is a lowest-order finite-element exterior calculus
//! complex on tetrahedra,
//!
//! ```text
//!   P1  --grad-->  Ned  --curl-->  RT  --div-->  P0
//! ```
//!
//! with the surface current represented by the cell averages of a Nédélec
//! field `u` and the line current by `curl u` plus a fixed initial current
//! `curl u₀` spanning `Γ`. The nonsmooth weighted-L¹ energy is minimized by
//! an ADMM splitting: a sparse SPD solve for `u`, per-cell shrinkage steps
//! for the auxiliary surface/line variables, and dual ascent.
//!
//! # Modules
//!
//! * [`mesh`] — tetrahedral meshes (structured box generator, MSH import),
//!   implicit particle shapes, and cell classification into obstacle /
//!   boundary-layer / exterior regions.
//! * [`fespace`] — degree-of-freedom maps, the discrete gradient/curl
//!   incidence operators, interpolation, projection, and bilinear-form
//!   assembly.
//! * [`linsolve`] — sparse symmetric positive-definite solves with
//!   factorize-once / solve-many semantics.
//! * [`admm`] — the optimizer: initial current `u₀`, proximal maps, the
//!   quadratic `u`-step, the iteration loop, energies and diagnostics.
//! * [`app`] — configuration parsing, β/orientation sweeps, CSV/VTK/log
//!   output; everything the `plateau` binary does.
//!
//! # Example
//!
//! ```
//! use plateau::prelude::*;
//!
//! // Coarse desk-scale run: sphere of radius 1 in a box of half-width 2.
//! let mesh = build_box_mesh([8, 8, 8], [2.0, 2.0, 2.0]).unwrap();
//! let shape = Shape::sphere(1.0);
//! let labels = classify_cells(&mesh, &shape, &ClassifyParams::new(1e5, 1e-6, 0.5));
//! let params = AdmmParams { iterations: 20, ..AdmmParams::new(0.5) };
//! let result = admm_run(&mesh, &labels, &shape, &params).unwrap();
//! assert!(result.energy.is_finite());
//! ```

pub mod admm;
pub mod app;
pub mod fespace;
pub mod linsolve;
pub mod mesh;

/// Convenient re-exports of the types and entry points most runs need.
pub mod prelude {
    pub use crate::admm::{
        admm_run, admm_run_with, build_operators, build_u0, compute_c_m, diagnostics,
        prox_weighted_l1, AdmmParams, AdmmState, Diagnostics, Gamma0Field, Operators, RunResult,
    };
    pub use crate::app::{parse_config, run_sweep, write_vtk, RunConfig, SweepRecord};
    pub use crate::fespace::{
        assemble_curlcurl, assemble_mass_ned, assemble_mixed, build_dof_map, curl_per_cell,
        discrete_curl, discrete_gradient, interpolate_ned, project_p0, Coupling, DofMap,
        FieldVector, Space, SparseMatrix,
    };
    pub use crate::linsolve::{factorize, Factorization};
    pub use crate::mesh::{
        build_box_mesh, classify_cells, field_direction, read_msh, ClassifyParams, Region,
        RegionLabels, Shape, TetMesh,
    };
}

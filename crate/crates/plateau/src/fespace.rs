//! Lowest-order finite-element spaces on tetrahedra and their discrete
//! exterior-calculus operators.
//!
//! The four spaces form the discrete de Rham complex
//!
//! ```text
//!   P1 --grad--> Ned --curl--> RT --div--> P0
//! ```
//!
//! * `P1` — continuous piecewise-linear scalars, one dof per node;
//! * `Ned` — lowest-order Nédélec (first-kind) edge elements, one dof per
//!   edge: the circulation `∫_e v·dl` along the globally oriented edge;
//! * `RT` — lowest-order Raviart–Thomas face elements, one dof per facet:
//!   the flux through the facet in its global orientation;
//! * `P0` / `P0³` — cellwise constants (scalar / vector valued).
//!
//! With the global orientation conventions of [`crate::mesh`], the incidence
//! matrices [`discrete_gradient`] `G` and [`discrete_curl`] `C` have entries
//! in `{−1, 0, +1}` and satisfy `C·G = 0` exactly in integer arithmetic.
//!
//! On each cell the Nédélec basis function of local edge `(a, b)` is the
//! Whitney form `W = λ_a ∇λ_b − λ_b ∇λ_a`. Its curl `2 ∇λ_a × ∇λ_b` is
//! constant per cell, and a Nédélec field `v` obeys the representation
//! formula `v(x) = v(c_T) + ½ curl(v)×(x − c_T)` on each cell `T`, so the
//! centroid value *is* the cell average — which is how [`project_p0`]
//! evaluates the `L²`-projection onto `P0³`.

use nalgebra::{DMatrix, Point3, Vector3};
use thiserror::Error;

use crate::mesh::{TetMesh, LOCAL_EDGES};

#[derive(Debug, Error)]
pub enum FespaceError {
    #[error("cell {cell} is degenerate (volume {volume:.3e}); cannot assemble")]
    DegenerateCell { cell: usize, volume: f64 },
    #[error("field has {got} coefficients but the {space:?} dof map expects {expects}")]
    LengthMismatch { space: Space, got: usize, expects: usize },
}

/// The finite-element spaces handled by this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    P1,
    Ned,
    Rt,
    P0,
    /// Vector-valued cellwise constants, interleaved `(x, y, z)` per cell.
    P0Vec3,
}

/// Local→global dof numbering with orientation signs.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub space: Space,
    pub ndofs: usize,
    /// Dofs per cell.
    pub stride: usize,
    dofs: Vec<u32>,
    signs: Vec<i8>,
}

impl DofMap {
    pub fn cell_dofs(&self, c: usize) -> &[u32] {
        &self.dofs[c * self.stride..(c + 1) * self.stride]
    }
    pub fn cell_signs(&self, c: usize) -> &[i8] {
        &self.signs[c * self.stride..(c + 1) * self.stride]
    }
    pub fn num_cells(&self) -> usize {
        self.dofs.len() / self.stride
    }
}

/// Enumerates the global dofs of `space` cell by cell.
///
/// For `Ned` the sign is `+1` exactly when the cell's local edge direction
/// (see [`LOCAL_EDGES`]) agrees with the global low→high orientation; for
/// `RT` it relates the cell's outward boundary orientation to the facet's
/// stored orientation.
pub fn build_dof_map(mesh: &TetMesh, space: Space) -> DofMap {
    let nc = mesh.num_cells();
    match space {
        Space::P1 => DofMap {
            space,
            ndofs: mesh.num_nodes(),
            stride: 4,
            dofs: mesh.cells.iter().flatten().copied().collect(),
            signs: vec![1; 4 * nc],
        },
        Space::Ned => DofMap {
            space,
            ndofs: mesh.num_edges(),
            stride: 6,
            dofs: mesh.cell_edges.iter().flatten().copied().collect(),
            signs: mesh.cell_edge_signs.iter().flatten().copied().collect(),
        },
        Space::Rt => DofMap {
            space,
            ndofs: mesh.num_facets(),
            stride: 4,
            dofs: mesh.cell_facets.iter().flatten().copied().collect(),
            signs: mesh.cell_facet_signs.iter().flatten().copied().collect(),
        },
        Space::P0 => DofMap {
            space,
            ndofs: nc,
            stride: 1,
            dofs: (0..nc as u32).collect(),
            signs: vec![1; nc],
        },
        Space::P0Vec3 => DofMap {
            space,
            ndofs: 3 * nc,
            stride: 3,
            dofs: (0..3 * nc as u32).collect(),
            signs: vec![1; 3 * nc],
        },
    }
}

/// Coefficients of a finite-element field.
#[derive(Debug, Clone)]
pub struct FieldVector {
    pub space: Space,
    pub data: Vec<f64>,
}

impl FieldVector {
    pub fn zeros(space: Space, len: usize) -> Self {
        FieldVector { space, data: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Per-cell vector value of a `P0Vec3` field.
    pub fn get3(&self, cell: usize) -> Vector3<f64> {
        debug_assert_eq!(self.space, Space::P0Vec3);
        Vector3::new(self.data[3 * cell], self.data[3 * cell + 1], self.data[3 * cell + 2])
    }

    pub fn set3(&mut self, cell: usize, v: Vector3<f64>) {
        debug_assert_eq!(self.space, Space::P0Vec3);
        self.data[3 * cell] = v.x;
        self.data[3 * cell + 1] = v.y;
        self.data[3 * cell + 2] = v.z;
    }
}

/// Compressed-sparse-row matrix with summed duplicate entries.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    /// Set by assembly routines that produce symmetric forms.
    pub symmetric: bool,
}

impl SparseMatrix {
    /// Builds a CSR matrix from triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(u32, u32, f64)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for &(r, c, v) in &triplets {
            debug_assert!((r as usize) < nrows && (c as usize) < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        SparseMatrix { nrows, ncols, indptr, indices, values, symmetric: false }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c as usize];
            }
            *yr = acc;
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((c, r as u32, v));
            }
        }
        let mut t = SparseMatrix::from_triplets(self.ncols, self.nrows, triplets);
        t.symmetric = self.symmetric;
        t
    }

    /// Sparse-sparse product `self · rhs`.
    pub fn multiply(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, rhs.nrows, "multiply dimension mismatch");
        let mut triplets = Vec::new();
        // Dense scratch per row with a marker list keeps this O(nnz · row).
        let mut scratch = vec![0.0f64; rhs.ncols];
        let mut touched: Vec<u32> = Vec::new();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &v) in cols.iter().zip(vals) {
                let (rcols, rvals) = rhs.row(k as usize);
                for (&c, &w) in rcols.iter().zip(rvals) {
                    if scratch[c as usize] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    scratch[c as usize] += v * w;
                }
            }
            for &c in &touched {
                triplets.push((r as u32, c, scratch[c as usize]));
                scratch[c as usize] = 0.0;
            }
            touched.clear();
        }
        SparseMatrix::from_triplets(self.nrows, rhs.ncols, triplets)
    }

    /// `alpha·self + beta·rhs` for equal dimensions.
    pub fn scaled_add(&self, alpha: f64, rhs: &SparseMatrix, beta: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let mut triplets = Vec::with_capacity(self.nnz() + rhs.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((r as u32, c, alpha * v));
            }
            let (cols, vals) = rhs.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((r as u32, c, beta * v));
            }
        }
        let mut out = SparseMatrix::from_triplets(self.nrows, self.ncols, triplets);
        out.symmetric = self.symmetric && rhs.symmetric;
        out
    }

    /// Removes one row and the matching column; used to ground a Laplacian.
    pub fn drop_row_col(&self, k: usize) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            if r == k {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c as usize == k {
                    continue;
                }
                let rr = if r > k { r - 1 } else { r };
                let cc = if c as usize > k { c as usize - 1 } else { c as usize };
                triplets.push((rr as u32, cc as u32, v));
            }
        }
        let mut out = SparseMatrix::from_triplets(self.nrows - 1, self.ncols - 1, triplets);
        out.symmetric = self.symmetric;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// `‖A − Aᵀ‖_max ≤ tol · ‖A‖_max`.
    pub fn is_numerically_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let t = self.transpose();
        let scale = self.max_abs();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let (tcols, tvals) = t.row(r);
            // Union of the two sparsity patterns, walked in lockstep.
            let (mut i, mut j) = (0usize, 0usize);
            while i < cols.len() || j < tcols.len() {
                let (c1, c2) = (
                    cols.get(i).copied().unwrap_or(u32::MAX),
                    tcols.get(j).copied().unwrap_or(u32::MAX),
                );
                let diff = if c1 == c2 {
                    let d = vals[i] - tvals[j];
                    i += 1;
                    j += 1;
                    d
                } else if c1 < c2 {
                    i += 1;
                    vals[i - 1]
                } else {
                    j += 1;
                    tvals[j - 1]
                };
                if diff.abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Dense copy; for small oracles only.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c as usize)] = v;
            }
        }
        m
    }

    /// Row/column/value view for interop with external solvers.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c as usize, v))
        })
    }
}

/// The edge-node incidence `G : P1 → Ned`; row per edge `(a, b)` holds `−1`
/// at `a` and `+1` at `b`. `Gφ` is the Nédélec interpolant of `∇φ` (the
/// circulation of a gradient along an edge is the endpoint difference).
pub fn discrete_gradient(mesh: &TetMesh) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(2 * mesh.num_edges());
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        triplets.push((e as u32, a, -1.0));
        triplets.push((e as u32, b, 1.0));
    }
    SparseMatrix::from_triplets(mesh.num_edges(), mesh.num_nodes(), triplets)
}

/// The facet-edge incidence `C : Ned → RT`; row per facet `(i, j, k)` with
/// `i < j < k` holds the signed boundary `∂[i,j,k] = [i,j] + [j,k] − [i,k]`.
/// By Stokes, `(Cv)_F` is exactly the flux of `curl v` through `F`, so
/// `C·G = 0` is the integer identity `∂∂ = 0`.
pub fn discrete_curl(mesh: &TetMesh) -> SparseMatrix {
    let mut edge_id = std::collections::HashMap::with_capacity(mesh.num_edges());
    for (e, &pair) in mesh.edges.iter().enumerate() {
        edge_id.insert(pair, e as u32);
    }
    let mut triplets = Vec::with_capacity(3 * mesh.num_facets());
    for (f, &[i, j, k]) in mesh.facets.iter().enumerate() {
        triplets.push((f as u32, edge_id[&[i, j]], 1.0));
        triplets.push((f as u32, edge_id[&[j, k]], 1.0));
        triplets.push((f as u32, edge_id[&[i, k]], -1.0));
    }
    SparseMatrix::from_triplets(mesh.num_facets(), mesh.num_edges(), triplets)
}

/// Gradients of the four barycentric coordinates on a cell.
pub(crate) fn p1_gradients(mesh: &TetMesh, c: usize) -> [Vector3<f64>; 4] {
    let cell = mesh.cells[c];
    let p0 = mesh.nodes[cell[0] as usize];
    let e1 = mesh.nodes[cell[1] as usize] - p0;
    let e2 = mesh.nodes[cell[2] as usize] - p0;
    let e3 = mesh.nodes[cell[3] as usize] - p0;
    let six_v = e1.cross(&e2).dot(&e3);
    // ∇λ_i is the (reciprocal) dual basis of the edge vectors.
    let g1 = e2.cross(&e3) / six_v;
    let g2 = e3.cross(&e1) / six_v;
    let g3 = e1.cross(&e2) / six_v;
    [-(g1 + g2 + g3), g1, g2, g3]
}

/// `curl W = 2 ∇λ_a × ∇λ_b` of the local Whitney edge function.
#[inline]
pub(crate) fn whitney_curl(grads: &[Vector3<f64>; 4], local_edge: usize) -> Vector3<f64> {
    let (a, b) = LOCAL_EDGES[local_edge];
    2.0 * grads[a].cross(&grads[b])
}

/// Local Whitney edge function at barycentric coordinates `lambda`.
#[inline]
pub(crate) fn whitney_value(
    grads: &[Vector3<f64>; 4],
    lambda: &[f64; 4],
    local_edge: usize,
) -> Vector3<f64> {
    let (a, b) = LOCAL_EDGES[local_edge];
    grads[b] * lambda[a] - grads[a] * lambda[b]
}

/// Nédélec interpolation: dof on edge `e = (a, b)` is `∫_e f·dl` along the
/// low→high direction, by 2-point Gauss quadrature (exact for polynomial
/// integrands up to degree 3 along the edge).
pub fn interpolate_ned(
    mesh: &TetMesh,
    f: impl Fn(&Point3<f64>) -> Vector3<f64>,
) -> FieldVector {
    const OFFSET: f64 = 0.288_675_134_594_812_9; // 1/(2√3)
    let mut out = FieldVector::zeros(Space::Ned, mesh.num_edges());
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        let pa = mesh.nodes[a as usize];
        let pb = mesh.nodes[b as usize];
        let dir = pb - pa;
        let g1 = pa + dir * (0.5 - OFFSET);
        let g2 = pa + dir * (0.5 + OFFSET);
        out.data[e] = dir.dot(&(f(&g1) + f(&g2))) * 0.5;
    }
    out
}

/// Cell averages of a Nédélec field, i.e. its `L²`-projection onto `P0³`.
/// By the representation formula the average equals the centroid value
/// `Σ_i sign_i u_i W_i(c_T)` with `W_i(c_T) = ¼(∇λ_b − ∇λ_a)`.
pub fn project_p0(mesh: &TetMesh, u: &FieldVector) -> FieldVector {
    assert_eq!(u.space, Space::Ned);
    assert_eq!(u.len(), mesh.num_edges());
    let mut out = FieldVector::zeros(Space::P0Vec3, 3 * mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let grads = p1_gradients(mesh, c);
        let mut v = Vector3::zeros();
        for (i, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
            let dof = mesh.cell_edges[c][i] as usize;
            let sign = mesh.cell_edge_signs[c][i] as f64;
            v += (grads[b] - grads[a]) * (0.25 * sign * u.data[dof]);
        }
        out.set3(c, v);
    }
    out
}

/// The constant per-cell curl of a Nédélec field, as a `P0³` field.
pub fn curl_per_cell(mesh: &TetMesh, u: &FieldVector) -> FieldVector {
    assert_eq!(u.space, Space::Ned);
    let mut out = FieldVector::zeros(Space::P0Vec3, 3 * mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let grads = p1_gradients(mesh, c);
        let mut v = Vector3::zeros();
        for i in 0..6 {
            let dof = mesh.cell_edges[c][i] as usize;
            let sign = mesh.cell_edge_signs[c][i] as f64;
            v += whitney_curl(&grads, i) * (sign * u.data[dof]);
        }
        out.set3(c, v);
    }
    out
}

/// Degree-2 Keast rule on the reference tetrahedron: 4 points, weight ¼,
/// exact for all products of lowest-order basis functions.
const QUAD_A: f64 = 0.585_410_196_624_968_5; // (5 + 3√5)/20
const QUAD_B: f64 = 0.138_196_601_125_010_5; // (5 − √5)/20

fn quad_points() -> [[f64; 4]; 4] {
    let (a, b) = (QUAD_A, QUAD_B);
    [[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]]
}

fn check_volumes(mesh: &TetMesh) -> Result<(), FespaceError> {
    for (c, &v) in mesh.cell_volumes.iter().enumerate() {
        if v < 1e-14 {
            return Err(FespaceError::DegenerateCell { cell: c, volume: v });
        }
    }
    Ok(())
}

/// Nédélec mass matrix `M_ij = ∫ W_i·W_j dx` (symmetric positive definite).
pub fn assemble_mass_ned(mesh: &TetMesh) -> Result<SparseMatrix, FespaceError> {
    check_volumes(mesh)?;
    let points = quad_points();
    let mut triplets = Vec::with_capacity(36 * mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let grads = p1_gradients(mesh, c);
        let vol = mesh.cell_volumes[c];
        let dofs = &mesh.cell_edges[c];
        let signs = &mesh.cell_edge_signs[c];
        // Values of all six basis functions at the four quadrature points.
        let mut w = [[Vector3::zeros(); 6]; 4];
        for (wq, lambda) in w.iter_mut().zip(&points) {
            for (i, wqi) in wq.iter_mut().enumerate() {
                *wqi = whitney_value(&grads, lambda, i);
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = 0.0;
                for wq in &w {
                    acc += wq[i].dot(&wq[j]);
                }
                let v = acc * 0.25 * vol * (signs[i] * signs[j]) as f64;
                triplets.push((dofs[i], dofs[j], v));
            }
        }
    }
    let mut m = SparseMatrix::from_triplets(mesh.num_edges(), mesh.num_edges(), triplets);
    m.symmetric = true;
    Ok(m)
}

/// Curl-curl stiffness `K_ij = ∫ curl W_i · curl W_j dx` (symmetric positive
/// semidefinite; its kernel is the range of [`discrete_gradient`]).
pub fn assemble_curlcurl(mesh: &TetMesh) -> Result<SparseMatrix, FespaceError> {
    check_volumes(mesh)?;
    let mut triplets = Vec::with_capacity(36 * mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let grads = p1_gradients(mesh, c);
        let vol = mesh.cell_volumes[c];
        let dofs = &mesh.cell_edges[c];
        let signs = &mesh.cell_edge_signs[c];
        let curls: Vec<Vector3<f64>> = (0..6).map(|i| whitney_curl(&grads, i)).collect();
        for i in 0..6 {
            for j in 0..6 {
                let v = curls[i].dot(&curls[j]) * vol * (signs[i] * signs[j]) as f64;
                triplets.push((dofs[i], dofs[j], v));
            }
        }
    }
    let mut k = SparseMatrix::from_triplets(mesh.num_edges(), mesh.num_edges(), triplets);
    k.symmetric = true;
    Ok(k)
}

/// Which coupling [`assemble_mixed`] builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `B[e, (T,k)] = ∫_T W_e · e_k dx` — pairs `P0³` data with Nédélec
    /// test functions.
    Identity,
    /// `B[e, (T,k)] = ∫_T (curl W_e) · e_k dx` — pairs `P0³` data with the
    /// curls of Nédélec test functions.
    Curl,
}

/// Mixed coupling matrix of shape `#edges × 3·#cells`; multiplying it by a
/// `P0³` coefficient vector yields the Nédélec load vector of that data.
pub fn assemble_mixed(mesh: &TetMesh, coupling: Coupling) -> Result<SparseMatrix, FespaceError> {
    check_volumes(mesh)?;
    let mut triplets = Vec::with_capacity(18 * mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let grads = p1_gradients(mesh, c);
        let vol = mesh.cell_volumes[c];
        for (i, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
            let dof = mesh.cell_edges[c][i];
            let sign = mesh.cell_edge_signs[c][i] as f64;
            // Cell integral of the basis function (or its curl): both are
            // affine/constant, so the centroid value times volume is exact.
            let integral = match coupling {
                Coupling::Identity => (grads[b] - grads[a]) * (0.25 * vol * sign),
                Coupling::Curl => whitney_curl(&grads, i) * (vol * sign),
            };
            for k in 0..3 {
                triplets.push((dof, (3 * c + k) as u32, integral[k]));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(mesh.num_edges(), 3 * mesh.num_cells(), triplets))
}

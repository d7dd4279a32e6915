//! Implicit particle geometries: level sets, outward normals, and the field
//! direction `H(φ, ψ)`.
//!
//! Every built-in level set is negative strictly inside the particle,
//! positive outside, and (at least approximately) a signed distance near the
//! zero set, which the layer-thickness estimates in
//! [`compute_c_m`](crate::admm::compute_c_m) rely on.

use std::fs;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("level-set gradient vanishes at ({0:.6}, {1:.6}, {2:.6}); normal undefined")]
    DegeneratePoint(f64, f64, f64),
    #[error("failed to read level-set grid {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("level-set grid {path}, line {line}: {msg}")]
    GridParse { path: String, line: usize, msg: String },
}

/// Particle geometry kind with its defining parameters.
#[derive(Debug, Clone)]
pub enum ShapeKind {
    /// Ball of the given radius centered at the origin.
    Sphere { radius: f64 },
    /// Two blended lobes along the x₃-axis: spheres of `lobe_radius` at
    /// `(0, 0, ±lobe_offset)`, joined by a smooth-minimum of width `blend`.
    Peanut { lobe_radius: f64, lobe_offset: f64, blend: f64 },
    /// Torus around the x₃-axis with centerline radius `major` and tube
    /// radius `minor`.
    Donut { major: f64, minor: f64 },
    /// Half a torus (the `x₁ ≥ 0` arc of the `major` circle in the x₁x₂
    /// plane) continued by two straight arms of length `arm` in the `−x₁`
    /// direction, all thickened to a tube of radius `minor` with spherical
    /// caps.
    Croissant { major: f64, minor: f64, arm: f64 },
    /// Level set sampled on a regular grid, loaded from a file.
    Custom(GridLevelSet),
}

/// A particle shape together with the orientation of the ambient field.
///
/// Orientation sweeps rotate the field direction `H`, never the geometry, so
/// one mesh serves every `(φ, ψ)` pair.
#[derive(Debug, Clone)]
pub struct Shape {
    pub kind: ShapeKind,
    /// Rotation angle about the x₁-axis (radians).
    pub phi: f64,
    /// Rotation angle about the x₂-axis (radians).
    pub psi: f64,
    h_dir: Vector3<f64>,
}

/// `H = R_{x₂}(ψ) · R_{x₁}(φ) · e₃`, always unit length.
pub fn field_direction(phi: f64, psi: f64) -> Vector3<f64> {
    Vector3::new(phi.cos() * psi.sin(), -phi.sin(), phi.cos() * psi.cos())
}

impl Shape {
    pub fn new(kind: ShapeKind) -> Self {
        Shape { kind, phi: 0.0, psi: 0.0, h_dir: Vector3::new(0.0, 0.0, 1.0) }
    }

    pub fn sphere(radius: f64) -> Self {
        Self::new(ShapeKind::Sphere { radius })
    }

    /// The default desk-scale peanut: lobes of radius 0.65 at `(0,0,±0.5)`,
    /// blend width 0.15.
    pub fn peanut() -> Self {
        Self::new(ShapeKind::Peanut { lobe_radius: 0.65, lobe_offset: 0.5, blend: 0.15 })
    }

    pub fn donut(major: f64, minor: f64) -> Self {
        Self::new(ShapeKind::Donut { major, minor })
    }

    pub fn croissant(major: f64, minor: f64, arm: f64) -> Self {
        Self::new(ShapeKind::Croissant { major, minor, arm })
    }

    pub fn custom_from_file(path: impl AsRef<Path>) -> Result<Self, ShapeError> {
        Ok(Self::new(ShapeKind::Custom(GridLevelSet::from_file(path)?)))
    }

    /// Sets the field orientation angles and recomputes `H`.
    pub fn with_orientation(mut self, phi: f64, psi: f64) -> Self {
        self.phi = phi;
        self.psi = psi;
        self.h_dir = field_direction(phi, psi);
        self
    }

    /// The unit field direction `H`.
    pub fn h_dir(&self) -> Vector3<f64> {
        self.h_dir
    }

    /// Signed level-set value: negative inside, positive outside.
    pub fn level(&self, x: &Point3<f64>) -> f64 {
        match &self.kind {
            ShapeKind::Sphere { radius } => x.coords.norm() - radius,
            ShapeKind::Peanut { lobe_radius, lobe_offset, blend } => {
                let a = (x - Point3::new(0.0, 0.0, *lobe_offset)).norm() - lobe_radius;
                let b = (x - Point3::new(0.0, 0.0, -lobe_offset)).norm() - lobe_radius;
                smooth_min(a, b, *blend)
            }
            ShapeKind::Donut { major, minor } => {
                let rho = x.coords.xy().norm();
                ((rho - major).powi(2) + x.z * x.z).sqrt() - minor
            }
            ShapeKind::Croissant { major, minor, arm } => {
                croissant_spine_distance(x, *major, *arm) - minor
            }
            ShapeKind::Custom(grid) => grid.level(x),
        }
    }

    /// Outward unit normal, the normalized level-set gradient.
    pub fn normal(&self, x: &Point3<f64>) -> Result<Vector3<f64>, ShapeError> {
        let degenerate = || ShapeError::DegeneratePoint(x.x, x.y, x.z);
        match &self.kind {
            ShapeKind::Sphere { .. } => {
                let n = x.coords.norm();
                if n < 1e-12 {
                    return Err(degenerate());
                }
                Ok(x.coords / n)
            }
            ShapeKind::Donut { major, .. } => {
                let rho = x.coords.xy().norm();
                if rho < 1e-12 {
                    return Err(degenerate());
                }
                // Closest point on the centerline circle.
                let core = Vector3::new(major * x.x / rho, major * x.y / rho, 0.0);
                let d = x.coords - core;
                let n = d.norm();
                if n < 1e-12 {
                    return Err(degenerate());
                }
                Ok(d / n)
            }
            ShapeKind::Croissant { major, arm, .. } => {
                let spine = croissant_closest_spine_point(x, *major, *arm);
                let d = x - spine;
                let n = d.norm();
                if n < 1e-12 {
                    return Err(degenerate());
                }
                Ok(d / n)
            }
            ShapeKind::Peanut { .. } | ShapeKind::Custom(_) => {
                // Blended / sampled level sets: central differences.
                let h = match &self.kind {
                    ShapeKind::Custom(g) => 0.5 * g.spacing.iter().fold(f64::MAX, |a, &b| a.min(b)),
                    _ => 1e-5,
                };
                let mut g = Vector3::zeros();
                for k in 0..3 {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[k] += h;
                    xm[k] -= h;
                    g[k] = (self.level(&xp) - self.level(&xm)) / (2.0 * h);
                }
                let n = g.norm();
                if n < 1e-12 {
                    return Err(degenerate());
                }
                Ok(g / n)
            }
        }
    }

    /// Radius of the smallest origin-centered ball containing the particle;
    /// the default box half-width is twice this.
    pub fn circumradius(&self) -> f64 {
        match &self.kind {
            ShapeKind::Sphere { radius } => *radius,
            ShapeKind::Peanut { lobe_radius, lobe_offset, .. } => lobe_offset + lobe_radius,
            ShapeKind::Donut { major, minor } => major + minor,
            ShapeKind::Croissant { major, minor, arm } => {
                (major * major + arm * arm).sqrt() + minor
            }
            ShapeKind::Custom(grid) => grid.circumradius(),
        }
    }

    /// Geometric center of the particle: the origin for the built-in
    /// shapes, the bounding-box center for grid-sampled level sets.
    pub fn center(&self) -> Point3<f64> {
        match &self.kind {
            ShapeKind::Custom(grid) => Point3::new(
                grid.origin.x + 0.5 * grid.spacing[0] * (grid.dims[0] - 1) as f64,
                grid.origin.y + 0.5 * grid.spacing[1] * (grid.dims[1] - 1) as f64,
                grid.origin.z + 0.5 * grid.spacing[2] * (grid.dims[2] - 1) as f64,
            ),
            _ => Point3::origin(),
        }
    }

    /// A short name used in output files.
    pub fn name(&self) -> &'static str {
        match self.kind {
            ShapeKind::Sphere { .. } => "sphere",
            ShapeKind::Peanut { .. } => "peanut",
            ShapeKind::Donut { .. } => "donut",
            ShapeKind::Croissant { .. } => "croissant",
            ShapeKind::Custom(_) => "custom",
        }
    }
}

/// Polynomial smooth minimum with blend width `k`; reduces to `min(a, b)`
/// when `|a − b| ≥ k`.
fn smooth_min(a: f64, b: f64, k: f64) -> f64 {
    let h = (0.5 + 0.5 * (b - a) / k).clamp(0.0, 1.0);
    b * (1.0 - h) + a * h - k * h * (1.0 - h)
}

/// The croissant spine: the arc `{(R cos α, R sin α, 0) : α ∈ [−π/2, π/2]}`
/// plus the two segments `{(t, ±R, 0) : t ∈ [−L, 0]}` continuing its ends.
fn croissant_closest_spine_point(x: &Point3<f64>, major: f64, arm: f64) -> Point3<f64> {
    let mut best = Point3::new(major, 0.0, 0.0);
    let mut best_d = f64::MAX;

    // Arc: clamp the planar angle into [−π/2, π/2].
    let alpha = x.y.atan2(x.x).clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let arc = Point3::new(major * alpha.cos(), major * alpha.sin(), 0.0);
    let d = (x - arc).norm();
    if d < best_d {
        best_d = d;
        best = arc;
    }

    // Arms: clamp the x₁ coordinate into [−L, 0].
    for sy in [-1.0, 1.0] {
        let t = x.x.clamp(-arm, 0.0);
        let seg = Point3::new(t, sy * major, 0.0);
        let d = (x - seg).norm();
        if d < best_d {
            best_d = d;
            best = seg;
        }
    }
    best
}

fn croissant_spine_distance(x: &Point3<f64>, major: f64, arm: f64) -> f64 {
    (x - croissant_closest_spine_point(x, major, arm)).norm()
}

/// A level set sampled on a regular grid with trilinear interpolation.
///
/// File format (whitespace-separated, `#` comments allowed):
///
/// ```text
/// nx ny nz        # grid dimensions (number of samples per axis, ≥ 2)
/// x0 y0 z0        # coordinates of the first sample
/// dx dy dz        # positive grid spacings
/// v(0,0,0) v(0,0,1) ... # nx·ny·nz values, z varying fastest
/// ```
///
/// Queries outside the grid are clamped to the boundary values.
#[derive(Debug, Clone)]
pub struct GridLevelSet {
    pub dims: [usize; 3],
    pub origin: Point3<f64>,
    pub spacing: [f64; 3],
    pub values: Vec<f64>,
}

impl GridLevelSet {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ShapeError> {
        let path_str = path.as_ref().display().to_string();
        let text = fs::read_to_string(&path).map_err(|source| ShapeError::Io {
            path: path_str.clone(),
            source,
        })?;
        Self::parse(&text, &path_str)
    }

    fn parse(text: &str, path: &str) -> Result<Self, ShapeError> {
        let mut tokens: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                tokens.push((i + 1, tok));
            }
        }
        let mut pos = 0usize;
        let mut next = |what: &str| -> Result<(usize, f64), ShapeError> {
            let &(line, tok) = tokens.get(pos).ok_or_else(|| ShapeError::GridParse {
                path: path.to_string(),
                line: text.lines().count(),
                msg: format!("unexpected end of file while reading {what}"),
            })?;
            pos += 1;
            let v: f64 = tok.parse().map_err(|_| ShapeError::GridParse {
                path: path.to_string(),
                line,
                msg: format!("expected a number for {what}, got {tok:?}"),
            })?;
            Ok((line, v))
        };

        let mut dims = [0usize; 3];
        for (k, d) in dims.iter_mut().enumerate() {
            let (line, v) = next("grid dimensions")?;
            if v.fract() != 0.0 || v < 2.0 {
                return Err(ShapeError::GridParse {
                    path: path.to_string(),
                    line,
                    msg: format!("dimension {k} must be an integer ≥ 2, got {v}"),
                });
            }
            *d = v as usize;
        }
        let mut origin = Point3::origin();
        for k in 0..3 {
            origin[k] = next("grid origin")?.1;
        }
        let mut spacing = [0.0f64; 3];
        for (k, s) in spacing.iter_mut().enumerate() {
            let (line, v) = next("grid spacing")?;
            if !v.is_finite() || v <= 0.0 {
                return Err(ShapeError::GridParse {
                    path: path.to_string(),
                    line,
                    msg: format!("spacing {k} must be positive, got {v}"),
                });
            }
            *s = v;
        }
        let n = dims[0] * dims[1] * dims[2];
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(next("grid values")?.1);
        }
        Ok(GridLevelSet { dims, origin, spacing, values })
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    pub fn level(&self, x: &Point3<f64>) -> f64 {
        let mut t = [0.0f64; 3];
        let mut i0 = [0usize; 3];
        for k in 0..3 {
            let s = ((x[k] - self.origin[k]) / self.spacing[k])
                .clamp(0.0, (self.dims[k] - 1) as f64);
            let base = (s.floor() as usize).min(self.dims[k] - 2);
            i0[k] = base;
            t[k] = s - base as f64;
        }
        let mut v = 0.0;
        for di in 0..2 {
            for dj in 0..2 {
                for dk in 0..2 {
                    let w = (if di == 0 { 1.0 - t[0] } else { t[0] })
                        * (if dj == 0 { 1.0 - t[1] } else { t[1] })
                        * (if dk == 0 { 1.0 - t[2] } else { t[2] });
                    v += w * self.at(i0[0] + di, i0[1] + dj, i0[2] + dk);
                }
            }
        }
        v
    }

    fn circumradius(&self) -> f64 {
        let far = Point3::new(
            self.origin.x + self.spacing[0] * (self.dims[0] - 1) as f64,
            self.origin.y + self.spacing[1] * (self.dims[1] - 1) as f64,
            self.origin.z + self.spacing[2] * (self.dims[2] - 1) as f64,
        );
        self.origin.coords.norm().max(far.coords.norm())
    }
}

//! Parametric infill and shell geometry of a box-shaped FDM part.
//!
//! A part is described by an [`InfillSpec`]; [`generate_infill`] turns it into
//! a [`SliceGeometry`]: a stack of layers, each holding the straight strut
//! segments of the infill lattice, enclosed by a solid shell. Seeded
//! manufacturing errors ([`apply_errors`]) make same-spec parts differ, and
//! [`transform`] places a part on the stage.
//!
//! All coordinates are millimetres. Object space puts the box at
//! `[0, X] × [0, Y] × [0, Z]`; the stage moves only in the XY plane.

mod clip;
mod export;
mod infill;
mod perturb;
mod pose;
mod spec;

pub use clip::{clip_segment, point_in_quad};
pub use export::{read_geometry_text, write_geometry_text};
pub use infill::{generate_infill, nominal_infill};
pub use perturb::apply_errors;
pub use pose::{transform, Pose};
pub use spec::{ErrorModel, InfillPattern, InfillSpec, SPEC_SCHEMA_VERSION};

use thiserror::Error;

/// A point in the XY plane (mm).
pub type Point = [f64; 2];

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("density infeasible: strut spacing {spacing} mm does not exceed printing width {width} mm")]
    DensityInfeasible { spacing: f64, width: f64 },
    #[error("invalid error model: {0}")]
    InvalidErrorModel(String),
    #[error("unknown infill pattern `{0}`")]
    UnknownPattern(String),
    #[error("malformed geometry text at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One deposited road: the rectangle of half-width `width / 2` around the
/// segment `p0 → p1`, without end caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strut {
    pub p0: Point,
    pub p1: Point,
    pub width: f64,
}

impl Strut {
    pub fn length(&self) -> f64 {
        let d = sub(self.p1, self.p0);
        d[0].hypot(d[1])
    }

    /// The four footprint corners in counter-clockwise order, or `None` for a
    /// degenerate (zero-length) strut.
    pub fn footprint(&self) -> Option<[Point; 4]> {
        let len = self.length();
        if len <= 0.0 {
            return None;
        }
        let d = sub(self.p1, self.p0);
        let h = 0.5 * self.width;
        let n = [-d[1] / len * h, d[0] / len * h];
        Some([
            sub(self.p0, n),
            sub(self.p1, n),
            add(self.p1, n),
            add(self.p0, n),
        ])
    }

    /// Whether `p` lies inside the strut footprint.
    pub fn contains(&self, p: Point) -> bool {
        let len = self.length();
        if len <= 0.0 {
            return false;
        }
        let d = sub(self.p1, self.p0);
        let u = [d[0] / len, d[1] / len];
        let r = sub(p, self.p0);
        let along = r[0] * u[0] + r[1] * u[1];
        let across = r[0] * -u[1] + r[1] * u[0];
        (0.0..=len).contains(&along) && across.abs() <= 0.5 * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub z_low: f64,
    pub z_high: f64,
    pub struts: Vec<Strut>,
}

/// The solid outer walls. Floor and roof are solid slabs of the same
/// thickness; side walls are the ring between `outer` and `inner`.
///
/// Both footprints are counter-clockwise quads in world XY coordinates, so
/// they follow the part through [`transform`]. `size` is the intrinsic box
/// extent and never changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub size: [f64; 3],
    pub thickness: f64,
    pub outer: [Point; 4],
    pub inner: [Point; 4],
}

impl Shell {
    /// Axis-aligned shell of a box at the object-space origin.
    pub fn new(size: [f64; 3], thickness: f64) -> Self {
        let [x, y, _] = size;
        let s = thickness;
        Self {
            size,
            thickness,
            outer: [[0.0, 0.0], [x, 0.0], [x, y], [0.0, y]],
            inner: [[s, s], [x - s, s], [x - s, y - s], [s, y - s]],
        }
    }

    pub fn height(&self) -> f64 {
        self.size[2]
    }

    /// Centroid of the outer footprint.
    pub fn center(&self) -> Point {
        let mut c = [0.0, 0.0];
        for p in &self.outer {
            c[0] += p[0];
            c[1] += p[1];
        }
        [c[0] / 4.0, c[1] / 4.0]
    }

    /// Whether height `z` falls in the solid floor or roof slab.
    pub fn in_cap(&self, z: f64) -> bool {
        z < self.thickness || z > self.size[2] - self.thickness
    }
}

/// The realized part: contiguous layers tiling `[0, Z]` plus the shell.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGeometry {
    pub layers: Vec<Layer>,
    pub shell: Shell,
}

impl SliceGeometry {
    /// Index of the layer containing height `z` (`z_low <= z < z_high`, the
    /// top layer also owning `z == Z`).
    pub fn layer_index_at(&self, z: f64) -> Option<usize> {
        if self.layers.is_empty() || !(0.0..=self.shell.height()).contains(&z) {
            return None;
        }
        let i = self.layers.partition_point(|l| l.z_high <= z);
        Some(i.min(self.layers.len() - 1))
    }

    pub fn strut_count(&self) -> usize {
        self.layers.iter().map(|l| l.struts.len()).sum()
    }

    /// Whether the point `(x, y, z)` is solid material.
    pub fn is_solid(&self, p: Point, z: f64) -> bool {
        let shell = &self.shell;
        if !(0.0..=shell.height()).contains(&z) || !point_in_quad(p, &shell.outer) {
            return false;
        }
        if shell.in_cap(z) || !point_in_quad(p, &shell.inner) {
            return true;
        }
        match self.layer_index_at(z) {
            Some(i) => self.layers[i].struts.iter().any(|s| s.contains(p)),
            None => false,
        }
    }

    /// Check the structural invariants: contiguous layers tiling `[0, Z]`,
    /// positive widths, and strut centrelines inside the shell interior.
    pub fn validate(&self) -> Result<(), String> {
        let z = self.shell.height();
        let first = self.layers.first().ok_or("no layers")?;
        if first.z_low != 0.0 {
            return Err(format!("first layer starts at {}", first.z_low));
        }
        if self.layers.last().map(|l| l.z_high) != Some(z) {
            return Err("layers do not end at the object height".into());
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].z_high != pair[1].z_low {
                return Err(format!("gap between layers {i} and {}", i + 1));
            }
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.z_high <= layer.z_low {
                return Err(format!("layer {i} has non-positive height"));
            }
            for s in &layer.struts {
                if !(s.width > 0.0) {
                    return Err(format!("layer {i} has a strut of width {}", s.width));
                }
                for p in [s.p0, s.p1] {
                    if quad_outside_distance(p, &self.shell.inner) > 1e-9 {
                        return Err(format!("layer {i} strut point {p:?} outside the interior"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Largest violation of the quad's edge half-planes (0 when inside).
pub(crate) fn quad_outside_distance(p: Point, quad: &[Point; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let a = quad[i];
        let b = quad[(i + 1) % 4];
        let e = sub(b, a);
        let len = e[0].hypot(e[1]);
        let r = sub(p, a);
        // Signed distance to the left of the edge; negative means outside.
        let d = (e[0] * r[1] - e[1] * r[0]) / len;
        worst = worst.max(-d);
    }
    worst
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

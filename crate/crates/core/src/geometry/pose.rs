use serde::{Deserialize, Serialize};

use super::{Layer, Point, Shell, SliceGeometry, Strut};

/// Placement of a part on the stage: rotation about the vertical axis through
/// the part's centre, then translation in the XY plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// XY translation in mm.
    pub translation: Point,
    /// Rotation in degrees, normalized to `[0, 360)`.
    pub rotation: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub const fn identity() -> Self {
        Self {
            translation: [0.0, 0.0],
            rotation: 0.0,
        }
    }

    pub fn new(translation: Point, rotation_deg: f64) -> Self {
        Self {
            translation,
            rotation: normalize_degrees(rotation_deg),
        }
    }

    pub fn translate(tx: f64, ty: f64) -> Self {
        Self::new([tx, ty], 0.0)
    }

    pub fn rotate(deg: f64) -> Self {
        Self::new([0.0, 0.0], deg)
    }

    /// The pose undoing `self` when applied to the transformed part.
    pub fn inverse(&self) -> Self {
        Self::new([-self.translation[0], -self.translation[1]], -self.rotation)
    }

    pub fn is_identity(&self) -> bool {
        self.translation == [0.0, 0.0] && normalize_degrees(self.rotation) == 0.0
    }

    /// `(cos, sin)` of the rotation, exact at multiples of 90°.
    pub fn cos_sin(&self) -> (f64, f64) {
        let r = normalize_degrees(self.rotation);
        match r {
            x if x == 0.0 => (1.0, 0.0),
            x if x == 90.0 => (0.0, 1.0),
            x if x == 180.0 => (-1.0, 0.0),
            x if x == 270.0 => (0.0, -1.0),
            _ => {
                let (s, c) = r.to_radians().sin_cos();
                (c, s)
            }
        }
    }
}

/// Map an angle in degrees into `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Apply `pose` rigidly to every strut endpoint and to the shell footprint.
/// Heights, widths and layer structure are unchanged.
pub fn transform(geom: &SliceGeometry, pose: &Pose) -> SliceGeometry {
    if pose.is_identity() {
        return geom.clone();
    }
    let center = geom.shell.center();
    let (c, s) = pose.cos_sin();
    let t = pose.translation;
    let pure_shift = normalize_degrees(pose.rotation) == 0.0;
    let map = |p: Point| -> Point {
        if pure_shift {
            return [p[0] + t[0], p[1] + t[1]];
        }
        let rx = p[0] - center[0];
        let ry = p[1] - center[1];
        [
            center[0] + (c * rx - s * ry) + t[0],
            center[1] + (s * rx + c * ry) + t[1],
        ]
    };
    let quad = |q: &[Point; 4]| [map(q[0]), map(q[1]), map(q[2]), map(q[3])];
    SliceGeometry {
        layers: geom
            .layers
            .iter()
            .map(|l| Layer {
                z_low: l.z_low,
                z_high: l.z_high,
                struts: l
                    .struts
                    .iter()
                    .map(|st| Strut {
                        p0: map(st.p0),
                        p1: map(st.p1),
                        width: st.width,
                    })
                    .collect(),
            })
            .collect(),
        shell: Shell {
            size: geom.shell.size,
            thickness: geom.shell.thickness,
            outer: quad(&geom.shell.outer),
            inner: quad(&geom.shell.inner),
        },
    }
}

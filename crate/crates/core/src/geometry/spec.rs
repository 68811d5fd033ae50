use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GeometryError, Point};

/// Version written to and required from the `schema` field of spec JSON.
pub const SPEC_SCHEMA_VERSION: u32 = 1;

/// Infill lattice type. `honeycomb` is accepted as an alias of hexagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfillPattern {
    /// One family of parallel roads per layer, alternating +45° / −45°.
    Linear,
    /// Both ±45° families in every layer.
    #[serde(alias = "diamond")]
    DiamondFill,
    /// Hexagonal cell walls, identical in every layer.
    #[serde(alias = "honeycomb", alias = "hex")]
    Hexagonal,
}

impl InfillPattern {
    pub const ALL: [InfillPattern; 3] = [Self::Linear, Self::DiamondFill, Self::Hexagonal];

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::DiamondFill => "diamond_fill",
            Self::Hexagonal => "hexagonal",
        }
    }
}

impl fmt::Display for InfillPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InfillPattern {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "linear" => Ok(Self::Linear),
            "diamond_fill" | "diamond" | "diamondfill" => Ok(Self::DiamondFill),
            "hexagonal" | "honeycomb" | "hex" => Ok(Self::Hexagonal),
            _ => Err(GeometryError::UnknownPattern(s.to_string())),
        }
    }
}

/// Per-part manufacturing deviation. All lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorModel {
    /// Std of the per-axis jitter of every strut endpoint.
    pub sigma_pos: f64,
    /// Std of the strut width jitter (widths are clamped to ≥ 0.05 mm).
    pub sigma_width: f64,
    /// Std of the per-axis rigid XY drift of each layer.
    pub sigma_layer: f64,
    /// Independent probability that a strut is missing.
    pub dropout_prob: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            sigma_pos: 0.05,
            sigma_width: 0.02,
            sigma_layer: 0.02,
            dropout_prob: 0.005,
        }
    }
}

impl ErrorModel {
    pub const fn none() -> Self {
        Self {
            sigma_pos: 0.0,
            sigma_width: 0.0,
            sigma_layer: 0.0,
            dropout_prob: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_pos == 0.0
            && self.sigma_width == 0.0
            && self.sigma_layer == 0.0
            && self.dropout_prob == 0.0
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        for (name, v) in [
            ("sigma_pos", self.sigma_pos),
            ("sigma_width", self.sigma_width),
            ("sigma_layer", self.sigma_layer),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GeometryError::InvalidErrorModel(format!("{name} = {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(GeometryError::InvalidErrorModel(format!(
                "dropout_prob = {} is outside [0, 1)",
                self.dropout_prob
            )));
        }
        Ok(())
    }
}

/// Full parametric description of one manufactured part.
///
/// JSON form (`schema` must be 1; omitted fields take the defaults shown):
///
/// ```json
/// {
///   "schema": 1,
///   "pattern": "diamond_fill",
///   "density": 0.2,
///   "position_offset": [0.0, 0.0],
///   "layer_thickness": 0.2,
///   "printing_width": 0.4,
///   "object_size": [50.0, 50.0, 50.0],
///   "shell_thickness": 1.2,
///   "error": { "sigma_pos": 0.05, "sigma_width": 0.02, "sigma_layer": 0.02, "dropout_prob": 0.005 },
///   "seed": 0
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDocument", into = "SpecDocument")]
pub struct InfillSpec {
    pub pattern: InfillPattern,
    /// Solid fraction of the infill, in `(0, 1]`.
    pub density: f64,
    /// Lattice offset (mm); periodic, wrapped into one lattice period.
    pub position_offset: Point,
    pub layer_thickness: f64,
    pub printing_width: f64,
    pub object_size: [f64; 3],
    pub shell_thickness: f64,
    pub error: ErrorModel,
    pub seed: u64,
}

impl InfillSpec {
    /// A 50 mm cube with default process parameters and error model.
    pub fn cube(pattern: InfillPattern, density: f64) -> Self {
        Self {
            pattern,
            density,
            position_offset: [0.0, 0.0],
            layer_thickness: 0.2,
            printing_width: 0.4,
            object_size: [50.0, 50.0, 50.0],
            shell_thickness: 1.2,
            error: ErrorModel::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_error(mut self, error: ErrorModel) -> Self {
        self.error = error;
        self
    }

    pub fn with_offset(mut self, offset: Point) -> Self {
        self.position_offset = offset;
        self
    }

    pub fn with_size(mut self, size: [f64; 3]) -> Self {
        self.object_size = size;
        self
    }

    /// Lattice spacing derived from the density.
    ///
    /// * linear: road pitch `w / ρ`
    /// * diamond: pitch of each of the two families `2w / ρ`
    /// * hexagonal: cell edge `a = 2w / (√3 ρ)`, from wall area `3aw` over
    ///   cell area `(3√3/2) a²`
    pub fn strut_spacing(&self) -> f64 {
        let w = self.printing_width;
        let rho = self.density;
        match self.pattern {
            InfillPattern::Linear => w / rho,
            InfillPattern::DiamondFill => 2.0 * w / rho,
            InfillPattern::Hexagonal => 2.0 * w / (3f64.sqrt() * rho),
        }
    }

    /// Translation periods of the lattice along x and y.
    pub fn lattice_period(&self) -> Point {
        let d = self.strut_spacing();
        match self.pattern {
            InfillPattern::Linear | InfillPattern::DiamondFill => {
                [d * std::f64::consts::SQRT_2, d * std::f64::consts::SQRT_2]
            }
            InfillPattern::Hexagonal => [3f64.sqrt() * d, 3.0 * d],
        }
    }

    /// Position offset wrapped into `[0, period)` on each axis.
    pub fn wrapped_offset(&self) -> Point {
        let p = self.lattice_period();
        let wrap = |v: f64, period: f64| {
            let r = v.rem_euclid(period);
            if r >= period {
                0.0
            } else {
                r
            }
        };
        [wrap(self.position_offset[0], p[0]), wrap(self.position_offset[1], p[1])]
    }

    pub fn layer_count(&self) -> usize {
        (self.object_size[2] / self.layer_thickness).round() as usize
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidSpec(msg));
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density {} is outside (0, 1]", self.density));
        }
        if !(0.05..=1.0).contains(&self.layer_thickness) {
            return bad(format!("layer_thickness {} is outside [0.05, 1.0]", self.layer_thickness));
        }
        if !(0.1..=1.0).contains(&self.printing_width) {
            return bad(format!("printing_width {} is outside [0.1, 1.0]", self.printing_width));
        }
        if !(self.shell_thickness.is_finite() && self.shell_thickness > 0.0) {
            return bad(format!("shell_thickness {} must be positive", self.shell_thickness));
        }
        for (axis, v) in ["X", "Y", "Z"].iter().zip(self.object_size) {
            if !(v.is_finite() && v > 2.0 * self.shell_thickness) {
                return bad(format!("object {axis} extent {v} must exceed twice the shell"));
            }
        }
        if !self.position_offset.iter().all(|v| v.is_finite()) {
            return bad("position_offset must be finite".into());
        }
        self.error.validate()?;
        let spacing = self.strut_spacing();
        if spacing <= self.printing_width {
            return Err(GeometryError::DensityInfeasible {
                spacing,
                width: self.printing_width,
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        serde_json::from_str(text).map_err(|e| GeometryError::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

fn default_offset() -> Point {
    [0.0, 0.0]
}
fn default_layer() -> f64 {
    0.2
}
fn default_width() -> f64 {
    0.4
}
fn default_size() -> [f64; 3] {
    [50.0, 50.0, 50.0]
}
fn default_shell() -> f64 {
    1.2
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    schema: u32,
    pattern: InfillPattern,
    density: f64,
    #[serde(default = "default_offset")]
    position_offset: Point,
    #[serde(default = "default_layer")]
    layer_thickness: f64,
    #[serde(default = "default_width")]
    printing_width: f64,
    #[serde(default = "default_size")]
    object_size: [f64; 3],
    #[serde(default = "default_shell")]
    shell_thickness: f64,
    #[serde(default)]
    error: ErrorModel,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<SpecDocument> for InfillSpec {
    type Error = GeometryError;

    fn try_from(d: SpecDocument) -> Result<Self, Self::Error> {
        if d.schema != SPEC_SCHEMA_VERSION {
            return Err(GeometryError::InvalidSpec(format!(
                "unsupported schema {} (expected {SPEC_SCHEMA_VERSION})",
                d.schema
            )));
        }
        let spec = InfillSpec {
            pattern: d.pattern,
            density: d.density,
            position_offset: d.position_offset,
            layer_thickness: d.layer_thickness,
            printing_width: d.printing_width,
            object_size: d.object_size,
            shell_thickness: d.shell_thickness,
            error: d.error,
            seed: d.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<InfillSpec> for SpecDocument {
    fn from(s: InfillSpec) -> Self {
        SpecDocument {
            schema: SPEC_SCHEMA_VERSION,
            pattern: s.pattern,
            density: s.density,
            position_offset: s.position_offset,
            layer_thickness: s.layer_thickness,
            printing_width: s.printing_width,
            object_size: s.object_size,
            shell_thickness: s.shell_thickness,
            error: s.error,
            seed: s.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_names_and_aliases() {
        assert_eq!("Honeycomb".parse::<InfillPattern>().unwrap(), InfillPattern::Hexagonal);
        assert_eq!("diamond-fill".parse::<InfillPattern>().unwrap(), InfillPattern::DiamondFill);
        assert!(matches!(
            "gyroid".parse::<InfillPattern>(),
            Err(GeometryError::UnknownPattern(_))
        ));
        let p: InfillPattern = serde_json::from_str("\"honeycomb\"").unwrap();
        assert_eq!(p, InfillPattern::Hexagonal);
        assert!(serde_json::from_str::<InfillPattern>("\"gyroid\"").is_err());
    }

    #[test]
    fn linear_spacing_from_density() {
        let mut s = InfillSpec::cube(InfillPattern::Linear, 0.10);
        s.printing_width = 0.4;
        assert!((s.strut_spacing() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn linear_full_density_is_infeasible() {
        let s = InfillSpec::cube(InfillPattern::Linear, 1.0);
        assert!(matches!(s.validate(), Err(GeometryError::DensityInfeasible { .. })));
    }

    #[test]
    fn json_requires_schema_one() {
        let ok = r#"{"schema":1,"pattern":"diamond_fill","density":0.2}"#;
        let spec = InfillSpec::from_json(ok).unwrap();
        assert_eq!(spec, InfillSpec::cube(InfillPattern::DiamondFill, 0.2));
        let wrong = r#"{"schema":2,"pattern":"linear","density":0.2}"#;
        assert!(InfillSpec::from_json(wrong).is_err());
        let missing = r#"{"pattern":"linear","density":0.2}"#;
        assert!(InfillSpec::from_json(missing).is_err());
        let unknown = r#"{"schema":1,"pattern":"linear","density":0.2,"speed":40}"#;
        assert!(InfillSpec::from_json(unknown).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = InfillSpec::cube(InfillPattern::Hexagonal, 0.1)
            .with_seed(u64::MAX)
            .with_offset([0.3, 1.7]);
        let back = InfillSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        assert!(s.to_json().contains("\"schema\": 1"));
    }

    #[test]
    fn rejects_out_of_range_fields() {
        let base = InfillSpec::cube(InfillPattern::DiamondFill, 0.2);
        let mut s = base.clone();
        s.density = 0.0;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.layer_thickness = 1.5;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.printing_width = 0.05;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.object_size = [2.0, 50.0, 50.0];
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.error.dropout_prob = 1.0;
        assert!(matches!(s.validate(), Err(GeometryError::InvalidErrorModel(_))));
        let mut s = base;
        s.error.sigma_pos = -0.1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn offset_wraps_into_one_period() {
        let s = InfillSpec::cube(InfillPattern::Linear, 0.1).with_offset([-1.0, 100.0]);
        let p = s.lattice_period();
        let w = s.wrapped_offset();
        assert!(w[0] >= 0.0 && w[0] < p[0]);
        assert!(w[1] >= 0.0 && w[1] < p[1]);
        assert!((w[0] - (p[0] - 1.0)).abs() < 1e-12);
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::classifier::{AugmentSpec, TrainConfig};
use crate::geometry::{InfillSpec, Pose};
use crate::render::{Frame, OpticalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MatchMatrix,
    Classify,
    LayerSweep,
    RobustnessSweep,
}

/// An object spec given inline or as a path to a spec JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecSource {
    File(PathBuf),
    Inline(InfillSpec),
}

impl SpecSource {
    /// Relative paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<InfillSpec, HarnessError> {
        match self {
            SpecSource::Inline(s) => Ok(s.clone()),
            SpecSource::File(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    HarnessError::Config(format!("spec file {}: {e}", path.display()))
                })?;
                Ok(InfillSpec::from_json(&text)?)
            }
        }
    }
}

/// Stage positions and turntable angles at which every object is imaged.
///
/// Positions form a square grid centred on the origin whose side spans
/// `grid_extent` mm in steps of `grid_step`; at each position the object is
/// turned through `0, rotation_step, …` up to 360°.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseGrid {
    pub grid_extent: f64,
    pub grid_step: f64,
    pub rotation_step: f64,
    /// Angle of the first turntable stop (degrees).
    #[serde(default)]
    pub rotation_offset: f64,
}

impl Default for PoseGrid {
    fn default() -> Self {
        Self {
            grid_extent: 2.0,
            grid_step: 0.5,
            rotation_step: 45.0,
            rotation_offset: 0.0,
        }
    }
}

impl PoseGrid {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return bad(format!("grid_step {} must be positive", self.grid_step));
        }
        if !(self.grid_extent.is_finite() && self.grid_extent >= 0.0) {
            return bad(format!("grid_extent {} must be non-negative", self.grid_extent));
        }
        let n = self.grid_extent / self.grid_step;
        if (n - n.round()).abs() > 1e-9 {
            return bad(format!(
                "grid_extent {} is not a multiple of grid_step {}",
                self.grid_extent, self.grid_step
            ));
        }
        let r = self.rotation_step;
        let k = 360.0 / r;
        if !(r.is_finite() && r > 0.0 && r <= 360.0) || (k - k.round()).abs() > 1e-9 {
            return bad(format!("rotation_step {r} does not divide 360"));
        }
        Ok(())
    }

    /// Grid points per axis.
    pub fn positions_per_axis(&self) -> usize {
        (self.grid_extent / self.grid_step).round() as usize + 1
    }

    pub fn rotation_count(&self) -> usize {
        (360.0 / self.rotation_step).round() as usize
    }

    pub fn len(&self) -> usize {
        let n = self.positions_per_axis();
        n * n * self.rotation_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every pose with its `(ix, iy, ir)` grid indices, `ix` slowest.
    pub fn poses(&self) -> Vec<([usize; 3], Pose)> {
        let n = self.positions_per_axis();
        let r = self.rotation_count();
        let coord = |i: usize| i as f64 * self.grid_step - 0.5 * self.grid_extent;
        let mut out = Vec::with_capacity(n * n * r);
        for ix in 0..n {
            for iy in 0..n {
                for ir in 0..r {
                    let pose = Pose::new(
                        [coord(ix), coord(iy)],
                        self.rotation_offset + ir as f64 * self.rotation_step,
                    );
                    out.push(([ix, iy, ir], pose));
                }
            }
        }
        out
    }
}

/// Which poses go to the test split.
///
/// Rays travel along +Y, so the stage `y` position does not change the
/// image; holding out `x` columns keeps every test image unseen in training.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Grid `x` indices reserved for testing. Empty means the centre column.
    pub test_columns: Vec<usize>,
}

impl SplitConfig {
    pub fn is_test(&self, grid: &PoseGrid, ix: usize) -> bool {
        if self.test_columns.is_empty() {
            ix == grid.positions_per_axis() / 2
        } else {
            self.test_columns.contains(&ix)
        }
    }
}

/// Classifier image frame, optics and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub frame: Frame,
    pub optics: OpticalParams,
    pub pose_grid: PoseGrid,
    /// Physical objects printed from each spec.
    pub objects_per_spec: usize,
    pub split: SplitConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            frame: Frame::new(64, 64, 1.25),
            optics: OpticalParams::default(),
            pose_grid: PoseGrid::default(),
            objects_per_spec: 1,
            split: SplitConfig::default(),
        }
    }
}

/// Thresholds that decide the process exit status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Assertions {
    /// Minimum final test accuracy of each classifier variant.
    pub min_accuracy: f64,
    /// Minimum correlation in the robustness sweep.
    pub min_correlation: f64,
}

impl Default for Assertions {
    fn default() -> Self {
        Self {
            min_accuracy: 0.90,
            min_correlation: 0.95,
        }
    }
}

/// Parameters of the pose-robustness sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessConfig {
    pub frame: Frame,
    /// Stage translations (mm) applied along x and along y.
    pub translations: Vec<f64>,
    /// Turntable rotations (degrees).
    pub rotations: Vec<f64>,
    /// Lateral camera offsets (mm) at `camera_distance`.
    pub camera_offsets: Vec<f64>,
    pub camera_distance: f64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            frame: Frame::new(64, 64, 1.0),
            translations: vec![-0.5, -0.25, 0.25, 0.5],
            rotations: vec![-5.0, -2.5, 2.5, 5.0],
            camera_offsets: vec![-5.0, 5.0],
            camera_distance: 300.0,
        }
    }
}

/// Parameters of the single-layer sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayerSweepConfig {
    pub thicknesses: Vec<f64>,
    /// Relative attenuation perturbations standing in for print-state changes.
    pub mu_perturbations: Vec<f64>,
}

impl Default for LayerSweepConfig {
    fn default() -> Self {
        Self {
            thicknesses: vec![0.1, 0.2, 0.3, 0.4],
            mu_perturbations: vec![-0.05, 0.05],
        }
    }
}

/// Parameters of the match-matrix experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchConfig {
    pub frame: Frame,
    pub ratio: f64,
    pub detector: crate::features::DetectorParams,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            frame: Frame::new(256, 256, 0.3125),
            ratio: 0.7,
            detector: Default::default(),
        }
    }
}

/// Everything one experiment run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub specs: Vec<SpecSource>,
    #[serde(default)]
    pub optics: OpticalParams,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub augmentation: AugmentSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub matching: MatchConfig,
    #[serde(default)]
    pub robustness: RobustnessConfig,
    #[serde(default)]
    pub layer_sweep: LayerSweepConfig,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            specs: Vec::new(),
            optics: OpticalParams::default(),
            dataset: DatasetConfig::default(),
            augmentation: AugmentSpec::default(),
            train: TrainConfig::default(),
            matching: MatchConfig::default(),
            robustness: RobustnessConfig::default(),
            layer_sweep: LayerSweepConfig::default(),
            assertions: Assertions::default(),
            output_dir: default_out(),
            master_seed: 0,
        }
    }

    pub fn with_specs(mut self, specs: impl IntoIterator<Item = InfillSpec>) -> Self {
        self.specs = specs.into_iter().map(SpecSource::Inline).collect();
        self
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Read a config; relative spec paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent();
        for s in &mut cfg.specs {
            if let SpecSource::File(p) = s {
                if p.is_relative() {
                    if let Some(b) = base {
                        *p = b.join(&*p);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The config with every spec inlined, as written next to the outputs.
    pub fn resolved(&self) -> Result<Self, HarnessError> {
        let mut out = self.clone();
        out.specs = self
            .load_specs()?
            .into_iter()
            .map(SpecSource::Inline)
            .collect();
        Ok(out)
    }

    pub fn load_specs(&self) -> Result<Vec<InfillSpec>, HarnessError> {
        self.specs.iter().map(|s| s.load(None)).collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        self.optics.validate()?;
        self.dataset.pose_grid.validate()?;
        self.dataset.frame.validate()?;
        self.dataset.optics.validate()?;
        for spec in self.load_specs()? {
            spec.validate()?;
        }
        match self.kind {
            ExperimentKind::MatchMatrix if self.specs.len() < 2 => {
                bad("a match experiment needs at least two specs")
            }
            ExperimentKind::Classify => {
                if self.specs.len() * self.dataset.objects_per_spec < 2 {
                    return bad("a classification experiment needs at least two objects");
                }
                self.train.validate()?;
                Ok(())
            }
            ExperimentKind::RobustnessSweep => {
                if self.specs.len() != 1 {
                    return bad("the robustness sweep takes exactly one spec");
                }
                if self.optics.diffusion_sigma <= 0.0 {
                    return bad("the robustness sweep needs diffusion_sigma > 0");
                }
                Ok(())
            }
            ExperimentKind::LayerSweep if self.layer_sweep.thicknesses.is_empty() => {
                bad("the thickness list is empty")
            }
            _ => Ok(()),
        }
    }
}

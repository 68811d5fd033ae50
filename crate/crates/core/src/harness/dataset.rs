use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError};
use crate::classifier::{LabeledDataset, Provenance, Split};
use crate::geometry::{generate_infill, InfillSpec, Pose};
use crate::render::render;
use crate::rng::{domain, fan_out};

/// Where one dataset image came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleInfo {
    pub label: usize,
    pub split: Split,
    /// `(ix, iy, ir)` position in the pose grid.
    pub grid: [usize; 3],
    pub pose: Pose,
}

impl SampleInfo {
    pub fn file_stem(&self) -> String {
        format!(
            "obj{:02}_x{}_y{}_r{:02}",
            self.label, self.grid[0], self.grid[1], self.grid[2]
        )
    }
}

/// One physical object per (spec, copy), each with its own error seed
/// `fan_out(master, OBJECT, index)`.
pub fn plan_objects(cfg: &ExperimentConfig) -> Result<Vec<InfillSpec>, HarnessError> {
    let specs = cfg.load_specs()?;
    let copies = cfg.dataset.objects_per_spec;
    let mut out = Vec::with_capacity(specs.len() * copies);
    for spec in &specs {
        for _ in 0..copies {
            let idx = out.len() as u64;
            out.push(spec.clone().with_seed(fan_out(cfg.master_seed, domain::OBJECT, idx)));
        }
    }
    Ok(out)
}

pub fn spec_id(spec: &InfillSpec, index: usize) -> String {
    format!(
        "{}-{}-{index:02}",
        spec.pattern.name(),
        (spec.density * 100.0).round() as u32
    )
}

/// Render every object at every grid pose and label by object index.
pub fn build_dataset(
    cfg: &ExperimentConfig,
) -> Result<(LabeledDataset, Vec<SampleInfo>), HarnessError> {
    let dc = &cfg.dataset;
    dc.pose_grid.validate()?;
    let objects = plan_objects(cfg)?;
    if objects.is_empty() {
        return Err(HarnessError::Config("no objects to image".into()));
    }
    let poses = dc.pose_grid.poses();
    let mut images = Vec::with_capacity(objects.len() * poses.len());
    let mut info = Vec::with_capacity(images.capacity());
    for (label, spec) in objects.iter().enumerate() {
        let geom = generate_infill(spec)?;
        for (grid, pose) in &poses {
            images.push(render(&geom, &dc.optics, pose, &dc.frame)?);
            let split = if dc.split.is_test(&dc.pose_grid, grid[0]) {
                Split::Test
            } else {
                Split::Train
            };
            info.push(SampleInfo {
                label,
                split,
                grid: *grid,
                pose: *pose,
            });
        }
    }
    let ds = LabeledDataset {
        labels: info.iter().map(|s| s.label).collect(),
        split: info.iter().map(|s| s.split).collect(),
        images,
        num_classes: objects.len(),
        provenance: Provenance {
            master_seed: cfg.master_seed,
            spec_ids: objects.iter().enumerate().map(|(i, s)| spec_id(s, i)).collect(),
        },
    };
    Ok((ds, info))
}

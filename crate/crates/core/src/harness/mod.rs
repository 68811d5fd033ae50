//! Experiment orchestration: datasets, experiment runs, sweeps and the
//! on-disk output tree.

mod config;
mod dataset;
mod experiments;
mod output;
mod run;

pub use config::{
    Assertions, DatasetConfig, ExperimentConfig, ExperimentKind, LayerSweepConfig, MatchConfig,
    PoseGrid, RobustnessConfig, SpecSource, SplitConfig,
};
pub use dataset::{build_dataset, plan_objects, spec_id, SampleInfo};
pub use experiments::{
    augment_dataset, match_specs, run_classify_experiment, run_layer_sweep, run_match_block,
    run_match_experiment, run_robustness_sweep, train_variant, ClassifyReport, Displacement,
    LayerRow, LayerSweepReport, MatchBlock, MatchReport, RobustnessReport, RobustnessRow,
    VariantReport,
};
pub use output::{sha256_hex, Artifact, OutputTree, RunManifest, TOOL_VERSION};
pub use run::{execute, write_dataset, RunOutcome};

use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::features::MatchReportError;
use crate::geometry::GeometryError;
use crate::image::ImageError;
use crate::render::RenderError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Report(#[from] MatchReportError),
    #[error("{variant} training failed: {source}")]
    Training {
        variant: String,
        source: ClassifierError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

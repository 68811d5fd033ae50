//! Synthetic transmission imaging of 3D-printed infill and identification of
//! individual printed objects from their images.
//!
//! - [`geometry`]: slicer-style infill lattices with per-object print errors.
//! - [`render`]: orthographic Beer–Lambert transmission images with a
//!   scattering PSF.
//! - [`features`]: Fast-Hessian keypoints, 64-d descriptors and ratio-test
//!   matching.
//! - [`classifier`]: a small residual CNN trained with SGD.
//! - [`harness`]: datasets, experiments and reproducible output trees.

pub mod classifier;
pub mod features;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod render;
pub mod rng;

pub use classifier::{ClassifierModel, LabeledDataset, ModelConfig, TrainConfig};
pub use features::{DetectorParams, FeatureSet, MatchRateMatrix};
pub use geometry::{ErrorModel, InfillPattern, InfillSpec, Pose, SliceGeometry};
pub use harness::{ExperimentConfig, ExperimentKind, RunManifest};
pub use image::TransmissionImage;
pub use render::{Frame, OpticalParams};

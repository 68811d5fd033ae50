use serde::{Deserialize, Serialize};

use super::{build_dataset, plan_objects, spec_id, ExperimentConfig, HarnessError, SampleInfo};
use crate::classifier::{
    augment, evaluate_split, train_with_progress, AccuracyTrace, AugmentSpec, ClassifierModel,
    EpochStats, Evaluation, LabeledDataset, ModelConfig, Split, TrainConfig,
};
use crate::features::{match_rate_matrix, MatchParams, MatchRateMatrix};
use crate::geometry::{generate_infill, InfillPattern, InfillSpec, Pose};
use crate::image::{normalized_cross_correlation, TransmissionImage};
use crate::render::{render, render_single_layer, NoiseModel, OpticalParams};
use crate::rng::{derive_seed, domain, fan_out};

// ---------------------------------------------------------------- matching

/// The four comparison families of the match table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchBlock {
    Pattern,
    Density,
    Position,
    SameSpec,
}

impl MatchBlock {
    pub const ALL: [MatchBlock; 4] = [Self::Pattern, Self::Density, Self::Position, Self::SameSpec];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pattern => "pattern",
            Self::Density => "density",
            Self::Position => "position",
            Self::SameSpec => "same-spec",
        }
    }

    /// Specs of the block's three objects (50 mm cubes, default errors).
    pub fn specs(self) -> Vec<InfillSpec> {
        let diamond = |d: f64| InfillSpec::cube(InfillPattern::DiamondFill, d);
        match self {
            Self::Pattern => [
                InfillPattern::DiamondFill,
                InfillPattern::Linear,
                InfillPattern::Hexagonal,
            ]
            .into_iter()
            .map(|p| InfillSpec::cube(p, 0.2))
            .collect(),
            Self::Density => vec![diamond(0.1), diamond(0.2), diamond(0.3)],
            Self::Position => {
                let base = diamond(0.1);
                let period = base.lattice_period()[0];
                (0..3)
                    .map(|k| base.clone().with_offset([k as f64 * period / 3.0, 0.0]))
                    .collect()
            }
            Self::SameSpec => vec![diamond(0.2); 3],
        }
    }

    pub fn labels(self) -> Vec<String> {
        let l: [&str; 3] = match self {
            Self::Pattern => ["diamond", "linear", "hexagonal"],
            Self::Density => ["10%", "20%", "30%"],
            Self::Position => ["position-a", "position-b", "position-c"],
            Self::SameSpec => ["object-1", "object-2", "object-3"],
        };
        l.iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub matrix: MatchRateMatrix,
    pub mean_off_diagonal: f64,
    /// Keypoints per image.
    pub keypoints: Vec<usize>,
    #[serde(skip)]
    pub images: Vec<TransmissionImage>,
}

/// Render each spec at the rest pose and match every image against every
/// other. Specs keep their own seeds.
pub fn match_specs(
    specs: &[(String, InfillSpec)],
    optics: &OpticalParams,
    cfg: &super::MatchConfig,
) -> Result<MatchReport, HarnessError> {
    let mut images = Vec::with_capacity(specs.len());
    for (label, spec) in specs {
        let geom = generate_infill(spec)?;
        images.push((label.clone(), render(&geom, optics, &Pose::identity(), &cfg.frame)?));
    }
    let params = MatchParams {
        detector: cfg.detector,
        ratio: cfg.ratio,
    };
    let matrix = match_rate_matrix(&images, &params);
    Ok(MatchReport {
        mean_off_diagonal: matrix.mean_off_diagonal_rate(),
        keypoints: matrix.total.iter().map(|row| row[0]).collect(),
        matrix,
        images: images.into_iter().map(|(_, i)| i).collect(),
    })
}

/// One object per config spec, seeded from the master seed.
pub fn run_match_experiment(cfg: &ExperimentConfig) -> Result<MatchReport, HarnessError> {
    if cfg.specs.len() < 2 {
        return Err(HarnessError::Config("a match experiment needs at least two specs".into()));
    }
    let mut one = cfg.clone();
    one.dataset.objects_per_spec = 1;
    let specs: Vec<(String, InfillSpec)> = plan_objects(&one)?
        .into_iter()
        .enumerate()
        .map(|(i, s)| (spec_id(&s, i), s))
        .collect();
    match_specs(&specs, &cfg.optics, &cfg.matching)
}

/// A block of the match table under `master_seed`.
pub fn run_match_block(
    block: MatchBlock,
    master_seed: u64,
    optics: &OpticalParams,
    cfg: &super::MatchConfig,
) -> Result<MatchReport, HarnessError> {
    let specs: Vec<(String, InfillSpec)> = block
        .labels()
        .into_iter()
        .zip(block.specs())
        .enumerate()
        .map(|(i, (l, s))| (l, s.with_seed(fan_out(master_seed, domain::OBJECT, i as u64))))
        .collect();
    match_specs(&specs, optics, cfg)
}

// ---------------------------------------------------------- classification

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub train_images: usize,
    pub epochs: usize,
    pub trace: AccuracyTrace,
    pub test: Evaluation,
    #[serde(skip)]
    pub model_bytes: Vec<u8>,
}

impl VariantReport {
    pub fn final_accuracy(&self) -> f64 {
        self.test.accuracy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub clean: VariantReport,
    pub augmented: VariantReport,
    pub min_accuracy: f64,
    pub passed: bool,
    #[serde(skip)]
    pub samples: Vec<SampleInfo>,
    #[serde(skip)]
    pub dataset: Option<LabeledDataset>,
}

/// Expand every training image with `spec`; noise seeds are per image.
pub fn augment_dataset(ds: &LabeledDataset, spec: &AugmentSpec, master_seed: u64) -> LabeledDataset {
    ds.map_train(|i, img| {
        let mut s = spec.clone();
        if let Some(n) = s.noise {
            s.noise = Some(NoiseModel::new(
                n.gaussian_sigma,
                derive_seed(fan_out(master_seed, domain::AUGMENT, i as u64), n.seed),
            ));
        }
        augment(img, &s)
    })
}

/// Train one variant from the seed-determined initial weights.
pub fn train_variant(
    name: &str,
    ds: &LabeledDataset,
    train: &TrainConfig,
    on_epoch: &mut dyn FnMut(&str, &EpochStats),
) -> Result<VariantReport, HarnessError> {
    let input = ds
        .images
        .first()
        .map(|i| i.width())
        .ok_or_else(|| HarnessError::Config("empty dataset".into()))?;
    let wrap = |source| HarnessError::Training {
        variant: name.to_string(),
        source,
    };
    let mut model = ClassifierModel::init(
        ModelConfig::new(input, ds.num_classes),
        fan_out(train.seed, domain::INIT, 0),
    )
    .map_err(wrap)?;
    let trace = train_with_progress(&mut model, ds, train, |s| on_epoch(name, s)).map_err(wrap)?;
    let test = evaluate_split(&model, ds, Split::Test).map_err(wrap)?;
    Ok(VariantReport {
        name: name.to_string(),
        train_images: ds.indices(Split::Train).len(),
        epochs: train.epochs,
        trace,
        test,
        model_bytes: model.to_bytes(),
    })
}

/// Train on the clean dataset and on its augmented copy.
///
/// Both variants start from the same weights. The augmented variant runs
/// `ceil(epochs / expansion)` epochs, so it takes about as many optimizer
/// steps as the clean one.
pub fn run_classify_experiment(
    cfg: &ExperimentConfig,
    mut on_epoch: impl FnMut(&str, &EpochStats),
) -> Result<ClassifyReport, HarnessError> {
    let (ds, samples) = build_dataset(cfg)?;
    ds.validate()?;
    let mut train = cfg.train;
    train.seed = derive_seed(cfg.master_seed, cfg.train.seed);
    let clean = train_variant("clean", &ds, &train, &mut on_epoch)?;

    let aug_ds = augment_dataset(&ds, &cfg.augmentation, cfg.master_seed);
    let mut aug_train = train;
    aug_train.epochs = train.epochs.div_ceil(cfg.augmentation.expansion()).max(1);
    let augmented = train_variant("augmented", &aug_ds, &aug_train, &mut on_epoch)?;

    let min = cfg.assertions.min_accuracy;
    let passed = clean.final_accuracy() >= min
        && augmented.final_accuracy() >= min
        && augmented.final_accuracy() <= clean.final_accuracy();
    Ok(ClassifyReport {
        clean,
        augmented,
        min_accuracy: min,
        passed,
        samples,
        dataset: Some(ds),
    })
}

// -------------------------------------------------------------- robustness

/// Pixel change below which a displaced sharp render counts as unchanged.
const VISIBLE_CHANGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Displacement {
    TranslateX,
    TranslateY,
    Rotate,
    CameraOffset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub kind: Displacement,
    /// mm for translations and camera offsets, degrees for rotations.
    pub amount: f64,
    pub pose: Pose,
    pub ncc_diffused: f64,
    pub ncc_sharp: f64,
    /// Whether the displacement changes the sharp image at all.
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub diffusion_sigma: f64,
    pub rows: Vec<RobustnessRow>,
    /// Minimum diffused correlation over stage translations and rotations.
    pub min_ncc_diffused: f64,
    /// The same minimum over stage translations only.
    pub min_ncc_translation: f64,
    /// Diffused beats sharp at every visible displacement.
    pub diffusion_helps: bool,
    pub passed: bool,
}

impl RobustnessReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,amount,tx,ty,rotation,ncc_diffused,ncc_sharp,visible\n");
        for r in &self.rows {
            let kind = serde_json::to_value(r.kind).expect("kind serializes");
            s += &format!(
                "{},{},{},{},{},{},{},{}\n",
                kind.as_str().unwrap_or_default(),
                r.amount,
                r.pose.translation[0],
                r.pose.translation[1],
                r.pose.rotation,
                r.ncc_diffused,
                r.ncc_sharp,
                r.visible
            );
        }
        s
    }
}

/// Correlate renders at displaced poses against the rest pose, with the
/// configured diffusion and without it.
///
/// A lateral camera offset `o` at distance `D`, with the camera re-aimed at
/// the part, views it turned by `atan(o / D)`; it is rendered as that
/// rotation.
pub fn run_robustness_sweep(cfg: &ExperimentConfig) -> Result<RobustnessReport, HarnessError> {
    let specs = cfg.load_specs()?;
    let [spec] = specs.as_slice() else {
        return Err(HarnessError::Config("the robustness sweep takes exactly one spec".into()));
    };
    if cfg.optics.diffusion_sigma <= 0.0 {
        return Err(HarnessError::Config("the robustness sweep needs diffusion_sigma > 0".into()));
    }
    let rc = &cfg.robustness;
    let spec = spec.clone().with_seed(fan_out(cfg.master_seed, domain::OBJECT, 0));
    let geom = generate_infill(&spec)?;
    let diffused = cfg.optics;
    let sharp = cfg.optics.with_diffusion(0.0);
    let reference = |o: &OpticalParams| render(&geom, o, &Pose::identity(), &rc.frame);
    let (ref_d, ref_s) = (reference(&diffused)?, reference(&sharp)?);

    let mut cases: Vec<(Displacement, f64, Pose)> = Vec::new();
    for &t in &rc.translations {
        cases.push((Displacement::TranslateX, t, Pose::translate(t, 0.0)));
    }
    for &t in &rc.translations {
        cases.push((Displacement::TranslateY, t, Pose::translate(0.0, t)));
    }
    for &r in &rc.rotations {
        cases.push((Displacement::Rotate, r, Pose::rotate(r)));
    }
    for &o in &rc.camera_offsets {
        let deg = -(o / rc.camera_distance).atan().to_degrees();
        cases.push((Displacement::CameraOffset, o, Pose::rotate(deg)));
    }

    let mut rows = Vec::with_capacity(cases.len());
    for (kind, amount, pose) in cases {
        let d = render(&geom, &diffused, &pose, &rc.frame)?;
        let s = render(&geom, &sharp, &pose, &rc.frame)?;
        rows.push(RobustnessRow {
            kind,
            amount,
            pose,
            ncc_diffused: normalized_cross_correlation(&ref_d, &d),
            ncc_sharp: normalized_cross_correlation(&ref_s, &s),
            visible: s
                .data()
                .iter()
                .zip(ref_s.data())
                .any(|(a, b)| (a - b).abs() > VISIBLE_CHANGE),
        });
    }
    let min_over = |keep: &dyn Fn(Displacement) -> bool| {
        rows.iter()
            .filter(|r| keep(r.kind))
            .map(|r| r.ncc_diffused)
            .fold(1.0, f64::min)
    };
    let min_ncc_diffused = min_over(&|k| k != Displacement::CameraOffset);
    let min_ncc_translation =
        min_over(&|k| matches!(k, Displacement::TranslateX | Displacement::TranslateY));
    let diffusion_helps = rows
        .iter()
        .filter(|r| r.visible)
        .all(|r| r.ncc_diffused > r.ncc_sharp);
    Ok(RobustnessReport {
        diffusion_sigma: diffused.diffusion_sigma,
        passed: min_ncc_diffused > cfg.assertions.min_correlation && diffusion_helps,
        rows,
        min_ncc_diffused,
        min_ncc_translation,
        diffusion_helps,
    })
}

// ------------------------------------------------------------- layer sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub thickness: f64,
    pub mu_solid: f64,
    /// Relative attenuation change; 0 for the thickness series.
    pub mu_change: f64,
    pub mean_intensity: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSweepReport {
    pub rows: Vec<LayerRow>,
    pub thickness_decreasing: bool,
    /// Smallest intensity drop between consecutive thicknesses.
    pub min_thickness_step: f64,
    /// Largest intensity shift from an attenuation change at any thickness.
    pub max_state_shift: f64,
    /// Largest deviation from `I₀·exp(−μ·t)`.
    pub max_closed_form_error: f64,
    pub passed: bool,
}

impl LayerSweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("thickness,mu_solid,mu_change,mean_intensity,closed_form\n");
        for r in &self.rows {
            s += &format!(
                "{},{},{},{},{}\n",
                r.thickness, r.mu_solid, r.mu_change, r.mean_intensity, r.closed_form
            );
        }
        s
    }
}

/// Single-layer intensities across thicknesses and attenuation changes.
pub fn run_layer_sweep(cfg: &ExperimentConfig) -> Result<LayerSweepReport, HarnessError> {
    let lc = &cfg.layer_sweep;
    if lc.thicknesses.is_empty() {
        return Err(HarnessError::Config("the thickness list is empty".into()));
    }
    let base = cfg.optics;
    let measure = |t: f64, change: f64| -> Result<LayerRow, HarnessError> {
        let optics = base.with_mu(base.mu_solid * (1.0 + change));
        let img = render_single_layer(t, &optics)?;
        Ok(LayerRow {
            thickness: t,
            mu_solid: optics.mu_solid,
            mu_change: change,
            mean_intensity: img.mean(),
            closed_form: optics.source_intensity * (-optics.mu_solid * t).exp(),
        })
    };
    let mut rows = Vec::new();
    for &t in &lc.thicknesses {
        rows.push(measure(t, 0.0)?);
    }
    let series: Vec<f64> = rows.iter().map(|r| r.mean_intensity).collect();
    let thickness_decreasing = series.windows(2).all(|w| w[1] < w[0]);
    let min_thickness_step = series
        .windows(2)
        .map(|w| (w[0] - w[1]).abs())
        .fold(f64::INFINITY, f64::min);
    let mut max_state_shift: f64 = 0.0;
    for (i, &t) in lc.thicknesses.iter().enumerate() {
        for &c in &lc.mu_perturbations {
            let row = measure(t, c)?;
            max_state_shift = max_state_shift.max((row.mean_intensity - series[i]).abs());
            rows.push(row);
        }
    }
    let max_closed_form_error = rows
        .iter()
        .map(|r| (r.mean_intensity - r.closed_form).abs())
        .fold(0.0, f64::max);
    Ok(LayerSweepReport {
        passed: thickness_decreasing && max_state_shift < min_thickness_step,
        rows,
        thickness_decreasing,
        min_thickness_step,
        max_state_shift,
        max_closed_form_error,
    })
}

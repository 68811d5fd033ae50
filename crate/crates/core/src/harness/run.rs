use std::path::Path;

use serde::Serialize;

use super::experiments::{
    run_classify_experiment, run_layer_sweep, run_match_experiment, run_robustness_sweep,
};
use super::output::{OutputTree, RunManifest};
use super::{ExperimentConfig, ExperimentKind, HarnessError, SampleInfo};
use crate::classifier::{EpochStats, LabeledDataset};

/// Result of [`execute`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    /// Every configured assertion held.
    pub passed: bool,
    /// One line per headline number.
    pub summary: Vec<String>,
}

/// Run the configured experiment and write its output tree under `out`.
pub fn execute(
    cfg: &ExperimentConfig,
    out: &Path,
    mut on_epoch: impl FnMut(&str, &EpochStats),
) -> Result<RunOutcome, HarnessError> {
    cfg.validate()?;
    let mut tree = OutputTree::create(out)?;
    let mut summary = Vec::new();
    let passed = match cfg.kind {
        ExperimentKind::MatchMatrix => {
            let report = run_match_experiment(cfg)?;
            for (label, img) in report.matrix.ref_labels.iter().zip(&report.images) {
                tree.write_image(label, img)?;
            }
            tree.write_report("match.csv", &report.matrix.to_csv())?;
            tree.write_json("match.json", &report)?;
            let n = report.matrix.ref_labels.len();
            let diag_ok = (0..n).all(|i| report.matrix.matched[i][i] == report.matrix.total[i][i]);
            summary.push(format!("mean off-diagonal rate {:.4}", report.mean_off_diagonal));
            summary.push(format!("diagonal at 100%: {diag_ok}"));
            diag_ok
        }
        ExperimentKind::Classify => {
            let report = run_classify_experiment(cfg, &mut on_epoch)?;
            tree.mark("train");
            if let Some(ds) = &report.dataset {
                write_dataset(&mut tree, ds, &report.samples)?;
            }
            for v in [&report.clean, &report.augmented] {
                tree.write_report(&format!("trace_{}.csv", v.name), &v.trace.to_csv())?;
                tree.write(&format!("models/{}.tidm", v.name), &v.model_bytes)?;
                summary.push(format!(
                    "{}: {} train images, {} epochs, test accuracy {:.4}",
                    v.name,
                    v.train_images,
                    v.epochs,
                    v.final_accuracy()
                ));
            }
            tree.write_json("classify.json", &report)?;
            report.passed
        }
        ExperimentKind::RobustnessSweep => {
            let report = run_robustness_sweep(cfg)?;
            tree.write_report("robustness.csv", &report.to_csv())?;
            tree.write_json("robustness.json", &report)?;
            summary.push(format!("min correlation {:.5}", report.min_ncc_diffused));
            summary.push(format!("diffusion helps: {}", report.diffusion_helps));
            report.passed
        }
        ExperimentKind::LayerSweep => {
            let report = run_layer_sweep(cfg)?;
            tree.write_report("layer_sweep.csv", &report.to_csv())?;
            tree.write_json("layer_sweep.json", &report)?;
            summary.push(format!(
                "smallest thickness step {:.6}, largest attenuation shift {:.6}",
                report.min_thickness_step, report.max_state_shift
            ));
            report.passed
        }
    };
    write_status(&mut tree, passed)?;
    let manifest = tree.finish(cfg)?;
    Ok(RunOutcome {
        manifest,
        passed,
        summary,
    })
}

/// Write every dataset image and a `reports/dataset.csv` index.
pub fn write_dataset(
    tree: &mut OutputTree,
    ds: &LabeledDataset,
    samples: &[SampleInfo],
) -> Result<(), HarnessError> {
    let mut index = String::from("file,label,split,ix,iy,ir,tx,ty,rotation\n");
    for (s, img) in samples.iter().zip(&ds.images) {
        let stem = s.file_stem();
        tree.write_image(&stem, img)?;
        index += &format!(
            "images/{stem}.pgm,{},{},{},{},{},{},{},{}\n",
            s.label,
            split_name(s.split),
            s.grid[0],
            s.grid[1],
            s.grid[2],
            s.pose.translation[0],
            s.pose.translation[1],
            s.pose.rotation
        );
    }
    tree.write_report("dataset.csv", &index)?;
    tree.write_json("provenance.json", &ds.provenance)?;
    Ok(())
}

fn split_name(s: crate::classifier::Split) -> &'static str {
    match s {
        crate::classifier::Split::Train => "train",
        crate::classifier::Split::Test => "test",
    }
}

fn write_status(tree: &mut OutputTree, passed: bool) -> Result<(), HarnessError> {
    #[derive(Serialize)]
    struct Status {
        passed: bool,
    }
    tree.write_json("status.json", &Status { passed })?;
    Ok(())
}

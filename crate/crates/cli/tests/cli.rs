use std::path::Path;
use std::process::{Command, Output};

use transid_core::geometry::read_geometry_text;
use transid_core::image::read_pgm;
use transid_core::RunManifest;

const SPEC: &str = r#"{ "schema": 1, "pattern": "diamond_fill", "density": 0.1 }"#;

fn transid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transid"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("spec.json"), SPEC).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_writes_parseable_geometry() {
    let dir = workdir();
    let o = transid(dir.path(), &["gen", "--spec", "spec.json", "--seed", "3", "--out", "g.txt"]);
    assert!(o.status.success(), "{o:?}");
    let geom = read_geometry_text(&std::fs::read_to_string(dir.path().join("g.txt")).unwrap()).unwrap();
    assert_eq!(geom.layers.len(), 250);
}

#[test]
fn render_from_spec_and_scene() {
    let dir = workdir();
    let o = transid(dir.path(), &["render", "--spec", "spec.json", "--out", "a.pgm"]);
    assert!(o.status.success(), "{o:?}");
    let img = read_pgm(&dir.path().join("a.pgm")).unwrap();
    assert_eq!((img.width(), img.height()), (64, 64));

    let scene = r#"{ "spec": "spec.json", "pose": { "translation": [0.5, 0.0], "rotation": 10.0 },
                     "frame": { "width": 40, "height": 32, "pixel_pitch": 2.0 } }"#;
    std::fs::write(dir.path().join("scene.json"), scene).unwrap();
    let o = transid(dir.path(), &["render", "--scene", "scene.json", "--out", "b.png"]);
    assert!(o.status.success(), "{o:?}");
    let png = std::fs::read(dir.path().join("b.png")).unwrap();
    assert_eq!(&png[1..4], b"PNG");
}

#[test]
fn match_images_reports_full_diagonal() {
    let dir = workdir();
    for (seed, name) in [("1", "a.pgm"), ("2", "b.pgm")] {
        let o = transid(dir.path(), &["render", "--spec", "spec.json", "--seed", seed, "--out", name]);
        assert!(o.status.success());
    }
    let o = transid(dir.path(), &["match", "--refs", "a.pgm,b.pgm", "--ratio", "0.7"]);
    assert!(o.status.success(), "{o:?}");
    let csv = stdout(&o);
    assert!(csv.starts_with("ref,target,matched,total,rate\n"));
    let m = transid_core::MatchRateMatrix::from_csv(&csv).unwrap();
    assert_eq!(m.rate(0, 0), 1.0);
    assert_eq!(m.rate(1, 1), 1.0);
}

#[test]
fn layer_sweep_passes_and_is_reproducible() {
    let dir = workdir();
    for out in ["a", "b"] {
        let o = transid(dir.path(), &["sweep-layer", "--seed", "9", "--out", "run"]);
        assert!(o.status.success(), "{o:?}");
        std::fs::rename(dir.path().join("run"), dir.path().join(out)).unwrap();
    }
    let read = |d: &str| std::fs::read_to_string(dir.path().join(d).join("manifest.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    let m = RunManifest::from_json(&read("a")).unwrap();
    assert!(m.digest_of("reports/layer_sweep.csv").is_some());
}

#[test]
fn failed_assertions_exit_with_one() {
    let dir = workdir();
    let cfg = r#"{ "kind": "robustness-sweep", "specs": ["spec.json"],
                   "optics": { "diffusion_sigma": 2.0 },
                   "robustness": { "translations": [0.5], "rotations": [], "camera_offsets": [] },
                   "assertions": { "min_correlation": 0.9999 } }"#;
    std::fs::write(dir.path().join("strict.json"), cfg).unwrap();
    let o = transid(dir.path(), &["sweep-robustness", "--config", "strict.json", "--out", "s"]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");

    let lax = cfg.replace("0.9999", "0.95");
    std::fs::write(dir.path().join("lax.json"), lax).unwrap();
    let o = transid(dir.path(), &["sweep-robustness", "--config", "lax.json", "--out", "l"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
}

#[test]
fn errors_exit_with_two() {
    let dir = workdir();
    let cfg = r#"{ "kind": "layer-sweep" }"#;
    std::fs::write(dir.path().join("layer.json"), cfg).unwrap();
    let o = transid(dir.path(), &["train", "--config", "layer.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected"));
    let o = transid(dir.path(), &["gen", "--spec", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dataset_train_and_eval_round_trip() {
    let dir = workdir();
    let cfg = r#"{ "kind": "classify", "specs": ["spec.json"],
                   "dataset": { "objects_per_spec": 2, "frame": { "width": 16, "height": 16, "pixel_pitch": 4.0 },
                                "pose_grid": { "grid_extent": 1.0, "grid_step": 0.5, "rotation_step": 180.0 } },
                   "augmentation": { "rotations": [5.0], "noise": null },
                   "train": { "epochs": 2, "batch_size": 4 },
                   "assertions": { "min_accuracy": 0.0 } }"#;
    std::fs::write(dir.path().join("cls.json"), cfg).unwrap();

    let o = transid(dir.path(), &["dataset", "--config", "cls.json", "--out", "ds"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("36 images, 2 classes, 12 test"), "{}", stdout(&o));
    let index = std::fs::read_to_string(dir.path().join("ds/reports/dataset.csv")).unwrap();
    assert_eq!(index.lines().count(), 37);

    let o = transid(dir.path(), &["train", "--config", "cls.json", "--out", "tr"]);
    assert!(o.status.success(), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("clean epoch"));
    for f in ["models/clean.tidm", "models/augmented.tidm", "reports/trace_clean.csv", "reports/classify.json"] {
        assert!(dir.path().join("tr").join(f).exists(), "{f}");
    }

    let o = transid(dir.path(), &["eval", "--config", "cls.json", "--model", "tr/models/clean.tidm"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("test accuracy"));
}

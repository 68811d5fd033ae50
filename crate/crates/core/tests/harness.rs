use transid_core::classifier::Split;
use transid_core::features::MatchRateMatrix;
use transid_core::geometry::{InfillPattern, InfillSpec};
use transid_core::harness::*;
use transid_core::render::{Frame, OpticalParams};

fn cube(density: f64) -> InfillSpec {
    InfillSpec::cube(InfillPattern::DiamondFill, density)
}

fn tiny_classify(objects: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Classify).with_specs([cube(0.2)]);
    cfg.dataset.objects_per_spec = objects;
    cfg.dataset.frame = Frame::new(32, 32, 2.5);
    cfg.dataset.pose_grid = PoseGrid {
        grid_extent: 1.0,
        grid_step: 0.5,
        rotation_step: 180.0,
        rotation_offset: 0.0,
    };
    cfg
}

#[test]
fn default_grid_yields_two_hundred_poses_per_object() {
    let grid = PoseGrid::default();
    assert_eq!(grid.positions_per_axis(), 5);
    assert_eq!(grid.rotation_count(), 8);
    assert_eq!(grid.len(), 200);
    assert_eq!(grid.poses().len(), 200);
}

#[test]
fn one_object_one_pose_gives_one_image() {
    let mut cfg = tiny_classify(1);
    cfg.dataset.pose_grid = PoseGrid {
        grid_extent: 0.0,
        grid_step: 0.5,
        rotation_step: 360.0,
        rotation_offset: 0.0,
    };
    let (ds, info) = build_dataset(&cfg).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(info.len(), 1);
    assert_eq!(info[0].split, Split::Test);
}

#[test]
fn dataset_is_deterministic_and_seed_sensitive() {
    let cfg = tiny_classify(2);
    let digest = |c: &ExperimentConfig| {
        let (ds, _) = build_dataset(c).unwrap();
        ds.images
            .iter()
            .map(|i| sha256_hex(&transid_core::image::encode_pgm(i, transid_core::image::BitDepth::Sixteen)))
            .collect::<Vec<_>>()
    };
    assert_eq!(digest(&cfg), digest(&cfg));
    let mut other = cfg.clone();
    other.master_seed = 7;
    assert_ne!(digest(&cfg), digest(&other));
}

#[test]
fn split_holds_out_the_centre_column() {
    let cfg = tiny_classify(2);
    let (ds, info) = build_dataset(&cfg).unwrap();
    ds.validate().unwrap();
    for s in &info {
        assert_eq!(s.split == Split::Test, s.grid[0] == 1, "{s:?}");
    }
    // Each class is seen in both splits.
    assert_eq!(ds.indices(Split::Test).len(), 2 * 3 * 2);
}

#[test]
fn single_class_classification_is_rejected() {
    let cfg = tiny_classify(1);
    assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
    let (ds, _) = build_dataset(&cfg).unwrap();
    assert!(ds.validate().is_err());
}

#[test]
fn empty_thickness_list_is_rejected() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::LayerSweep);
    cfg.layer_sweep.thicknesses.clear();
    assert!(cfg.validate().is_err());
    assert!(run_layer_sweep(&cfg).is_err());
}

#[test]
fn config_round_trips_through_json_and_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.json"), cube(0.1).to_json()).unwrap();
    let text = r#"{ "kind": "match-matrix", "specs": ["a.json", "a.json"], "master_seed": 3 }"#;
    std::fs::write(dir.path().join("cfg.json"), text).unwrap();
    let cfg = ExperimentConfig::load(&dir.path().join("cfg.json")).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.load_specs().unwrap()[0], cube(0.1));
    let resolved = cfg.resolved().unwrap();
    assert_eq!(ExperimentConfig::from_json(&resolved.to_json()).unwrap(), resolved);
    assert!(ExperimentConfig::from_json(r#"{ "kind": "match-matrix", "bogus": 1 }"#).is_err());
}

#[test]
fn missing_spec_file_is_an_error() {
    let cfg = ExperimentConfig::from_json(r#"{ "kind": "layer-sweep", "specs": ["/nonexistent/x.json"] }"#)
        .unwrap();
    assert!(cfg.validate().is_err());
}

#[test]
fn duplicate_object_matches_like_the_diagonal() {
    let spec = cube(0.2).with_seed(11);
    let specs = vec![("a".to_string(), spec.clone()), ("b".to_string(), spec)];
    let r = match_specs(&specs, &OpticalParams::default(), &MatchConfig::default()).unwrap();
    let m = &r.matrix;
    assert!(m.total[0][0] > 50);
    assert_eq!(m.matched[0][1], m.matched[0][0]);
    assert_eq!(m.matched[1][0], m.matched[1][1]);
    assert_eq!(MatchRateMatrix::from_csv(&m.to_csv()).unwrap(), *m);
}

#[test]
fn far_densities_match_less_than_near_ones() {
    for seed in 0..3 {
        let r = run_match_block(MatchBlock::Density, seed, &OpticalParams::default(), &MatchConfig::default())
            .unwrap();
        let m = &r.matrix;
        let sym = |i, j| (m.rate(i, j) + m.rate(j, i)) / 2.0;
        let far = sym(0, 2);
        let near = (sym(0, 1) + sym(1, 2)) / 2.0;
        assert!(far < near, "seed {seed}: far {far} near {near}");
    }
}

#[test]
fn same_spec_objects_sit_between_cross_pattern_and_diagonal() {
    let cfg = MatchConfig::default();
    let optics = OpticalParams::default();
    let pattern = run_match_block(MatchBlock::Pattern, 0, &optics, &cfg).unwrap();
    let same = run_match_block(MatchBlock::SameSpec, 0, &optics, &cfg).unwrap();
    assert!(pattern.mean_off_diagonal < same.mean_off_diagonal);
    assert!(same.mean_off_diagonal < 1.0);
    for i in 0..3 {
        assert_eq!(same.matrix.rate(i, i), 1.0);
    }
}

fn robustness_cfg() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::RobustnessSweep).with_specs([cube(0.1)]);
    cfg.optics.diffusion_sigma = 2.0;
    cfg
}

#[test]
fn zero_displacement_correlates_perfectly() {
    let mut cfg = robustness_cfg();
    cfg.robustness.translations = vec![0.0];
    cfg.robustness.rotations = vec![0.0];
    cfg.robustness.camera_offsets = vec![];
    let r = run_robustness_sweep(&cfg).unwrap();
    for row in &r.rows {
        assert!((row.ncc_diffused - 1.0).abs() < 1e-12);
        assert!(!row.visible);
    }
}

#[test]
fn half_millimetre_moves_keep_correlation_high() {
    let r = run_robustness_sweep(&robustness_cfg()).unwrap();
    assert!(r.min_ncc_translation > 0.95, "{}", r.min_ncc_translation);
    assert!(r.diffusion_helps, "{:#?}", r.rows);
    // Stage y runs along the rays.
    for row in r.rows.iter().filter(|r| r.kind == Displacement::TranslateY) {
        assert!(!row.visible);
        assert!((row.ncc_diffused - 1.0).abs() < 1e-9);
    }
}

#[test]
fn robustness_needs_diffusion_and_one_spec() {
    let mut cfg = robustness_cfg();
    cfg.optics.diffusion_sigma = 0.0;
    assert!(run_robustness_sweep(&cfg).is_err());
    let cfg = robustness_cfg().with_specs([cube(0.1), cube(0.2)]);
    assert!(run_robustness_sweep(&cfg).is_err());
}

#[test]
fn layer_sweep_matches_closed_form() {
    let cfg = ExperimentConfig::new(ExperimentKind::LayerSweep);
    let r = run_layer_sweep(&cfg).unwrap();
    assert!(r.thickness_decreasing);
    assert!(r.max_closed_form_error < 1e-9);
    // ±5% of μ at 0.4 mm against the 0.1 → 0.2 mm step.
    let mu = cfg.optics.mu_solid;
    let shift = (-mu * 0.4).exp() - (-1.05 * mu * 0.4).exp();
    let step = (-mu * 0.1).exp() - (-mu * 0.2).exp();
    assert!(shift < step);
    assert!(r.max_state_shift < r.min_thickness_step);
    assert!(r.passed);
    assert_eq!(r.rows.len(), 4 + 4 * 2);
}

#[test]
fn reruns_reproduce_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::MatchMatrix).with_specs([cube(0.1), cube(0.3)]);
    cfg.matching.frame = Frame::new(160, 160, 0.5);
    let a = execute(&cfg, &dir.path().join("a"), |_, _| {}).unwrap();
    let b = execute(&cfg, &dir.path().join("b"), |_, _| {}).unwrap();
    assert!(a.passed);
    assert_eq!(a.manifest.to_json(), b.manifest.to_json());
    for f in ["config.json", "reports/match.csv", "reports/match.json", "reports/status.json"] {
        assert!(a.manifest.digest_of(f).is_some(), "{f}");
    }
    let written = std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap();
    assert_eq!(RunManifest::from_json(&written).unwrap(), a.manifest);

    // The written config reproduces the run.
    let again = ExperimentConfig::load(&dir.path().join("a/config.json")).unwrap();
    let c = execute(&again, &dir.path().join("c"), |_, _| {}).unwrap();
    assert_eq!(c.manifest.to_json(), a.manifest.to_json());

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/reports/match.json")).unwrap()).unwrap();
    assert!(json["matrix"]["matched"].is_array());
}

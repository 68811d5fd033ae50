use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use transid_core::classifier::{evaluate_split, ClassifierModel, Split};
use transid_core::features::{extract_features, match_rates};
use transid_core::geometry::{generate_infill, write_geometry_text, InfillSpec, Pose};
use transid_core::harness::{
    build_dataset, execute, run_match_block, write_dataset, ExperimentConfig, ExperimentKind,
    MatchBlock, OutputTree, SpecSource,
};
use transid_core::image::{read_pgm, write_pgm, write_png, BitDepth};
use transid_core::render::{render, Frame, OpticalParams};

#[derive(Parser)]
#[command(name = "transid", version, about = "Transmission-image identification of printed infill")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spec file(s), replacing the config's specs.
    #[arg(long)]
    spec: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate infill geometry and write it as text.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        /// Error seed, overriding the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render one transmission image (PGM, or PNG by extension).
    Render {
        /// Scene JSON with `spec`, `pose`, `optics` and `frame`.
        #[arg(long, conflicts_with = "spec")]
        scene: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Match images, a config's specs, or the four reference blocks.
    Match {
        /// Reference images (PGM).
        #[arg(long, value_delimiter = ',')]
        refs: Vec<PathBuf>,
        /// Target images (PGM); the references when omitted.
        #[arg(long, value_delimiter = ',')]
        targets: Vec<PathBuf>,
        #[arg(long)]
        ratio: Option<f64>,
        /// Run the pattern, density, position and same-spec blocks.
        #[arg(long)]
        table: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Render a labelled dataset.
    Dataset {
        #[command(flatten)]
        common: Common,
    },
    /// Build the dataset and train the clean and augmented classifiers.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a saved model on the config's test split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Correlation of displaced renders against the rest pose.
    SweepRobustness {
        #[command(flatten)]
        common: Common,
    },
    /// Single-layer intensity against thickness and attenuation.
    SweepLayer {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Scene {
    spec: SpecSource,
    #[serde(default)]
    pose: Pose,
    #[serde(default)]
    optics: OpticalParams,
    #[serde(default = "default_frame")]
    frame: Frame,
}

fn default_frame() -> Frame {
    Frame::new(64, 64, 1.25)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("assertions failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { spec, seed, out } => {
            let spec = load_spec(&spec, seed)?;
            let geom = generate_infill(&spec)?;
            let text = write_geometry_text(&geom);
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| path.display().to_string())?,
                None => print!("{text}"),
            }
            eprintln!("{} layers, {} struts", geom.layers.len(), geom.strut_count());
            Ok(true)
        }
        Command::Render {
            scene,
            spec,
            seed,
            out,
        } => {
            let scene = match (scene, spec) {
                (Some(path), _) => {
                    let text = read(&path)?;
                    let mut s: Scene = serde_json::from_str(&text).with_context(|| path.display().to_string())?;
                    if let (SpecSource::File(p), Some(dir)) = (&mut s.spec, path.parent()) {
                        *p = dir.join(&*p);
                    }
                    s
                }
                (None, Some(path)) => Scene {
                    spec: SpecSource::File(path),
                    pose: Pose::identity(),
                    optics: OpticalParams::default(),
                    frame: default_frame(),
                },
                (None, None) => bail!("render needs --scene or --spec"),
            };
            let mut spec = scene.spec.load(None)?;
            if let Some(s) = seed {
                spec = spec.with_seed(s);
            }
            let img = render(&generate_infill(&spec)?, &scene.optics, &scene.pose, &scene.frame)?;
            if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
                write_png(&out, &img, BitDepth::Sixteen)?;
            } else {
                write_pgm(&out, &img, BitDepth::Sixteen)?;
            }
            eprintln!("mean transmission {:.6}", img.mean());
            Ok(true)
        }
        Command::Match {
            refs,
            targets,
            ratio,
            table,
            common,
        } => {
            if !refs.is_empty() {
                return match_files(&refs, &targets, ratio, &common);
            }
            let mut cfg = experiment(&common, ExperimentKind::MatchMatrix)?;
            if let Some(r) = ratio {
                cfg.matching.ratio = r;
            }
            if table {
                return match_table(&cfg);
            }
            report(execute(&cfg, &cfg.output_dir, |_, _| {})?)
        }
        Command::Dataset { common } => {
            let cfg = experiment(&common, ExperimentKind::Classify)?;
            cfg.validate()?;
            let (ds, samples) = build_dataset(&cfg)?;
            let mut tree = OutputTree::create(&cfg.output_dir)?;
            write_dataset(&mut tree, &ds, &samples)?;
            tree.finish(&cfg)?;
            println!(
                "{} images, {} classes, {} test",
                ds.len(),
                ds.num_classes,
                ds.indices(Split::Test).len()
            );
            Ok(true)
        }
        Command::Train { common } => {
            let cfg = experiment(&common, ExperimentKind::Classify)?;
            let outcome = execute(&cfg, &cfg.output_dir, |variant, s| {
                eprintln!(
                    "{variant} epoch {:3}  loss {:.4}  train {:.3}  test {:.3}",
                    s.epoch, s.train_loss, s.train_acc, s.test_acc
                );
            })?;
            report(outcome)
        }
        Command::Eval { model, common } => {
            let cfg = experiment(&common, ExperimentKind::Classify)?;
            let bytes = std::fs::read(&model).with_context(|| model.display().to_string())?;
            let model = ClassifierModel::read_from(bytes.as_slice())?;
            let (ds, _) = build_dataset(&cfg)?;
            let eval = evaluate_split(&model, &ds, Split::Test)?;
            println!("test accuracy {:.4}", eval.accuracy);
            for row in &eval.confusion {
                println!("{}", row.iter().map(|c| format!("{c:4}")).collect::<String>());
            }
            Ok(eval.accuracy >= cfg.assertions.min_accuracy)
        }
        Command::SweepRobustness { common } => {
            let cfg = experiment(&common, ExperimentKind::RobustnessSweep)?;
            report(execute(&cfg, &cfg.output_dir, |_, _| {})?)
        }
        Command::SweepLayer { common } => {
            let cfg = experiment(&common, ExperimentKind::LayerSweep)?;
            report(execute(&cfg, &cfg.output_dir, |_, _| {})?)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| path.display().to_string())
}

fn load_spec(path: &Path, seed: Option<u64>) -> Result<InfillSpec> {
    let spec = InfillSpec::from_json(&read(path)?).with_context(|| path.display().to_string())?;
    Ok(match seed {
        Some(s) => spec.with_seed(s),
        None => spec,
    })
}

/// The config for `kind`, with command-line overrides applied.
fn experiment(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(kind),
    };
    if cfg.kind != kind {
        bail!("config is a {:?} experiment, expected {:?}", cfg.kind, kind);
    }
    if !common.spec.is_empty() {
        cfg.specs = common.spec.iter().cloned().map(SpecSource::File).collect();
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn report(outcome: transid_core::harness::RunOutcome) -> Result<bool> {
    for line in &outcome.summary {
        println!("{line}");
    }
    Ok(outcome.passed)
}

fn match_files(refs: &[PathBuf], targets: &[PathBuf], ratio: Option<f64>, common: &Common) -> Result<bool> {
    let cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(ExperimentKind::MatchMatrix),
    };
    let features = |paths: &[PathBuf]| -> Result<Vec<_>> {
        paths
            .iter()
            .map(|p| {
                let img = read_pgm(p).with_context(|| p.display().to_string())?;
                let label = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                Ok((label, extract_features(&img, &cfg.matching.detector)))
            })
            .collect()
    };
    let r = features(refs)?;
    let t = if targets.is_empty() { r.clone() } else { features(targets)? };
    let m = match_rates(&r, &t, ratio.unwrap_or(cfg.matching.ratio));
    match &common.out {
        Some(path) => std::fs::write(path, m.to_csv()).with_context(|| path.display().to_string())?,
        None => print!("{}", m.to_csv()),
    }
    Ok(true)
}

fn match_table(cfg: &ExperimentConfig) -> Result<bool> {
    let mut tree = OutputTree::create(&cfg.output_dir)?;
    let mut diagonal = true;
    for block in MatchBlock::ALL {
        let r = run_match_block(block, cfg.master_seed, &cfg.optics, &cfg.matching)?;
        let m = &r.matrix;
        diagonal &= (0..m.matched.len()).all(|i| m.matched[i][i] == m.total[i][i]);
        tree.write_report(&format!("table_{}.csv", block.name()), &m.to_csv())?;
        println!("{:10} mean off-diagonal {:.4}", block.name(), r.mean_off_diagonal);
        for (i, label) in m.ref_labels.iter().enumerate() {
            let cells: Vec<String> = (0..m.target_labels.len())
                .map(|j| format!("{:>4}/{:<4}", m.matched[i][j], m.total[i][j]))
                .collect();
            println!("  {label:12} {}", cells.join(" "));
        }
    }
    tree.finish(cfg)?;
    Ok(diagonal)
}

use serde::{Deserialize, Serialize};

use super::model::argmax;
use super::{ClassifierError, ClassifierModel, LabeledDataset, Split};
use crate::rng::{domain, fan_out, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ClassifierError::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(ClassifierError::InvalidConfig("batch size must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ClassifierError::InvalidConfig(format!(
                "momentum {} must lie in [0, 1)",
                self.momentum
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

/// Per-epoch learning progress.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTrace {
    pub epochs: Vec<EpochStats>,
}

impl AccuracyTrace {
    pub fn final_test_accuracy(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.test_acc)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,test_acc\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.train_acc, e.test_acc));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ClassifierError> {
        let bad = |m: String| ClassifierError::Format(m);
        let mut lines = text.lines();
        if lines.next() != Some("epoch,train_loss,train_acc,test_acc") {
            return Err(bad("missing trace header".into()));
        }
        let mut epochs = Vec::new();
        for (i, line) in lines.filter(|l| !l.is_empty()).enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(format!("trace row {} has {} fields", i + 1, f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
            epochs.push(EpochStats {
                epoch: f[0].parse().map_err(|_| bad(format!("bad epoch `{}`", f[0])))?,
                train_loss: num(f[1])?,
                train_acc: num(f[2])?,
                test_acc: num(f[3])?,
            });
        }
        Ok(Self { epochs })
    }
}

/// Accuracy and confusion counts (`confusion[true][predicted]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
}

/// Evaluate on the samples at `indices`.
pub fn evaluate(
    model: &ClassifierModel,
    dataset: &LabeledDataset,
    indices: &[usize],
) -> Result<Evaluation, ClassifierError> {
    let k = model.config.num_classes;
    let mut confusion = vec![vec![0usize; k]; k];
    for &i in indices {
        let c = model.forward_sample(dataset.images[i].data())?;
        confusion[dataset.labels[i]][argmax(&c.probs)] += 1;
    }
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    Ok(Evaluation {
        accuracy: if indices.is_empty() {
            0.0
        } else {
            correct as f64 / indices.len() as f64
        },
        confusion,
    })
}

pub fn evaluate_split(
    model: &ClassifierModel,
    dataset: &LabeledDataset,
    split: Split,
) -> Result<Evaluation, ClassifierError> {
    evaluate(model, dataset, &dataset.indices(split))
}

/// Mini-batch SGD with heavy-ball momentum (`v ← μv + g`, `θ ← θ − ηv`).
/// The training order is reshuffled every epoch from `cfg.seed`.
pub fn train(
    mut model: ClassifierModel,
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(ClassifierModel, AccuracyTrace), ClassifierError> {
    train_with_progress(&mut model, dataset, cfg, |_| {}).map(|t| (model, t))
}

pub fn train_with_progress(
    model: &mut ClassifierModel,
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<AccuracyTrace, ClassifierError> {
    cfg.validate()?;
    dataset.validate()?;
    if dataset.num_classes != model.config.num_classes {
        return Err(ClassifierError::InvalidConfig(format!(
            "dataset has {} classes, model {}",
            dataset.num_classes, model.config.num_classes
        )));
    }
    let mut order = dataset.indices(Split::Train);
    let test = dataset.indices(Split::Test);
    let mut grads = model.zeros_like();
    let mut velocity = model.zeros_like();
    let mut trace = AccuracyTrace::default();
    for epoch in 0..cfg.epochs {
        Stream::new(fan_out(cfg.seed, domain::SHUFFLE, epoch as u64)).shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let images: Vec<&[f64]> = batch.iter().map(|&i| dataset.images[i].data()).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| dataset.labels[i]).collect();
            let (loss, ok) = model.loss_and_gradients(&images, &labels, &mut grads)?;
            if !loss.is_finite() {
                return Err(ClassifierError::Diverged { epoch, batch: b });
            }
            loss_sum += loss * batch.len() as f64;
            correct += ok;
            velocity.scale(cfg.momentum);
            velocity.axpy(1.0, &grads);
            model.axpy(-cfg.learning_rate, &velocity);
        }
        if model.params.iter().any(|t| t.data().iter().any(|v| !v.is_finite())) {
            return Err(ClassifierError::Diverged {
                epoch,
                batch: order.len().div_ceil(cfg.batch_size),
            });
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            train_loss: loss_sum / order.len() as f64,
            train_acc: correct as f64 / order.len() as f64,
            test_acc: evaluate(model, dataset, &test)?.accuracy,
        };
        on_epoch(&stats);
        trace.epochs.push(stats);
    }
    Ok(trace)
}

use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::image::TransmissionImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Where a dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    /// One id per class, in label order.
    pub spec_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<TransmissionImage>,
    pub labels: Vec<usize>,
    pub split: Vec<Split>,
    pub num_classes: usize,
    pub provenance: Provenance,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == which).collect()
    }

    /// Every class must appear in both splits.
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: String| Err(ClassifierError::InvalidDataset(m));
        if self.num_classes < 2 {
            return bad(format!("{} class(es); need at least 2", self.num_classes));
        }
        if self.labels.len() != self.images.len() || self.split.len() != self.images.len() {
            return bad("images, labels and split differ in length".into());
        }
        let mut seen = vec![[false; 2]; self.num_classes];
        for (&y, &s) in self.labels.iter().zip(&self.split) {
            if y >= self.num_classes {
                return bad(format!("label {y} ≥ {} classes", self.num_classes));
            }
            seen[y][s as usize] = true;
        }
        if let Some(c) = seen.iter().position(|s| !(s[0] && s[1])) {
            return bad(format!("class {c} lacks a train or test sample"));
        }
        Ok(())
    }

    /// Copy with train images expanded by `f`; test images are kept as is.
    pub fn map_train(&self, mut f: impl FnMut(usize, &TransmissionImage) -> Vec<TransmissionImage>) -> Self {
        let mut out = Self {
            images: Vec::new(),
            labels: Vec::new(),
            split: Vec::new(),
            num_classes: self.num_classes,
            provenance: self.provenance.clone(),
        };
        for i in 0..self.len() {
            let imgs = match self.split[i] {
                Split::Train => f(i, &self.images[i]),
                Split::Test => vec![self.images[i].clone()],
            };
            for img in imgs {
                out.images.push(img);
                out.labels.push(self.labels[i]);
                out.split.push(self.split[i]);
            }
        }
        out
    }
}

//! Upright 64-d descriptors from Haar wavelet responses.

use super::{IntegralImage, Keypoint};
use crate::image::TransmissionImage;

pub const DESCRIPTOR_LEN: usize = 64;
/// Samples per side of the descriptor window (20 sample steps of `scale`).
const GRID: usize = 20;
/// Gaussian weight σ in sample steps.
const WEIGHT_SIGMA: f64 = 3.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptor(pub [f64; DESCRIPTOR_LEN]);

impl Descriptor {
    pub fn distance_squared(&self, other: &Descriptor) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, other: &Descriptor) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Keypoints with their descriptors, index-aligned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSet {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

#[inline]
fn haar_x(ii: &IntegralImage, row: isize, col: isize, s: isize) -> f64 {
    ii.box_sum(row - s / 2, col, s, s / 2) - ii.box_sum(row - s / 2, col - s / 2, s, s / 2)
}

#[inline]
fn haar_y(ii: &IntegralImage, row: isize, col: isize, s: isize) -> f64 {
    ii.box_sum(row, col - s / 2, s / 2, s) - ii.box_sum(row - s / 2, col - s / 2, s / 2, s)
}

/// Describe one keypoint; `None` for a flat patch.
pub fn describe_one(ii: &IntegralImage, kp: &Keypoint) -> Option<Descriptor> {
    let s = kp.scale;
    let cx = kp.x.round() as isize;
    let cy = kp.y.round() as isize;
    let haar = (2 * s.round() as isize).max(2);
    let mut d = [0.0; DESCRIPTOR_LEN];
    let half = GRID as f64 / 2.0 - 0.5;
    for i in 0..GRID {
        let oy = i as f64 - half;
        let row = cy + (oy * s).round() as isize;
        for j in 0..GRID {
            let ox = j as f64 - half;
            let col = cx + (ox * s).round() as isize;
            let w = (-(ox * ox + oy * oy) / (2.0 * WEIGHT_SIGMA * WEIGHT_SIGMA)).exp();
            let rx = w * haar_x(ii, row, col, haar);
            let ry = w * haar_y(ii, row, col, haar);
            let k = ((i / 5) * 4 + j / 5) * 4;
            d[k] += rx;
            d[k + 1] += rx.abs();
            d[k + 2] += ry;
            d[k + 3] += ry.abs();
        }
    }
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    // Below this the responses are rounding residue of a constant patch.
    if norm <= 1e-9 * (haar * haar) as f64 {
        return None;
    }
    d.iter_mut().for_each(|v| *v /= norm);
    Some(Descriptor(d))
}

/// Describe `keypoints`, dropping those on flat patches.
pub fn describe(img: &TransmissionImage, keypoints: &[Keypoint]) -> FeatureSet {
    describe_in(&IntegralImage::new(img), keypoints)
}

pub fn describe_in(ii: &IntegralImage, keypoints: &[Keypoint]) -> FeatureSet {
    let mut set = FeatureSet::default();
    for kp in keypoints {
        if let Some(d) = describe_one(ii, kp) {
            set.keypoints.push(*kp);
            set.descriptors.push(d);
        }
    }
    set
}

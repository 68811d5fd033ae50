use serde::{Deserialize, Serialize};

use crate::image::TransmissionImage;
use crate::rng::Stream;

/// Additive i.i.d. Gaussian sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation in normalized intensity units.
    pub gaussian_sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(gaussian_sigma: f64, seed: u64) -> Self {
        Self {
            gaussian_sigma,
            seed,
        }
    }
}

/// Add `N(0, σ²)` to every pixel in row-major order and clamp into `[0, 1]`.
pub fn add_noise(img: &TransmissionImage, noise: &NoiseModel) -> TransmissionImage {
    if noise.gaussian_sigma <= 0.0 {
        return img.clone();
    }
    let mut rng = Stream::new(noise.seed);
    let data = img
        .data()
        .iter()
        .map(|&v| v + noise.gaussian_sigma * rng.next_gaussian())
        .collect();
    img.with_data(data)
}

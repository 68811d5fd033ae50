use serde::{Deserialize, Serialize};

use crate::image::TransmissionImage;
use crate::render::{add_noise, NoiseModel};

/// Rotations (degrees) and an optional noise pass applied to each input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSpec {
    pub rotations: Vec<f64>,
    pub noise: Option<NoiseModel>,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            rotations: vec![5.0, 10.0, 15.0],
            noise: Some(NoiseModel::new(0.01, 0)),
        }
    }
}

impl AugmentSpec {
    pub fn none() -> Self {
        Self {
            rotations: Vec::new(),
            noise: None,
        }
    }

    /// Images produced per input: the original, one per nonzero rotation and
    /// one noisy copy.
    pub fn expansion(&self) -> usize {
        1 + self.rotations.iter().filter(|&&r| r != 0.0).count() + usize::from(self.noise.is_some())
    }
}

/// Bilinear rotation by `degrees` (counter-clockwise on screen) about the
/// image centre; samples outside the image take the nearest edge value.
pub fn rotate_bilinear(img: &TransmissionImage, degrees: f64) -> TransmissionImage {
    let (w, h) = (img.width(), img.height());
    let (s, c) = degrees.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let data = img.data();
    TransmissionImage::from_fn(w, h, img.pixel_pitch(), |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        // Inverse map; y grows downwards, so screen CCW is clockwise here.
        let sx = (cx + c * dx - s * dy).clamp(0.0, w as f64 - 1.0);
        let sy = (cy + s * dx + c * dy).clamp(0.0, h as f64 - 1.0);
        let x0 = (sx.floor() as usize).min(w - 1);
        let y0 = (sy.floor() as usize).min(h - 1);
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fx = sx - x0 as f64;
        let fy = sy - y0 as f64;
        let at = |xx: usize, yy: usize| data[yy * w + xx];
        (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0))
            + fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1))
    })
}

/// Expand one image per [`AugmentSpec::expansion`], in the order original,
/// rotations, noise.
pub fn augment(img: &TransmissionImage, spec: &AugmentSpec) -> Vec<TransmissionImage> {
    let mut out = vec![img.clone()];
    for &r in &spec.rotations {
        if r != 0.0 {
            out.push(rotate_bilinear(img, r));
        }
    }
    if let Some(noise) = &spec.noise {
        out.push(add_noise(img, noise));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::normalized_cross_correlation;

    fn pattern() -> TransmissionImage {
        TransmissionImage::from_fn(48, 48, 1.0, |x, y| {
            let (x, y) = (x as f64, y as f64);
            0.5 + 0.2 * (x / 5.0).sin() * (y / 7.0).cos() + 0.1 * ((x + y) / 9.0).sin()
        })
    }

    #[test]
    fn identity_cases() {
        let img = pattern();
        let spec = AugmentSpec {
            rotations: vec![0.0],
            noise: None,
        };
        assert_eq!(augment(&img, &spec), vec![img.clone()]);
        let r = rotate_bilinear(&img, 0.0);
        for (a, b) in r.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn expansion_count() {
        let spec = AugmentSpec::default();
        assert_eq!(spec.expansion(), 5);
        assert_eq!(augment(&pattern(), &spec).len(), 5);
    }

    #[test]
    fn quarter_turn_moves_pixels() {
        let img = TransmissionImage::from_fn(5, 5, 1.0, |x, y| if (x, y) == (4, 2) { 1.0 } else { 0.0 });
        let r = rotate_bilinear(&img, 90.0);
        // Counter-clockwise on screen: the right-middle pixel moves to the top.
        assert!((r.get(2, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotate_and_back_keeps_correlation() {
        let img = pattern();
        let back = rotate_bilinear(&rotate_bilinear(&img, 5.0), -5.0);
        assert!(normalized_cross_correlation(&img, &back) > 0.98);
    }
}

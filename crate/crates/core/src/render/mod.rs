//! Transmission rendering.
//!
//! One orthographic ray per pixel runs parallel to +Y through the posed part.
//! The image plane is world XZ: column `u` looks along the ray at
//! `x = X/2 + (u + ½ − W/2)·pitch`, row `v` at `z = Z/2 + (H/2 − v − ½)·pitch`
//! (row 0 on top), so the frame is centred on the part's rest position and
//! does not move with the pose. Each pixel is
//! `I₀ · exp(−μ_solid·L_solid − μ_air·L_air)`, after which internal
//! scattering is modelled by a normalized Gaussian PSF with mirrored edges.

mod noise;
mod psf;
mod trace;

pub use noise::{add_noise, NoiseModel};
pub use psf::gaussian_blur;
pub use trace::path_length;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{transform, Pose, SliceGeometry};
use crate::image::TransmissionImage;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("invalid optics: {0}")]
    InvalidOptics(String),
    #[error("invalid image parameters: {0}")]
    InvalidFrame(String),
    #[error("footprint too small: posed part spans x {x_range:?} z {z_range:?} mm but the frame covers x {frame_x:?} z {frame_z:?}")]
    FootprintTooSmall {
        x_range: (f64, f64),
        z_range: (f64, f64),
        frame_x: (f64, f64),
        frame_z: (f64, f64),
    },
}

/// Attenuation and scattering constants of the material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticalParams {
    /// Attenuation per mm inside material.
    pub mu_solid: f64,
    /// Attenuation per mm of air enclosed by the part.
    pub mu_air: f64,
    /// Standard deviation of the scattering PSF in pixels (0 disables it).
    pub diffusion_sigma: f64,
    pub source_intensity: f64,
}

impl Default for OpticalParams {
    fn default() -> Self {
        Self {
            mu_solid: 0.08,
            mu_air: 0.0,
            diffusion_sigma: 1.0,
            source_intensity: 1.0,
        }
    }
}

impl OpticalParams {
    pub fn with_mu(mut self, mu_solid: f64) -> Self {
        self.mu_solid = mu_solid;
        self
    }

    pub fn with_diffusion(mut self, sigma: f64) -> Self {
        self.diffusion_sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::InvalidOptics(m));
        if !(self.mu_air.is_finite() && self.mu_air >= 0.0) {
            return bad(format!("mu_air {} must be ≥ 0", self.mu_air));
        }
        // mu_solid = 0 is allowed as the transparent limit.
        if !(self.mu_solid.is_finite() && (self.mu_solid > self.mu_air || self.mu_solid == 0.0)) {
            return bad(format!("mu_solid {} must exceed mu_air {}", self.mu_solid, self.mu_air));
        }
        if !(self.diffusion_sigma.is_finite() && self.diffusion_sigma >= 0.0) {
            return bad(format!("diffusion_sigma {} must be ≥ 0", self.diffusion_sigma));
        }
        if !(self.source_intensity.is_finite() && self.source_intensity >= 0.0) {
            return bad(format!("source_intensity {} must be ≥ 0", self.source_intensity));
        }
        Ok(())
    }

    /// Beer–Lambert transmission for the given path lengths, clamped to `[0, 1]`.
    #[inline]
    pub fn transmit(&self, solid_mm: f64, air_mm: f64) -> f64 {
        (self.source_intensity * (-self.mu_solid * solid_mm - self.mu_air * air_mm).exp())
            .clamp(0.0, 1.0)
    }
}

/// Image size and sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// Millimetres per pixel.
    pub pixel_pitch: f64,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixel_pitch: f64) -> Self {
        Self {
            width,
            height,
            pixel_pitch,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidFrame("empty frame".into()));
        }
        if !(self.pixel_pitch.is_finite() && self.pixel_pitch > 0.0) {
            return Err(RenderError::InvalidFrame(format!("pixel pitch {}", self.pixel_pitch)));
        }
        Ok(())
    }

    /// World `x` of the ray through column `u` for a part of extent `size`.
    pub fn ray_x(&self, size: [f64; 3], u: usize) -> f64 {
        0.5 * size[0] + (u as f64 + 0.5 - 0.5 * self.width as f64) * self.pixel_pitch
    }

    /// World `z` of the ray through row `v`.
    pub fn ray_z(&self, size: [f64; 3], v: usize) -> f64 {
        0.5 * size[2] + (0.5 * self.height as f64 - v as f64 - 0.5) * self.pixel_pitch
    }

    fn extent(&self, size: [f64; 3]) -> ((f64, f64), (f64, f64)) {
        let hx = 0.5 * self.width as f64 * self.pixel_pitch;
        let hz = 0.5 * self.height as f64 * self.pixel_pitch;
        (
            (0.5 * size[0] - hx, 0.5 * size[0] + hx),
            (0.5 * size[2] - hz, 0.5 * size[2] + hz),
        )
    }
}

/// Render `geom` placed at `pose`.
///
/// Equivalent to rendering `transform(geom, pose)` at the identity pose,
/// pixel for pixel.
pub fn render(
    geom: &SliceGeometry,
    optics: &OpticalParams,
    pose: &Pose,
    frame: &Frame,
) -> Result<TransmissionImage, RenderError> {
    optics.validate()?;
    frame.validate()?;
    let posed = transform(geom, pose);
    let attenuation = attenuation_image(&posed, optics, frame)?;
    let data = if optics.diffusion_sigma > 0.0 {
        gaussian_blur(&attenuation, frame.width, frame.height, optics.diffusion_sigma)
    } else {
        attenuation
    };
    Ok(to_image(frame.width, frame.height, frame.pixel_pitch, data))
}

/// Per-pixel Beer–Lambert intensities before the PSF.
pub fn attenuation_image(
    posed: &SliceGeometry,
    optics: &OpticalParams,
    frame: &Frame,
) -> Result<Vec<f64>, RenderError> {
    let size = posed.shell.size;
    let (frame_x, frame_z) = frame.extent(size);
    let xs = posed.shell.outer.iter().map(|p| p[0]);
    let x_range = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let z_range = (0.0, size[2]);
    if x_range.0 < frame_x.0 || x_range.1 > frame_x.1 || z_range.0 < frame_z.0 || z_range.1 > frame_z.1 {
        return Err(RenderError::FootprintTooSmall {
            x_range,
            z_range,
            frame_x,
            frame_z,
        });
    }
    let mut data = Vec::with_capacity(frame.width * frame.height);
    for v in 0..frame.height {
        let z = frame.ray_z(size, v);
        for u in 0..frame.width {
            let (solid, air) = trace::ray_lengths(posed, frame.ray_x(size, u), z);
            data.push(optics.transmit(solid, air));
        }
    }
    Ok(data)
}

/// Transmission through a flat sheet of `thickness` mm filling a 32×32
/// frame at 1 mm pitch. Every pixel equals `I₀·exp(−μ_solid·thickness)`.
pub fn render_single_layer(
    thickness: f64,
    optics: &OpticalParams,
) -> Result<TransmissionImage, RenderError> {
    optics.validate()?;
    if !(thickness.is_finite() && thickness > 0.0) {
        return Err(RenderError::InvalidFrame(format!("sheet thickness {thickness}")));
    }
    let (w, h) = (32, 32);
    let value = optics.transmit(thickness, 0.0);
    // A uniform field is a fixed point of the mirrored-edge PSF.
    Ok(to_image(w, h, 1.0, vec![value; w * h]))
}

fn to_image(width: usize, height: usize, pitch: f64, data: Vec<f64>) -> TransmissionImage {
    let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    TransmissionImage::new(width, height, pitch, data).expect("frame was validated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_infill, nominal_infill, InfillPattern, InfillSpec, Layer, Shell};

    fn slab(thickness_y: f64) -> SliceGeometry {
        // A box whose shell is thicker than half its depth is solid through.
        let shell = Shell::new([40.0, thickness_y, 40.0], 0.5 * thickness_y + 1.0);
        SliceGeometry {
            layers: vec![Layer {
                z_low: 0.0,
                z_high: 40.0,
                struts: Vec::new(),
            }],
            shell,
        }
    }

    fn small_cube(pattern: InfillPattern, density: f64) -> SliceGeometry {
        nominal_infill(&InfillSpec::cube(pattern, density).with_size([20.0, 20.0, 20.0])).unwrap()
    }

    #[test]
    fn transparent_material_gives_white_image() {
        let g = small_cube(InfillPattern::DiamondFill, 0.3);
        let optics = OpticalParams::default().with_mu(0.0);
        let img = render(&g, &optics, &Pose::identity(), &Frame::new(24, 24, 1.0)).unwrap();
        assert!(img.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn solid_slab_closed_form() {
        let g = slab(50.0);
        let optics = OpticalParams::default().with_mu(0.05).with_diffusion(0.0);
        let img = render(&g, &optics, &Pose::identity(), &Frame::new(50, 50, 1.0)).unwrap();
        let expected = (-2.5f64).exp();
        assert!((expected - 0.0821).abs() < 1e-4);
        for y in 10..40 {
            for x in 10..40 {
                assert!((img.get(x, y) - expected).abs() < 1e-6);
            }
        }
        // Background outside the part is unattenuated.
        assert_eq!(img.get(2, 25), 1.0);
    }

    #[test]
    fn footprint_check() {
        let g = small_cube(InfillPattern::Linear, 0.2);
        let optics = OpticalParams::default();
        assert!(matches!(
            render(&g, &optics, &Pose::identity(), &Frame::new(16, 16, 1.0)),
            Err(RenderError::FootprintTooSmall { .. })
        ));
        // 20 mm square rotated 45° needs ~28.3 mm of width.
        assert!(render(&g, &optics, &Pose::rotate(45.0), &Frame::new(26, 26, 1.0)).is_err());
        assert!(render(&g, &optics, &Pose::rotate(45.0), &Frame::new(30, 30, 1.0)).is_ok());
    }

    #[test]
    fn pose_consistency_is_pixel_exact() {
        let spec = InfillSpec::cube(InfillPattern::Hexagonal, 0.15)
            .with_size([20.0, 20.0, 20.0])
            .with_seed(8);
        let g = generate_infill(&spec).unwrap();
        let pose = Pose::new([0.7, -0.3], 17.0);
        let optics = OpticalParams::default();
        let frame = Frame::new(40, 32, 0.8);
        let a = render(&g, &optics, &pose, &frame).unwrap();
        let b = render(&transform(&g, &pose), &optics, &Pose::identity(), &frame).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intensity_decreases_with_mu() {
        let g = small_cube(InfillPattern::DiamondFill, 0.2);
        let frame = Frame::new(32, 32, 1.0);
        let mut last = f64::INFINITY;
        for mu in [0.02, 0.05, 0.08, 0.12] {
            let img = render(&g, &OpticalParams::default().with_mu(mu), &Pose::identity(), &frame)
                .unwrap();
            let m = img.region_mean(10, 10, 22, 22);
            assert!(m < last);
            last = m;
        }
    }

    #[test]
    fn single_layer_closed_form() {
        let optics = OpticalParams::default().with_mu(1.0);
        let i1 = render_single_layer(0.1, &optics).unwrap().get(16, 16);
        let i4 = render_single_layer(0.4, &optics).unwrap().get(16, 16);
        assert!((i1 - 0.9048).abs() < 1e-4);
        assert!((i4 - 0.6703).abs() < 1e-4);
        let mut last = 1.0;
        for t in [0.1, 0.2, 0.3, 0.4] {
            let v = render_single_layer(t, &optics).unwrap().mean();
            assert!(v < last);
            last = v;
        }
        let t = render_single_layer(0.15, &optics).unwrap().get(3, 3);
        let t2 = render_single_layer(0.30, &optics).unwrap().get(3, 3);
        assert!((t2 - t * t).abs() < 1e-9);
        let clear = render_single_layer(0.3, &optics.with_mu(0.0)).unwrap();
        assert!(clear.data().iter().all(|&v| v == 1.0));
        assert!(render_single_layer(0.0, &optics).is_err());
    }

    #[test]
    fn invalid_optics_rejected() {
        let g = small_cube(InfillPattern::Linear, 0.2);
        let mut o = OpticalParams::default();
        o.mu_air = 0.1;
        o.mu_solid = 0.05;
        assert!(render(&g, &o, &Pose::identity(), &Frame::new(32, 32, 1.0)).is_err());
        let o = OpticalParams::default().with_diffusion(-1.0);
        assert!(render(&g, &o, &Pose::identity(), &Frame::new(32, 32, 1.0)).is_err());
    }
}

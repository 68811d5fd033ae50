//! Grayscale transmission images and their on-disk forms.

mod pgm;

pub use pgm::{decode_pgm, encode_pgm, encode_png, read_pgm, write_pgm, write_png, BitDepth};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image data has {got} values, expected {width}x{height}")]
    SizeMismatch { width: usize, height: usize, got: usize },
    #[error("pixel pitch must be positive, got {0}")]
    BadPitch(f64),
    #[error("intensity {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("PNG encoding failed: {0}")]
    Png(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major grid of normalized intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionImage {
    width: usize,
    height: usize,
    /// Millimetres per pixel.
    pixel_pitch: f64,
    data: Vec<f64>,
}

impl TransmissionImage {
    pub fn new(
        width: usize,
        height: usize,
        pixel_pitch: f64,
        data: Vec<f64>,
    ) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::SizeMismatch {
                width,
                height,
                got: data.len(),
            });
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(ImageError::BadPitch(pixel_pitch));
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ImageError::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            pixel_pitch,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, pixel_pitch: f64, value: f64) -> Self {
        Self::new(width, height, pixel_pitch, vec![value; width * height])
            .expect("valid constant image")
    }

    /// Build from a function of `(x, y)` pixel coordinates; values are clamped.
    pub fn from_fn(
        width: usize,
        height: usize,
        pixel_pitch: f64,
        f: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self::new(width, height, pixel_pitch, data).expect("clamped image is valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len().max(1) as f64
    }

    /// Mean over the pixel rectangle `[x0, x1) × [y0, y1)`.
    pub fn region_mean(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for y in y0..y1.min(self.height) {
            for x in x0..x1.min(self.width) {
                sum += self.get(x, y);
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Same pixels with new values; values are clamped into `[0, 1]`.
    pub fn with_data(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Self {
            width: self.width,
            height: self.height,
            pixel_pitch: self.pixel_pitch,
            data,
        }
    }
}

/// Normalized cross-correlation of two equally sized images. Two constant
/// images correlate at 1 when equal and 0 otherwise.
pub fn normalized_cross_correlation(a: &TransmissionImage, b: &TransmissionImage) -> f64 {
    assert_eq!((a.width, a.height), (b.width, b.height), "image sizes differ");
    let ma = a.mean();
    let mb = b.mean();
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.data.iter().zip(&b.data) {
        let u = x - ma;
        let v = y - mb;
        num += u * v;
        da += u * u;
        db += v * v;
    }
    if da == 0.0 || db == 0.0 {
        return if a.data == b.data { 1.0 } else { 0.0 };
    }
    num / (da.sqrt() * db.sqrt())
}

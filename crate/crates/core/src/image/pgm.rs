//! Binary PGM (P5) and 8/16-bit grayscale PNG.
//!
//! Intensities map to stored values as `round(I · (2^bits − 1))` and back as
//! `v / (2^bits − 1)`. 16-bit samples are big-endian, as P5 requires. The
//! pixel pitch is carried in a `# pitch <mm>` comment line.

use std::io::Write;
use std::path::Path;

use super::{ImageError, TransmissionImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BitDepth {
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

fn quantize(v: f64, max: u32) -> u32 {
    (v.clamp(0.0, 1.0) * max as f64).round() as u32
}

pub fn encode_pgm(img: &TransmissionImage, depth: BitDepth) -> Vec<u8> {
    let max = depth.max_value();
    let mut out = Vec::with_capacity(64 + img.data().len() * 2);
    let _ = write!(
        out,
        "P5\n# pitch {}\n{} {}\n{}\n",
        img.pixel_pitch(),
        img.width(),
        img.height(),
        max
    );
    for &v in img.data() {
        let q = quantize(v, max);
        match depth {
            BitDepth::Eight => out.push(q as u8),
            BitDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    out
}

/// Parse a binary PGM. Images without a `# pitch` comment get pitch 1.
pub fn decode_pgm(bytes: &[u8]) -> Result<(TransmissionImage, BitDepth), ImageError> {
    let bad = |m: &str| ImageError::Pgm(m.to_string());
    let mut pos = 0usize;
    let mut pitch = 1.0;
    let mut tokens: Vec<String> = Vec::with_capacity(4);
    while tokens.len() < 4 {
        // Skip whitespace and comments.
        while pos < bytes.len() {
            let c = bytes[pos];
            if c == b'#' {
                let end = bytes[pos..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map(|e| pos + e)
                    .unwrap_or(bytes.len());
                let comment = String::from_utf8_lossy(&bytes[pos + 1..end]);
                let mut parts = comment.split_whitespace();
                if parts.next() == Some("pitch") {
                    if let Some(p) = parts.next().and_then(|s| s.parse::<f64>().ok()) {
                        pitch = p;
                    }
                }
                pos = end;
            } else if c.is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let width: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let max: u32 = tokens[3].parse().map_err(|_| bad("bad maxval"))?;
    let depth = match max {
        1..=255 => BitDepth::Eight,
        256..=65535 => BitDepth::Sixteen,
        _ => return Err(bad("maxval out of range")),
    };
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let bps = if depth == BitDepth::Eight { 1 } else { 2 };
    let need = width * height * bps;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| bad("raster shorter than header claims"))?;
    let data: Vec<f64> = match depth {
        BitDepth::Eight => raster.iter().map(|&b| b as f64 / max as f64).collect(),
        BitDepth::Sixteen => raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / max as f64)
            .collect(),
    };
    let data = data.into_iter().map(|v| v.min(1.0)).collect();
    Ok((TransmissionImage::new(width, height, pitch, data)?, depth))
}

pub fn write_pgm(path: &Path, img: &TransmissionImage, depth: BitDepth) -> Result<(), ImageError> {
    std::fs::write(path, encode_pgm(img, depth))?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<TransmissionImage, ImageError> {
    Ok(decode_pgm(&std::fs::read(path)?)?.0)
}

pub fn encode_png(img: &TransmissionImage, depth: BitDepth) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(match depth {
            BitDepth::Eight => png::BitDepth::Eight,
            BitDepth::Sixteen => png::BitDepth::Sixteen,
        });
        let mut writer = enc.write_header().map_err(|e| ImageError::Png(e.to_string()))?;
        let max = depth.max_value();
        let raster: Vec<u8> = match depth {
            BitDepth::Eight => img.data().iter().map(|&v| quantize(v, max) as u8).collect(),
            BitDepth::Sixteen => img
                .data()
                .iter()
                .flat_map(|&v| (quantize(v, max) as u16).to_be_bytes())
                .collect(),
        };
        writer
            .write_image_data(&raster)
            .map_err(|e| ImageError::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn write_png(path: &Path, img: &TransmissionImage, depth: BitDepth) -> Result<(), ImageError> {
    std::fs::write(path, encode_png(img, depth)?)?;
    Ok(())
}

//! Fast-Hessian interest points.
//!
//! Box-filter approximations of the second derivatives are evaluated at
//! every pixel for each filter size (no subsampling in higher octaves), so
//! shifting the image by whole pixels shifts every detection by exactly the
//! same amount away from the border.

use serde::{Deserialize, Serialize};

use super::IntegralImage;
use crate::image::TransmissionImage;

/// Weight on `Dxy²` compensating for the box approximation.
const DXY_WEIGHT: f64 = 0.81;
/// Gaussian scale of the 9×9 filter.
const BASE_SCALE: f64 = 1.2 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorParams {
    /// Minimum determinant-of-Hessian response.
    pub threshold: f64,
    pub octaves: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            threshold: 3e-5,
            octaves: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Gaussian-equivalent scale in pixels.
    pub scale: f64,
    pub response: f64,
    /// Sign of the Laplacian: `1` for dark blobs on a bright field.
    pub sign: i8,
}

/// Side length of the filter for `interval` (0..4) of `octave` (0-based):
/// 9, 15, 21, 27, then 15, 27, 39, 51, and so on.
pub fn filter_size(octave: usize, interval: usize) -> usize {
    3 * ((2 << octave) * (interval + 1) + 1)
}

pub(crate) struct ResponseMap {
    pub filter: usize,
    pub width: usize,
    pub responses: Vec<f64>,
    pub laplacian: Vec<bool>,
}

impl ResponseMap {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.responses[r * self.width + c]
    }
}

/// Area-normalized box-filter Hessian entries `(Dxx, Dyy, Dxy)` at pixel
/// `(c, r)` for filter side `size`.
pub fn hessian(ii: &IntegralImage, r: isize, c: isize, size: usize) -> (f64, f64, f64) {
    let w = size as isize;
    let b = (w - 1) / 2;
    let l = w / 3;
    let inv = 1.0 / (w * w) as f64;
    let dxx = ii.box_sum(r - l + 1, c - b, 2 * l - 1, w)
        - 3.0 * ii.box_sum(r - l + 1, c - l / 2, 2 * l - 1, l);
    let dyy = ii.box_sum(r - b, c - l + 1, w, 2 * l - 1)
        - 3.0 * ii.box_sum(r - l / 2, c - l + 1, l, 2 * l - 1);
    let dxy = ii.box_sum(r - l, c + 1, l, l) + ii.box_sum(r + 1, c - l, l, l)
        - ii.box_sum(r - l, c - l, l, l)
        - ii.box_sum(r + 1, c + 1, l, l);
    (dxx * inv, dyy * inv, dxy * inv)
}

/// Determinant-of-Hessian response and Laplacian sign.
#[inline]
pub fn hessian_response(ii: &IntegralImage, r: isize, c: isize, size: usize) -> (f64, bool) {
    let (dxx, dyy, dxy) = hessian(ii, r, c, size);
    (dxx * dyy - DXY_WEIGHT * dxy * dxy, dxx + dyy >= 0.0)
}

fn build_map(ii: &IntegralImage, filter: usize) -> ResponseMap {
    let (w, h) = (ii.width(), ii.height());
    let mut responses = Vec::with_capacity(w * h);
    let mut laplacian = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (v, lap) = hessian_response(ii, r as isize, c as isize, filter);
            responses.push(v);
            laplacian.push(lap);
        }
    }
    ResponseMap {
        filter,
        width: w,
        responses,
        laplacian,
    }
}

fn is_extremum(b: &ResponseMap, m: &ResponseMap, t: &ResponseMap, r: usize, c: usize, thr: f64) -> bool {
    let v = m.at(r, c);
    if v <= thr {
        return false;
    }
    for rr in r - 1..=r + 1 {
        for cc in c - 1..=c + 1 {
            if t.at(rr, cc) >= v || b.at(rr, cc) >= v {
                return false;
            }
            if (rr != r || cc != c) && m.at(rr, cc) >= v {
                return false;
            }
        }
    }
    true
}

/// Quadratic fit over the 3×3×3 neighbourhood; returns the `(x, y, s)`
/// offset when it stays inside the centre cell.
fn refine(b: &ResponseMap, m: &ResponseMap, t: &ResponseMap, r: usize, c: usize) -> Option<[f64; 3]> {
    let v = m.at(r, c);
    let g = [
        0.5 * (m.at(r, c + 1) - m.at(r, c - 1)),
        0.5 * (m.at(r + 1, c) - m.at(r - 1, c)),
        0.5 * (t.at(r, c) - b.at(r, c)),
    ];
    let dxx = m.at(r, c + 1) + m.at(r, c - 1) - 2.0 * v;
    let dyy = m.at(r + 1, c) + m.at(r - 1, c) - 2.0 * v;
    let dss = t.at(r, c) + b.at(r, c) - 2.0 * v;
    let dxy = 0.25 * (m.at(r + 1, c + 1) - m.at(r + 1, c - 1) - m.at(r - 1, c + 1) + m.at(r - 1, c - 1));
    let dxs = 0.25 * (t.at(r, c + 1) - t.at(r, c - 1) - b.at(r, c + 1) + b.at(r, c - 1));
    let dys = 0.25 * (t.at(r + 1, c) - t.at(r - 1, c) - b.at(r + 1, c) + b.at(r - 1, c));
    let hm = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
    let off = solve3(hm, [-g[0], -g[1], -g[2]])?;
    off.iter().all(|o| o.abs() < 0.5).then_some(off)
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *xk = det(&m) / d;
    }
    Some(x)
}

/// Detect scale-space maxima of the Hessian determinant, strongest first.
pub fn detect_keypoints(img: &TransmissionImage, params: &DetectorParams) -> Vec<Keypoint> {
    detect_in(&IntegralImage::new(img), params)
}

pub fn detect_in(ii: &IntegralImage, params: &DetectorParams) -> Vec<Keypoint> {
    let (w, h) = (ii.width(), ii.height());
    let mut sizes: Vec<usize> = (0..params.octaves)
        .flat_map(|o| (0..4).map(move |i| filter_size(o, i)))
        .collect();
    sizes.sort_unstable();
    sizes.dedup();
    let maps: Vec<ResponseMap> = sizes
        .iter()
        .filter(|&&s| s < w.min(h))
        .map(|&s| build_map(ii, s))
        .collect();
    let map_of = |size: usize| maps.iter().find(|m| m.filter == size);

    let mut out = Vec::new();
    for o in 0..params.octaves {
        for i in 1..=2 {
            let (Some(b), Some(m), Some(t)) = (
                map_of(filter_size(o, i - 1)),
                map_of(filter_size(o, i)),
                map_of(filter_size(o, i + 1)),
            ) else {
                continue;
            };
            let border = t.filter.div_ceil(2);
            if 2 * border + 1 >= w.min(h) {
                continue;
            }
            for r in border + 1..h - border {
                for c in border + 1..w - border {
                    if !is_extremum(b, m, t, r, c, params.threshold) {
                        continue;
                    }
                    let Some(off) = refine(b, m, t, r, c) else {
                        continue;
                    };
                    let step = (m.filter - b.filter) as f64;
                    out.push(Keypoint {
                        x: c as f64 + off[0],
                        y: r as f64 + off[1],
                        scale: BASE_SCALE * (m.filter as f64 + off[2] * step),
                        response: m.at(r, c),
                        sign: if m.laplacian[r * w + c] { 1 } else { -1 },
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
            .then(a.scale.total_cmp(&b.scale))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(size: usize, cx: f64, cy: f64, sigma: f64) -> TransmissionImage {
        TransmissionImage::from_fn(size, size, 1.0, |x, y| {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            0.9 - 0.6 * (-d2 / (2.0 * sigma * sigma)).exp()
        })
    }

    /// Direct box sum without the integral image.
    fn naive_box(img: &TransmissionImage, row: isize, col: isize, rows: isize, cols: isize) -> f64 {
        let mut s = 0.0;
        for y in row.max(0)..(row + rows).min(img.height() as isize) {
            for x in col.max(0)..(col + cols).min(img.width() as isize) {
                s += img.get(x as usize, y as usize);
            }
        }
        s
    }

    fn naive_response(img: &TransmissionImage, r: isize, c: isize, w: isize) -> f64 {
        let b = (w - 1) / 2;
        let l = w / 3;
        let dxx = naive_box(img, r - l + 1, c - b, 2 * l - 1, w)
            - 3.0 * naive_box(img, r - l + 1, c - l / 2, 2 * l - 1, l);
        let dyy = naive_box(img, r - b, c - l + 1, w, 2 * l - 1)
            - 3.0 * naive_box(img, r - l / 2, c - l + 1, l, 2 * l - 1);
        let dxy = naive_box(img, r - l, c + 1, l, l) + naive_box(img, r + 1, c - l, l, l)
            - naive_box(img, r - l, c - l, l, l)
            - naive_box(img, r + 1, c + 1, l, l);
        let a = (w * w) as f64;
        (dxx / a) * (dyy / a) - 0.81 * (dxy / a).powi(2)
    }

    #[test]
    fn filter_sizes() {
        let s: Vec<usize> = (0..4).map(|i| filter_size(0, i)).collect();
        assert_eq!(s, vec![9, 15, 21, 27]);
        let s: Vec<usize> = (0..4).map(|i| filter_size(1, i)).collect();
        assert_eq!(s, vec![15, 27, 39, 51]);
        assert_eq!(filter_size(2, 0), 27);
    }

    #[test]
    fn constant_image_has_no_keypoints() {
        let img = TransmissionImage::filled(64, 64, 1.0, 0.6);
        assert!(detect_keypoints(&img, &DetectorParams::default()).is_empty());
    }

    #[test]
    fn single_blob_matches_exhaustive_scan() {
        let (cx, cy) = (40.3, 38.6);
        let img = blob(80, cx, cy, 4.0);
        // The default threshold suits low-contrast renders and also picks up
        // the blob's faint side lobes; the blob itself must still lead.
        let all = detect_keypoints(&img, &DetectorParams::default());
        assert!(((all[0].x - cx).powi(2) + (all[0].y - cy).powi(2)).sqrt() < 1.5, "{all:?}");
        let params = DetectorParams {
            threshold: 1e-3,
            ..DetectorParams::default()
        };
        let kps = detect_keypoints(&img, &params);
        assert_eq!(kps.len(), 1, "{kps:?}");
        let k = kps[0];
        assert!(((k.x - cx).powi(2) + (k.y - cy).powi(2)).sqrt() < 1.5, "{k:?}");
        assert_eq!(k.sign, 1);

        // Oracle: strongest response over every pixel and filter size whose
        // support fits in the image.
        let mut best = (f64::NEG_INFINITY, 0isize, 0isize, 0usize);
        for o in 0..3 {
            for i in 0..4 {
                let f = filter_size(o, i);
                let half = (f / 2) as isize + 1;
                for r in half..80 - half {
                    for c in half..80 - half {
                        let v = naive_response(&img, r, c, f as isize);
                        if v > best.0 {
                            best = (v, r, c, f);
                        }
                    }
                }
            }
        }
        let (_, r, c, f) = best;
        assert!((k.x - c as f64).abs() <= 1.0 && (k.y - r as f64).abs() <= 1.0);
        assert!((k.scale - BASE_SCALE * f as f64).abs() <= BASE_SCALE * 12.0);
    }

    #[test]
    fn integral_response_matches_naive() {
        let img = blob(48, 20.0, 25.0, 3.0);
        let ii = IntegralImage::new(&img);
        for (r, c, f) in [(20, 20, 9), (25, 20, 15), (10, 30, 21), (3, 3, 27)] {
            let fast = hessian_response(&ii, r, c, f).0;
            let slow = naive_response(&img, r, c, f as isize);
            assert!((fast - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_shift_equivariance() {
        use crate::rng::Stream;
        let mut rng = Stream::new(5);
        let blobs: Vec<(f64, f64, f64)> = (0..40)
            .map(|_| (rng.uniform(10.0, 170.0), rng.uniform(10.0, 170.0), rng.uniform(1.5, 4.0)))
            .collect();
        let scene = |x: f64, y: f64| {
            let mut v = 0.9;
            for &(bx, by, s) in &blobs {
                v -= 0.3 * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * s * s)).exp();
            }
            v
        };
        let (dx, dy) = (7usize, 4usize);
        let a = TransmissionImage::from_fn(160, 160, 1.0, |x, y| scene(x as f64, y as f64));
        let b = TransmissionImage::from_fn(160, 160, 1.0, |x, y| {
            scene((x + dx) as f64, (y + dy) as f64)
        });
        let p = DetectorParams::default();
        let ka = detect_keypoints(&a, &p);
        let kb = detect_keypoints(&b, &p);
        assert!(ka.len() >= 5);
        let mut checked = 0;
        for k in &ka {
            let (bx, by) = (k.x - dx as f64, k.y - dy as f64);
            // Clear of the largest filter that can have produced `k`.
            let margin = 6.0 * k.scale + 3.0;
            let inside = |v: f64| v >= margin && v <= 160.0 - margin;
            if !(inside(k.x) && inside(k.y) && inside(bx) && inside(by)) {
                continue;
            }
            checked += 1;
            assert!(
                kb.iter().any(|q| (q.x - bx).abs() <= 0.5 && (q.y - by).abs() <= 0.5),
                "no partner for {k:?}"
            );
        }
        assert!(checked >= 5, "only {checked} keypoints clear of the border");
    }
}

//! Separable Gaussian point-spread function.

/// Normalized 1-D Gaussian taps for `σ` (pixels), radius `⌈3σ⌉`.
pub(crate) fn kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Mirror index into `[0, n)` with the edge sample repeated
/// (`… 1 0 | 0 1 … n−1 | n−1 n−2 …`).
#[inline]
fn reflect(i: isize, n: isize) -> usize {
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

fn convolve_line(src: &[f64], dst: &mut [f64], k: &[f64], stride: usize, n: usize) {
    let r = (k.len() / 2) as isize;
    for i in 0..n {
        let mut acc = 0.0;
        for (j, &w) in k.iter().enumerate() {
            let idx = reflect(i as isize + j as isize - r, n as isize);
            acc += w * src[idx * stride];
        }
        dst[i * stride] = acc;
    }
}

/// Blur a row-major `width × height` grid with an isotropic Gaussian of
/// standard deviation `sigma` pixels. Mirrored edges make every input pixel
/// contribute total weight 1, so the image sum is preserved.
pub fn gaussian_blur(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    assert_eq!(data.len(), width * height);
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let k = kernel(sigma);
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        let row = y * width;
        convolve_line(&data[row..row + width], &mut tmp[row..row + width], &k, 1, width);
    }
    let mut out = vec![0.0; data.len()];
    for x in 0..width {
        convolve_line(&tmp[x..], &mut out[x..], &k, width, height);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        for sigma in [0.3, 1.0, 2.5] {
            let k = kernel(sigma);
            assert_eq!(k.len(), 2 * (3.0 * sigma).ceil() as usize + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for i in 0..k.len() {
                assert_eq!(k[i], k[k.len() - 1 - i]);
            }
        }
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
    }

    #[test]
    fn constant_image_is_fixed() {
        let d = vec![0.37; 20 * 11];
        let b = gaussian_blur(&d, 20, 11, 1.7);
        assert!(b.iter().all(|v| (v - 0.37).abs() < 1e-14));
    }

    #[test]
    fn impulse_spreads_like_gaussian() {
        let mut d = vec![0.0; 31 * 31];
        d[15 * 31 + 15] = 1.0;
        let b = gaussian_blur(&d, 31, 31, 1.5);
        let c = b[15 * 31 + 15];
        let off = b[15 * 31 + 17];
        let ratio = off / c;
        assert!((ratio - (-4.0f64 / (2.0 * 2.25)).exp()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn blur_conserves_sum(
            data in proptest::collection::vec(0.0f64..1.0, 7 * 9),
            sigma in 0.2f64..4.0,
        ) {
            let b = gaussian_blur(&data, 7, 9, sigma);
            let s0: f64 = data.iter().sum();
            let s1: f64 = b.iter().sum();
            prop_assert!((s0 - s1).abs() < 1e-6 * s0.max(1.0));
        }
    }
}

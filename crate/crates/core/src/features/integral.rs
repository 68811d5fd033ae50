use crate::image::TransmissionImage;

/// Summed-area table with a zero first row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    /// `(width + 1) × (height + 1)`, row-major.
    table: Vec<f64>,
}

impl IntegralImage {
    pub fn new(img: &TransmissionImage) -> Self {
        Self::from_raw(img.width(), img.height(), img.data())
    }

    pub fn from_raw(width: usize, height: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), width * height);
        let stride = width + 1;
        let mut table = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row_sum = 0.0;
            for x in 0..width {
                row_sum += data[y * width + x];
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
            }
        }
        Self {
            width,
            height,
            table,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Table entry `(x, y)`: the sum of pixels with column `< x` and row `< y`.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.table[y * (self.width + 1) + x]
    }

    /// Sum over pixel columns `[x0, x1)` and rows `[y0, y1)`.
    #[inline]
    pub fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        if x1 <= x0 || y1 <= y0 {
            return 0.0;
        }
        self.at(x1, y1) - self.at(x0, y1) - self.at(x1, y0) + self.at(x0, y0)
    }

    /// Sum over the `rows × cols` box with top-left pixel `(col, row)`,
    /// clipped to the image.
    #[inline]
    pub fn box_sum(&self, row: isize, col: isize, rows: isize, cols: isize) -> f64 {
        let clip = |v: isize, hi: usize| v.clamp(0, hi as isize) as usize;
        let y0 = clip(row, self.height);
        let y1 = clip(row + rows, self.height);
        let x0 = clip(col, self.width);
        let x1 = clip(col + cols, self.width);
        self.sum(x0, y0, x1, y1)
    }
}

pub fn integral_image(img: &TransmissionImage) -> IntegralImage {
    IntegralImage::new(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn zero_image_gives_zero_table() {
        let ii = integral_image(&TransmissionImage::filled(5, 7, 1.0, 0.0));
        assert!(ii.table.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ones_full_query() {
        let ii = integral_image(&TransmissionImage::filled(4, 4, 1.0, 1.0));
        assert_eq!(ii.sum(0, 0, 4, 4), 16.0);
        for i in 0..=4 {
            assert_eq!(ii.at(i, 0), 0.0);
            assert_eq!(ii.at(0, i), 0.0);
        }
    }

    #[test]
    fn random_boxes_match_direct_sums() {
        let mut rng = Stream::new(11);
        let img = TransmissionImage::from_fn(16, 16, 1.0, |_, _| 0.0);
        let data: Vec<f64> = (0..256).map(|_| rng.next_f64()).collect();
        let img = img.with_data(data);
        let ii = integral_image(&img);
        let total: f64 = img.data().iter().sum();
        assert!((ii.sum(0, 0, 16, 16) - total).abs() <= 1e-9 * total);
        for _ in 0..100 {
            let x0 = rng.below(16) as usize;
            let y0 = rng.below(16) as usize;
            let x1 = x0 + 1 + rng.below((16 - x0) as u64) as usize;
            let y1 = y0 + 1 + rng.below((16 - y0) as u64) as usize;
            let mut direct = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    direct += img.get(x, y);
                }
            }
            let got = ii.sum(x0, y0, x1, y1);
            assert!((got - direct).abs() <= 1e-9 * direct.abs().max(1e-12));
        }
    }

    #[test]
    fn box_sum_clips() {
        let ii = integral_image(&TransmissionImage::filled(4, 4, 1.0, 1.0));
        assert_eq!(ii.box_sum(-2, -2, 4, 4), 4.0);
        assert_eq!(ii.box_sum(3, 3, 5, 5), 1.0);
        assert_eq!(ii.box_sum(5, 0, 2, 2), 0.0);
    }
}

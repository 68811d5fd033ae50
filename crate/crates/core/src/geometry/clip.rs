use super::{sub, Point};

/// Clip the segment `p0 → p1` to a convex counter-clockwise quad
/// (Cyrus–Beck). Endpoints already inside are returned bit-for-bit
/// unchanged. Returns `None` when nothing of positive length survives.
pub fn clip_segment(p0: Point, p1: Point, quad: &[Point; 4]) -> Option<(Point, Point)> {
    let d = sub(p1, p0);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for i in 0..4 {
        let a = quad[i];
        let e = sub(quad[(i + 1) % 4], a);
        let n = [-e[1], e[0]];
        let r = sub(p0, a);
        let num = n[0] * r[0] + n[1] * r[1];
        let den = n[0] * d[0] + n[1] * d[1];
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
            continue;
        }
        let t = -num / den;
        if den > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 >= t1 {
            return None;
        }
    }
    let at = |t: f64| [p0[0] + t * d[0], p0[1] + t * d[1]];
    let q0 = if t0 == 0.0 { p0 } else { at(t0) };
    let q1 = if t1 == 1.0 { p1 } else { at(t1) };
    Some((q0, q1))
}

/// Point-in-convex-quad test (boundary counts as inside).
pub fn point_in_quad(p: Point, quad: &[Point; 4]) -> bool {
    (0..4).all(|i| {
        let a = quad[i];
        let e = sub(quad[(i + 1) % 4], a);
        let r = sub(p, a);
        e[0] * r[1] - e[1] * r[0] >= 0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [Point; 4] = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]];

    #[test]
    fn inside_segment_is_untouched() {
        let p0 = [1.1, 2.3];
        let p1 = [7.7, 9.1];
        assert_eq!(clip_segment(p0, p1, &SQUARE), Some((p0, p1)));
    }

    #[test]
    fn crossing_segment_is_cut_at_edges() {
        let (a, b) = clip_segment([-5.0, 5.0], [15.0, 5.0], &SQUARE).unwrap();
        assert_eq!(a, [0.0, 5.0]);
        assert_eq!(b, [10.0, 5.0]);
        let (a, b) = clip_segment([-5.0, -5.0], [15.0, 15.0], &SQUARE).unwrap();
        assert!((a[0]).abs() < 1e-12 && (a[1]).abs() < 1e-12);
        assert!((b[0] - 10.0).abs() < 1e-12 && (b[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn outside_segment_vanishes() {
        assert_eq!(clip_segment([-5.0, -1.0], [15.0, -1.0], &SQUARE), None);
        assert_eq!(clip_segment([11.0, 0.0], [20.0, 9.0], &SQUARE), None);
        // Touching a corner only.
        assert_eq!(clip_segment([-1.0, 1.0], [1.0, -1.0], &SQUARE), None);
    }

    #[test]
    fn point_tests() {
        assert!(point_in_quad([5.0, 5.0], &SQUARE));
        assert!(point_in_quad([0.0, 5.0], &SQUARE));
        assert!(!point_in_quad([-0.1, 5.0], &SQUARE));
    }
}

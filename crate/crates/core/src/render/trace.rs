//! Exact ray/solid intersection lengths for rays parallel to +Y.

use crate::geometry::{Point, SliceGeometry};

/// The `y` interval where the vertical line at `x` crosses a convex
/// counter-clockwise quad.
pub(crate) fn quad_chord(quad: &[Point; 4], x: f64) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..4 {
        let a = quad[i];
        let b = quad[(i + 1) % 4];
        let ex = b[0] - a[0];
        let ey = b[1] - a[1];
        // Inside the edge's half-plane: ex·(y − ay) − ey·(x − ax) ≥ 0.
        if ex == 0.0 {
            if -ey * (x - a[0]) < 0.0 {
                return None;
            }
            continue;
        }
        let y = a[1] + ey * (x - a[0]) / ex;
        if ex > 0.0 {
            lo = lo.max(y);
        } else {
            hi = hi.min(y);
        }
    }
    (lo < hi).then_some((lo, hi))
}

/// Solid and in-object air lengths along the ray `(x, ·, z)`.
pub(crate) fn ray_lengths(geom: &SliceGeometry, x: f64, z: f64) -> (f64, f64) {
    let shell = &geom.shell;
    if !(0.0..=shell.height()).contains(&z) {
        return (0.0, 0.0);
    }
    let Some((a, b)) = quad_chord(&shell.outer, x) else {
        return (0.0, 0.0);
    };
    let outer = b - a;
    if shell.in_cap(z) {
        return (outer, 0.0);
    }
    let Some((c, d)) = quad_chord(&shell.inner, x) else {
        return (outer, 0.0);
    };
    let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(16);
    intervals.push((a, c.max(a)));
    intervals.push((d.min(b), b));
    if let Some(li) = geom.layer_index_at(z) {
        for s in &geom.layers[li].struts {
            let h = 0.5 * s.width;
            if x < s.p0[0].min(s.p1[0]) - h || x > s.p0[0].max(s.p1[0]) + h {
                continue;
            }
            if let Some(fp) = s.footprint() {
                if let Some((lo, hi)) = quad_chord(&fp, x) {
                    intervals.push((lo.max(a), hi.min(b)));
                }
            }
        }
    }
    let solid = union_length(&mut intervals);
    (solid, (outer - solid).max(0.0))
}

/// Total length of a union of intervals (sorted in place).
fn union_length(intervals: &mut [(f64, f64)]) -> f64 {
    intervals.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for &(lo, hi) in intervals.iter() {
        if hi <= lo {
            continue;
        }
        current = match current {
            Some((cl, ch)) if lo <= ch => Some((cl, ch.max(hi))),
            Some((cl, ch)) => {
                total += ch - cl;
                Some((lo, hi))
            }
            None => Some((lo, hi)),
        };
    }
    if let Some((cl, ch)) = current {
        total += ch - cl;
    }
    total
}

/// Length (mm) of solid material crossed by the ray parallel to +Y at
/// horizontal position `x` and height `z`, in world coordinates.
///
/// Shell walls and the struts of the layer containing `z` are united before
/// measuring, so where roads cross or touch a wall the overlap counts once.
/// Rays that miss the part return 0.
pub fn path_length(geom: &SliceGeometry, x: f64, z: f64) -> f64 {
    ray_lengths(geom, x, z).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        generate_infill, transform, ErrorModel, InfillPattern, InfillSpec, Layer, Pose, Shell,
        Strut,
    };
    use proptest::prelude::*;

    fn empty_box() -> SliceGeometry {
        let shell = Shell::new([20.0, 20.0, 10.0], 1.2);
        let layers = (0..10)
            .map(|i| Layer {
                z_low: i as f64,
                z_high: (i + 1) as f64,
                struts: Vec::new(),
            })
            .collect();
        SliceGeometry { layers, shell }
    }

    /// Riemann sum along the ray with point-in-solid tests at step midpoints.
    fn riemann_length(g: &SliceGeometry, x: f64, z: f64, step: f64, y_max: f64) -> f64 {
        let n = (y_max / step).round() as usize;
        let mut hits = 0usize;
        for k in 0..n {
            let y = (k as f64 + 0.5) * step;
            if g.is_solid([x, y], z) {
                hits += 1;
            }
        }
        hits as f64 * step
    }

    #[test]
    fn shell_only_box_two_walls() {
        let g = empty_box();
        assert!((path_length(&g, 10.0, 5.0) - 2.4).abs() < 1e-12);
    }

    #[test]
    fn misses_return_zero() {
        let g = empty_box();
        assert_eq!(path_length(&g, -1.0, 5.0), 0.0);
        assert_eq!(path_length(&g, 25.0, 5.0), 0.0);
        assert_eq!(path_length(&g, 10.0, 11.0), 0.0);
        assert_eq!(path_length(&g, 10.0, -0.5), 0.0);
    }

    #[test]
    fn caps_and_side_walls_are_solid_through() {
        let g = empty_box();
        assert!((path_length(&g, 10.0, 0.5) - 20.0).abs() < 1e-12);
        assert!((path_length(&g, 0.6, 5.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn axis_aligned_strut_at_normal_incidence() {
        let mut g = empty_box();
        g.layers[5].struts.push(Strut {
            p0: [3.0, 10.0],
            p1: [17.0, 10.0],
            width: 0.4,
        });
        let exact = path_length(&g, 10.0, 5.5);
        assert!((exact - 2.8).abs() < 1e-9);
        let oracle = riemann_length(&g, 10.0, 5.5, 0.001, 20.0);
        assert!((exact - oracle).abs() < 2e-3, "{exact} vs {oracle}");
        // Other layers are unaffected.
        assert!((path_length(&g, 10.0, 4.5) - 2.4).abs() < 1e-12);
    }

    #[test]
    fn crossing_struts_count_once() {
        let mut g = empty_box();
        g.layers[5].struts.push(Strut {
            p0: [3.0, 10.0],
            p1: [17.0, 10.0],
            width: 0.4,
        });
        g.layers[5].struts.push(Strut {
            p0: [3.0, 10.1],
            p1: [17.0, 10.1],
            width: 0.4,
        });
        assert!((path_length(&g, 10.0, 5.5) - 2.9).abs() < 1e-9);
    }

    #[test]
    fn slanted_strut_chord() {
        let mut g = empty_box();
        g.layers[5].struts.push(Strut {
            p0: [4.0, 4.0],
            p1: [16.0, 16.0],
            width: 0.4,
        });
        let l = path_length(&g, 10.0, 5.5);
        assert!((l - (2.4 + 0.4 * std::f64::consts::SQRT_2)).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_fine_riemann_oracle(
            seed in any::<u64>(),
            pat in 0usize..3,
            x in 0.0f64..16.0,
            zf in 0.0f64..1.0,
            rot in 0.0f64..360.0,
        ) {
            let mut spec = InfillSpec::cube(InfillPattern::ALL[pat], 0.2)
                .with_seed(seed)
                .with_error(ErrorModel::default());
            spec.object_size = [12.0, 10.0, 4.0];
            let g = transform(&generate_infill(&spec).unwrap(), &Pose::new([2.0, 3.0], rot));
            let z = zf * 4.0;
            let exact = path_length(&g, x, z);
            let oracle = riemann_length(&g, x, z, 0.001, 20.0);
            // Each interval boundary contributes at most half a step.
            prop_assert!((exact - oracle).abs() < 0.01, "{} vs {}", exact, oracle);
        }
    }
}

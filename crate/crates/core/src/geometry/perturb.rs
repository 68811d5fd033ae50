use super::{clip_segment, ErrorModel, GeometryError, Layer, SliceGeometry, Strut};
use crate::rng::{derive_seed, Stream};

/// Smallest width a jittered strut may take (mm).
pub const MIN_STRUT_WIDTH: f64 = 0.05;

/// Realize the manufacturing-error model on `geom`.
///
/// Layer `i` draws from its own stream keyed by `derive_seed(seed, i)`, so the
/// result does not depend on evaluation order. Per layer: the rigid drift
/// `(gx, gy)`; then per strut, in order: endpoint jitter `dx0, dy0, dx1, dy1`,
/// width jitter, and one uniform for dropout. The draws happen whether or not
/// a component is zero, so changing one sigma never reshuffles the others.
/// Surviving struts are re-clipped to the shell interior.
///
/// An all-zero model returns the input unchanged for every seed.
pub fn apply_errors(
    geom: &SliceGeometry,
    error: &ErrorModel,
    seed: u64,
) -> Result<SliceGeometry, GeometryError> {
    error.validate()?;
    if error.is_zero() {
        return Ok(geom.clone());
    }
    let interior = geom.shell.inner;
    let layers = geom
        .layers
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let mut rng = Stream::new(derive_seed(seed, i as u64));
            let drift = [
                error.sigma_layer * rng.next_gaussian(),
                error.sigma_layer * rng.next_gaussian(),
            ];
            let mut struts = Vec::with_capacity(layer.struts.len());
            for s in &layer.struts {
                let j = [
                    error.sigma_pos * rng.next_gaussian(),
                    error.sigma_pos * rng.next_gaussian(),
                    error.sigma_pos * rng.next_gaussian(),
                    error.sigma_pos * rng.next_gaussian(),
                ];
                let dw = error.sigma_width * rng.next_gaussian();
                let dropped = rng.next_f64() < error.dropout_prob;
                if dropped {
                    continue;
                }
                let p0 = [s.p0[0] + j[0] + drift[0], s.p0[1] + j[1] + drift[1]];
                let p1 = [s.p1[0] + j[2] + drift[0], s.p1[1] + j[3] + drift[1]];
                let width = (s.width + dw).max(MIN_STRUT_WIDTH);
                if let Some((p0, p1)) = clip_segment(p0, p1, &interior) {
                    struts.push(Strut { p0, p1, width });
                }
            }
            Layer {
                z_low: layer.z_low,
                z_high: layer.z_high,
                struts,
            }
        })
        .collect();
    Ok(SliceGeometry {
        layers,
        shell: geom.shell.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{nominal_infill, InfillPattern, InfillSpec};

    fn base() -> SliceGeometry {
        nominal_infill(&InfillSpec::cube(InfillPattern::DiamondFill, 0.2)).unwrap()
    }

    #[test]
    fn zero_model_is_identity_for_any_seed() {
        let g = base();
        for seed in [0, 1, 42, u64::MAX] {
            assert_eq!(apply_errors(&g, &ErrorModel::none(), seed).unwrap(), g);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let g = base();
        let e = ErrorModel {
            sigma_pos: 0.05,
            ..ErrorModel::none()
        };
        let a = apply_errors(&g, &e, 1).unwrap();
        let b = apply_errors(&g, &e, 2).unwrap();
        assert_ne!(a, b);
        // Same strut count (no dropout), but endpoints moved.
        assert_eq!(a.strut_count(), g.strut_count());
        let moved = a.layers[100]
            .struts
            .iter()
            .zip(&b.layers[100].struts)
            .filter(|(x, y)| x.p0 != y.p0 || x.p1 != y.p1)
            .count();
        assert!(moved > 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let g = base();
        let e = ErrorModel::default();
        assert_eq!(apply_errors(&g, &e, 9).unwrap(), apply_errors(&g, &e, 9).unwrap());
    }

    #[test]
    fn output_stays_valid() {
        let g = base();
        let e = ErrorModel {
            sigma_pos: 0.5,
            sigma_width: 0.3,
            sigma_layer: 0.5,
            dropout_prob: 0.1,
        };
        let out = apply_errors(&g, &e, 3).unwrap();
        out.validate().unwrap();
        assert!(out.layers.iter().flat_map(|l| &l.struts).all(|s| s.width >= MIN_STRUT_WIDTH));
        assert!(out.strut_count() < g.strut_count());
    }

    #[test]
    fn certain_dropout_is_rejected() {
        let e = ErrorModel {
            dropout_prob: 1.0,
            ..ErrorModel::none()
        };
        assert!(matches!(
            apply_errors(&base(), &e, 0),
            Err(GeometryError::InvalidErrorModel(_))
        ));
    }

    #[test]
    fn near_certain_dropout_leaves_almost_nothing() {
        let e = ErrorModel {
            dropout_prob: 1.0 - 1e-12,
            ..ErrorModel::none()
        };
        let out = apply_errors(&base(), &e, 0).unwrap();
        assert_eq!(out.strut_count(), 0);
    }
}

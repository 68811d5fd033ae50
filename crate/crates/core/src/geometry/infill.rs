use super::{
    apply_errors, clip_segment, GeometryError, InfillPattern, InfillSpec, Layer, Point, Shell,
    SliceGeometry, Strut,
};

/// Build the part described by `spec`: the nominal lattice, then the spec's
/// error model realized with the spec's seed.
pub fn generate_infill(spec: &InfillSpec) -> Result<SliceGeometry, GeometryError> {
    let nominal = nominal_infill(spec)?;
    apply_errors(&nominal, &spec.error, spec.seed)
}

/// The error-free lattice for `spec`. The error model and seed are ignored.
///
/// Layers are `round(Z / t)` equal slices of `[0, Z]`. Layers whose midpoint
/// falls in the solid floor or roof carry no struts.
pub fn nominal_infill(spec: &InfillSpec) -> Result<SliceGeometry, GeometryError> {
    spec.validate()?;
    let shell = Shell::new(spec.object_size, spec.shell_thickness);
    let height = spec.object_size[2];
    let n = spec.layer_count().max(1);

    let offset = spec.wrapped_offset();
    let w = spec.printing_width;
    let spacing = spec.strut_spacing();
    let interior = shell.inner;
    let rect = [interior[0], interior[2]];

    let plus = diagonal_family(rect, offset, spacing, 1.0, w);
    let minus = diagonal_family(rect, offset, spacing, -1.0, w);
    let hex = match spec.pattern {
        InfillPattern::Hexagonal => hexagon_walls(&interior, offset, spacing, w),
        _ => Vec::new(),
    };

    let layers = (0..n)
        .map(|i| {
            let z_low = height * i as f64 / n as f64;
            let z_high = if i + 1 == n { height } else { height * (i + 1) as f64 / n as f64 };
            let struts = if shell.in_cap(0.5 * (z_low + z_high)) {
                Vec::new()
            } else {
                match spec.pattern {
                    InfillPattern::Linear if i % 2 == 0 => plus.clone(),
                    InfillPattern::Linear => minus.clone(),
                    InfillPattern::DiamondFill => plus.iter().chain(&minus).copied().collect(),
                    InfillPattern::Hexagonal => hex.clone(),
                }
            };
            Layer { z_low, z_high, struts }
        })
        .collect();
    Ok(SliceGeometry { layers, shell })
}

/// Roads at ±45° with perpendicular pitch `spacing`, clipped to the
/// axis-aligned `rect` (`[min corner, max corner]`).
///
/// `sign = +1` gives lines `x − y = c`, `sign = −1` gives `x + y = c`; in both
/// cases `c` steps by `spacing·√2` from the lattice origin `offset`.
fn diagonal_family(rect: [Point; 2], offset: Point, spacing: f64, sign: f64, width: f64) -> Vec<Strut> {
    let [[x0, y0], [x1, y1]] = rect;
    let period = spacing * std::f64::consts::SQRT_2;
    let origin = offset[0] - sign * offset[1];
    let (c_min, c_max) = if sign > 0.0 {
        (x0 - y1, x1 - y0)
    } else {
        (x0 + y0, x1 + y1)
    };
    let k_lo = ((c_min - origin) / period).ceil() as i64;
    let k_hi = ((c_max - origin) / period).floor() as i64;
    let mut struts = Vec::new();
    for k in k_lo..=k_hi {
        let c = origin + k as f64 * period;
        // y-range where the line stays inside the rectangle.
        let (ya, yb) = if sign > 0.0 {
            (y0.max(x0 - c), y1.min(x1 - c))
        } else {
            (y0.max(c - x1), y1.min(c - x0))
        };
        if yb - ya <= 1e-9 {
            continue;
        }
        let x_of = |y: f64| if sign > 0.0 { c + y } else { c - y };
        struts.push(Strut {
            p0: [x_of(ya), ya],
            p1: [x_of(yb), yb],
            width,
        });
    }
    struts
}

/// Walls of a pointy-top hexagonal tiling with cell edge `edge`, clipped to
/// the interior quad. Each cell emits its right vertical wall and its two
/// upper walls, so every wall of the tiling appears exactly once.
fn hexagon_walls(interior: &[Point; 4], offset: Point, edge: f64, width: f64) -> Vec<Strut> {
    let [x0, y0] = interior[0];
    let [x1, y1] = interior[2];
    let dx = 3f64.sqrt() * edge;
    let dy = 1.5 * edge;
    let j_lo = ((y0 - offset[1]) / dy).floor() as i64 - 2;
    let j_hi = ((y1 - offset[1]) / dy).ceil() as i64 + 2;
    let i_lo = ((x0 - offset[0]) / dx).floor() as i64 - 2;
    let i_hi = ((x1 - offset[0]) / dx).ceil() as i64 + 2;

    // Vertex directions at 30°, 90°, 150° and 330°.
    let h = 0.5 * dx;
    let v30 = [h, 0.5 * edge];
    let v90 = [0.0, edge];
    let v150 = [-h, 0.5 * edge];
    let v330 = [h, -0.5 * edge];

    let mut struts = Vec::new();
    for j in j_lo..=j_hi {
        let shift = if j.rem_euclid(2) == 1 { h } else { 0.0 };
        let cy = offset[1] + j as f64 * dy;
        for i in i_lo..=i_hi {
            let cx = offset[0] + i as f64 * dx + shift;
            let at = |v: Point| [cx + v[0], cy + v[1]];
            for (a, b) in [(v330, v30), (v30, v90), (v90, v150)] {
                if let Some((p0, p1)) = clip_segment(at(a), at(b), interior) {
                    let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
                    if len > 1e-9 {
                        struts.push(Strut { p0, p1, width });
                    }
                }
            }
        }
    }
    struts
}

//! Line-oriented text form of a [`SliceGeometry`].
//!
//! ```text
//! # transid geometry v1
//! shell <X> <Y> <Z> <thickness> <8 outer coords> <8 inner coords>
//! layer <index> <z_low> <z_high>
//! ...
//! <layer_index> <x0> <y0> <x1> <y1> <width>
//! ...
//! ```
//!
//! One strut per line. Numbers use the shortest representation that parses
//! back to the same `f64`, so a write/read cycle is bit-exact.

use std::fmt::Write as _;

use super::{GeometryError, Layer, Point, Shell, SliceGeometry, Strut};

const HEADER: &str = "# transid geometry v1";

pub fn write_geometry_text(geom: &SliceGeometry) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let sh = &geom.shell;
    let _ = write!(
        out,
        "shell {} {} {} {}",
        sh.size[0], sh.size[1], sh.size[2], sh.thickness
    );
    for p in sh.outer.iter().chain(&sh.inner) {
        let _ = write!(out, " {} {}", p[0], p[1]);
    }
    out.push('\n');
    for (i, l) in geom.layers.iter().enumerate() {
        let _ = writeln!(out, "layer {i} {} {}", l.z_low, l.z_high);
    }
    for (i, l) in geom.layers.iter().enumerate() {
        for s in &l.struts {
            let _ = writeln!(
                out,
                "{i} {} {} {} {} {}",
                s.p0[0], s.p0[1], s.p1[0], s.p1[1], s.width
            );
        }
    }
    out
}

pub fn read_geometry_text(text: &str) -> Result<SliceGeometry, GeometryError> {
    let err = |line: usize, msg: &str| GeometryError::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let nums = |line: usize, fields: &[&str]| -> Result<Vec<f64>, GeometryError> {
        fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| err(line, &format!("bad number `{f}`"))))
            .collect()
    };

    let mut shell: Option<Shell> = None;
    let mut layers: Vec<Layer> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "shell" => {
                let v = nums(ln, &fields[1..])?;
                if v.len() != 20 {
                    return Err(err(ln, "shell needs 20 numbers"));
                }
                let quad = |o: usize| -> [Point; 4] {
                    [
                        [v[o], v[o + 1]],
                        [v[o + 2], v[o + 3]],
                        [v[o + 4], v[o + 5]],
                        [v[o + 6], v[o + 7]],
                    ]
                };
                shell = Some(Shell {
                    size: [v[0], v[1], v[2]],
                    thickness: v[3],
                    outer: quad(4),
                    inner: quad(12),
                });
            }
            "layer" => {
                if fields.len() != 4 {
                    return Err(err(ln, "layer needs index, z_low, z_high"));
                }
                let idx: usize = fields[1].parse().map_err(|_| err(ln, "bad layer index"))?;
                if idx != layers.len() {
                    return Err(err(ln, "layers must be listed in order"));
                }
                let v = nums(ln, &fields[2..])?;
                layers.push(Layer {
                    z_low: v[0],
                    z_high: v[1],
                    struts: Vec::new(),
                });
            }
            _ => {
                if fields.len() != 6 {
                    return Err(err(ln, "strut lines have 6 fields"));
                }
                let idx: usize = fields[0].parse().map_err(|_| err(ln, "bad layer index"))?;
                let v = nums(ln, &fields[1..])?;
                let layer = layers
                    .get_mut(idx)
                    .ok_or_else(|| err(ln, "strut refers to an undeclared layer"))?;
                layer.struts.push(Strut {
                    p0: [v[0], v[1]],
                    p1: [v[2], v[3]],
                    width: v[4],
                });
            }
        }
    }
    let shell = shell.ok_or_else(|| err(0, "missing shell line"))?;
    Ok(SliceGeometry { layers, shell })
}

use super::{MaximalPolytope, NestedTessellation};
use crate::geom::{point2, ConvexPolytope, Dim, Facet, PolytopeJson};
use crate::kernels::SplitKernelSpec;
use crate::measure::DrivingMeasure;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

/// First line of a tessellation export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonlHeader {
    pub window: PolytopeJson,
    pub horizon: f64,
    pub kernel: SplitKernelSpec,
    pub measure: DrivingMeasure,
    pub seed: u64,
    pub maximal_polytopes: usize,
}

/// One maximal polytope per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonlRecord {
    pub birth: f64,
    /// Segment endpoints in 2D, polygon corners in cyclic order in 3D.
    pub geometry: Vec<Vec<f64>>,
    pub cell: usize,
}

pub fn write_jsonl<W: Write>(y: &NestedTessellation, mut out: W) -> io::Result<()> {
    let header = JsonlHeader {
        window: PolytopeJson::from(&y.window),
        horizon: y.horizon,
        kernel: y.kernel,
        measure: y.measure.clone(),
        seed: y.seed,
        maximal_polytopes: y.maximal.len(),
    };
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out)?;
    let d = y.window.dim().get();
    for m in &y.maximal {
        let rec = JsonlRecord {
            birth: m.birth,
            geometry: m
                .facet
                .points
                .iter()
                .map(|p| p.as_slice()[..d].to_vec())
                .collect(),
            cell: m.cell,
        };
        serde_json::to_writer(&mut out, &rec)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Parses an export back into its header and maximal polytopes.
pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<(JsonlHeader, Vec<MaximalPolytope>)> {
    let bad = |line: usize, e: String| {
        io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {e}"))
    };
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| bad(1, "missing header".into()))??;
    let header: JsonlHeader = serde_json::from_str(&first).map_err(|e| bad(1, e.to_string()))?;
    let dim = header.window.dim;
    let mut out = Vec::with_capacity(header.maximal_polytopes);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord =
            serde_json::from_str(&line).map_err(|e| bad(i + 2, e.to_string()))?;
        let points: Vec<_> = rec
            .geometry
            .iter()
            .map(|v| match (dim, v.as_slice()) {
                (Dim::Two, [x, y]) => Ok(point2(*x, *y)),
                (Dim::Three, [x, y, z]) => Ok(crate::geom::point3(*x, *y, *z)),
                _ => Err(bad(i + 2, "point arity does not match the window".into())),
            })
            .collect::<Result<_, _>>()?;
        let normal = match dim {
            Dim::Two if points.len() == 2 => {
                let e = (points[1] - points[0]).normalize();
                point2(-e.y, e.x)
            }
            Dim::Three if points.len() >= 3 => {
                let mut n = crate::geom::Point::zeros();
                for k in 0..points.len() {
                    n += points[k].cross(&points[(k + 1) % points.len()]);
                }
                n.normalize()
            }
            _ => return Err(bad(i + 2, "degenerate geometry".into())),
        };
        out.push(MaximalPolytope {
            facet: Facet { points, normal },
            birth: rec.birth,
            cell: rec.cell,
        });
    }
    if out.len() != header.maximal_polytopes {
        return Err(bad(
            0,
            format!(
                "header announces {} records, found {}",
                header.maximal_polytopes,
                out.len()
            ),
        ));
    }
    Ok((header, out))
}

/// Linear blue-to-red ramp over `[0, 1]`.
fn ramp(x: f64) -> String {
    let x = x.clamp(0.0, 1.0);
    let r = (40.0 + 215.0 * x) as u8;
    let g = (90.0 + 60.0 * (1.0 - (2.0 * x - 1.0).abs())) as u8;
    let b = (255.0 - 215.0 * x) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// SVG drawing of a planar tessellation, segments colored by birth time.
/// Returns `None` for spatial tessellations.
pub fn svg(y: &NestedTessellation, width_px: f64) -> Option<String> {
    if y.window.dim() != Dim::Two {
        return None;
    }
    let (lo, hi) = y.window.bounds();
    let span = (hi - lo).max();
    let scale = width_px / span;
    let map = |p: &crate::geom::Point| ((p.x - lo.x) * scale, (hi.y - p.y) * scale);
    let (w, h) = ((hi.x - lo.x) * scale, (hi.y - lo.y) * scale);
    let stroke = (span * scale / 800.0).max(0.5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let outline: Vec<String> = y
        .window
        .vertices()
        .iter()
        .map(|p| {
            let (x, y) = map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        s,
        r#"<polygon points="{}" fill="white" stroke="black" stroke-width="{:.3}"/>"#,
        outline.join(" "),
        2.0 * stroke
    );
    let horizon = if y.horizon > 0.0 { y.horizon } else { 1.0 };
    for m in &y.maximal {
        let (x1, y1) = map(&m.facet.points[0]);
        let (x2, y2) = map(&m.facet.points[1]);
        let _ = writeln!(
            s,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{}" stroke-width="{stroke:.3}"><title>t={:.4}</title></line>"#,
            ramp(m.birth / horizon),
            m.birth
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

impl TryFrom<&JsonlHeader> for ConvexPolytope {
    type Error = crate::geom::GeomError;

    fn try_from(h: &JsonlHeader) -> Result<Self, Self::Error> {
        ConvexPolytope::try_from(h.window.clone())
    }
}

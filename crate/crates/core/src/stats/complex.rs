//! Vertices and edges of a finished tessellation.
//!
//! The complex is built from straight "lines": maximal segments in 2D and the
//! sides of maximal polygons in 3D (sides lying on the window boundary are
//! dropped). Every tessellation edge is covered by exactly one line.

use crate::dynamics::NestedTessellation;
use crate::geom::{ConvexPolytope, Dim, Point};
use serde::Serialize;
use std::collections::HashMap;

/// Vertex merge tolerance relative to the window diameter.
pub const MERGE_TOL: f64 = 1e-7;
/// Threshold on `1 + ⟨u₁, u₂⟩` for an opposite pair of edge directions.
pub const COLLINEAR_TOL: f64 = 1e-6;

/// Generic direction used to pick lower endpoints and lowest corners.
pub fn reference_dir() -> Point {
    Point::new(0.274_9, 0.831_5, 0.482_7).normalize()
}

/// Reference point of a segment: its endpoint lower along [`reference_dir`].
pub fn lower_endpoint(a: &Point, b: &Point) -> Point {
    let g = reference_dir();
    if a.dot(&g) <= b.dot(&g) {
        *a
    } else {
        *b
    }
}

/// Lowest vertex of a polytope along [`reference_dir`].
pub fn lowest_corner(c: &ConvexPolytope) -> Point {
    let g = reference_dir();
    *c.vertices()
        .iter()
        .min_by(|a, b| a.dot(&g).total_cmp(&b.dot(&g)))
        .expect("polytope has vertices")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexClass {
    T,
    X,
    WindowBoundary,
    /// Interior vertex matching neither pattern.
    Other,
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexRecord {
    pub location: Point,
    /// Unit directions of the edges leaving the vertex.
    pub incident_edges: Vec<Point>,
    pub vclass: VertexClass,
}

impl VertexRecord {
    pub fn degree(&self) -> usize {
        self.incident_edges.len()
    }

    pub fn is_interior(&self) -> bool {
        self.vclass != VertexClass::WindowBoundary
    }
}

#[derive(Clone, Debug)]
pub struct VertexComplex {
    pub vertices: Vec<VertexRecord>,
    pub lines: Vec<(Point, Point)>,
    /// Vertex ids met along each line, in order from its first endpoint.
    pub line_vertices: Vec<Vec<usize>>,
    /// Pairs of vertex ids.
    pub edges: Vec<(usize, usize)>,
    pub tol: f64,
}

/// Segments carrying the edges of `y`.
pub fn tessellation_lines(y: &NestedTessellation) -> Vec<(Point, Point)> {
    let tol = MERGE_TOL * y.window.diameter();
    match y.window.dim() {
        Dim::Two => y
            .maximal
            .iter()
            .map(|m| (m.facet.points[0], m.facet.points[1]))
            .collect(),
        Dim::Three => y
            .maximal
            .iter()
            .flat_map(|m| m.facet.sides())
            .filter(|(a, b)| y.window.depth(&((a + b) * 0.5)) > tol)
            .collect(),
    }
}

/// Vertices of `y` lying in `inner`.
pub fn build_vertex_complex(y: &NestedTessellation, inner: &ConvexPolytope) -> Vec<VertexRecord> {
    let cx = VertexComplex::from_tessellation(y);
    if inner.volume() < 0.999 * y.window.volume() {
        let clearance = y
            .leaves()
            .filter(|n| {
                n.polytope
                    .vertices()
                    .iter()
                    .any(|v| y.window.depth(v) <= cx.tol)
            })
            .any(|n| n.polytope.vertices().iter().any(|v| inner.contains(v, 0.0)));
        if clearance {
            log::warn!(
                "inner window meets cells touching the window boundary; clearance too small"
            );
        }
    }
    cx.vertices
        .into_iter()
        .filter(|v| inner.contains(&v.location, 0.0))
        .collect()
}

/// Closest points of segments `p1q1` and `p2q2` as parameters `(s, t)`.
fn closest_params(p1: &Point, q1: &Point, p2: &Point, q2: &Point) -> (f64, f64) {
    let (d1, d2, r) = (q1 - p1, q2 - p2, p1 - p2);
    let (a, e, f) = (d1.dot(&d1), d2.dot(&d2), d2.dot(&r));
    let (b, c) = (d1.dot(&d2), d1.dot(&r));
    let denom = a * e - b * b;
    let mut s = if denom > 1e-14 * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

type Key = (i64, i64, i64);

fn key(p: &Point, h: f64) -> Key {
    (
        (p.x / h).floor() as i64,
        (p.y / h).floor() as i64,
        (p.z / h).floor() as i64,
    )
}

fn neighbors(k: Key, dim: Dim) -> impl Iterator<Item = Key> {
    let dz = if dim == Dim::Three { -1..=1 } else { 0..=0 };
    dz.flat_map(move |z| {
        (-1..=1).flat_map(move |y| (-1..=1).map(move |x| (k.0 + x, k.1 + y, k.2 + z)))
    })
}

/// Merges points closer than `tol`.
struct PointIndex {
    h: f64,
    tol: f64,
    dim: Dim,
    grid: HashMap<Key, Vec<usize>>,
    points: Vec<Point>,
}

impl PointIndex {
    fn insert(&mut self, p: Point) -> usize {
        let k = key(&p, self.h);
        for n in neighbors(k, self.dim) {
            if let Some(ids) = self.grid.get(&n) {
                if let Some(&id) = ids
                    .iter()
                    .find(|&&id| (self.points[id] - p).norm() <= self.tol)
                {
                    return id;
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.grid.entry(k).or_default().push(id);
        id
    }
}

impl VertexComplex {
    pub fn from_tessellation(y: &NestedTessellation) -> Self {
        Self::from_lines(tessellation_lines(y), &y.window)
    }

    pub fn from_lines(lines: Vec<(Point, Point)>, window: &ConvexPolytope) -> Self {
        let dim = window.dim();
        let tol = MERGE_TOL * window.diameter();
        let total: f64 = lines.iter().map(|(a, b)| (b - a).norm()).sum();
        let h = (total / lines.len().max(1) as f64)
            .max(1e-3 * window.diameter())
            .max(8.0 * tol);

        // Bucket every line by the grid cells it passes through.
        let mut grid: HashMap<Key, Vec<u32>> = HashMap::new();
        let mut touched: Vec<Vec<Key>> = Vec::with_capacity(lines.len());
        for (i, (a, b)) in lines.iter().enumerate() {
            let steps = ((b - a).norm() / (0.5 * h)).ceil() as usize + 1;
            let mut keys: Vec<Key> = (0..=steps)
                .map(|k| key(&(a + (b - a) * (k as f64 / steps as f64)), h))
                .collect();
            keys.sort_unstable();
            keys.dedup();
            for k in &keys {
                grid.entry(*k).or_default().push(i as u32);
            }
            touched.push(keys);
        }
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (i, keys) in touched.iter().enumerate() {
            for k in keys {
                for n in neighbors(*k, dim) {
                    if let Some(js) = grid.get(&n) {
                        pairs.extend(
                            js.iter()
                                .filter(|&&j| j as usize > i)
                                .map(|&j| (i as u32, j)),
                        );
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        // Incidences: (parameter along line, point).
        let mut inc: Vec<Vec<(f64, Point)>> = lines
            .iter()
            .map(|(a, b)| vec![(0.0, *a), (1.0, *b)])
            .collect();
        for (i, j) in pairs {
            let (i, j) = (i as usize, j as usize);
            let ((p1, q1), (p2, q2)) = (lines[i], lines[j]);
            let (s, t) = closest_params(&p1, &q1, &p2, &q2);
            let (x1, x2) = (p1 + (q1 - p1) * s, p2 + (q2 - p2) * t);
            if (x1 - x2).norm() <= tol {
                let m = (x1 + x2) * 0.5;
                inc[i].push((s, m));
                inc[j].push((t, m));
            }
        }

        let mut index = PointIndex {
            h: 4.0 * tol,
            tol,
            dim,
            grid: HashMap::new(),
            points: Vec::new(),
        };
        let mut line_vertices = Vec::with_capacity(lines.len());
        let mut dirs: Vec<Vec<Point>> = Vec::new();
        let mut edges = Vec::new();
        for (l, mut list) in lines.iter().zip(inc) {
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut ids: Vec<usize> = list.into_iter().map(|(_, p)| index.insert(p)).collect();
            ids.dedup();
            dirs.resize(index.points.len(), Vec::new());
            let d = (l.1 - l.0).normalize();
            let last = ids.len() - 1;
            for (k, &v) in ids.iter().enumerate() {
                if k > 0 {
                    dirs[v].push(-d);
                }
                if k < last {
                    dirs[v].push(d);
                    edges.push((v, ids[k + 1]));
                }
            }
            line_vertices.push(ids);
        }
        let vertices = index
            .points
            .iter()
            .zip(dirs)
            .map(|(p, incident_edges)| {
                let vclass = if window.depth(p) <= tol {
                    VertexClass::WindowBoundary
                } else {
                    classify(&incident_edges)
                };
                VertexRecord {
                    location: *p,
                    incident_edges,
                    vclass,
                }
            })
            .collect();
        VertexComplex {
            vertices,
            lines,
            line_vertices,
            edges,
            tol,
        }
    }

    /// Interior vertices (not on the window boundary).
    pub fn interior(&self) -> impl Iterator<Item = &VertexRecord> {
        self.vertices.iter().filter(|v| v.is_interior())
    }
}

/// T for one opposite pair of directions, X for two.
pub fn classify(dirs: &[Point]) -> VertexClass {
    let mut pairs = 0;
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            if 1.0 + dirs[i].dot(&dirs[j]) < COLLINEAR_TOL {
                pairs += 1;
            }
        }
    }
    match pairs {
        1 => VertexClass::T,
        2 => VertexClass::X,
        _ => VertexClass::Other,
    }
}

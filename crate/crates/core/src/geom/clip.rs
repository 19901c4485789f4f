use super::polytope::signed_area;
use super::{
    plane_basis, ConvexPolytope, Dim, GeomError, Halfspace, Hyperplane, Point, Side, Tolerance,
};
use std::collections::HashMap;

/// The `(d-1)`-dimensional section `H ∩ c`: a segment (two points) in 2D, a
/// convex polygon in cyclic order in 3D.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub points: Vec<Point>,
    pub normal: Point,
}

/// Result of [`split_polytope`].
#[derive(Clone, Debug)]
pub struct Split {
    pub plus: ConvexPolytope,
    pub minus: ConvexPolytope,
    pub facet: Facet,
}

/// `c ∩ {<x,u> <= r}` (minus) or `c ∩ {<x,u> >= r}` (plus).
///
/// `Ok(None)` when the halfspace misses the interior of `c`.
pub fn clip_halfspace(
    c: &ConvexPolytope,
    h: &Hyperplane,
    side: Side,
    tol: Tolerance,
) -> Result<Option<ConvexPolytope>, GeomError> {
    clip_by(c, &Halfspace::from_side(h, side), tol)
}

/// Splits `c` along `h` into two pieces of volume at least `tol.eps_vol`.
pub fn split_polytope(
    c: &ConvexPolytope,
    h: &Hyperplane,
    tol: Tolerance,
) -> Result<Split, GeomError> {
    let plus = clip_halfspace(c, h, Side::Plus, tol)?.ok_or(GeomError::NotSeparating)?;
    let minus = clip_halfspace(c, h, Side::Minus, tol)?.ok_or(GeomError::NotSeparating)?;
    let facet = section(c, h, tol.eps_geom).ok_or(GeomError::NotSeparating)?;
    Ok(Split { plus, minus, facet })
}

/// Points of `c` at distance at least `r` from its boundary, or `None`.
pub fn erosion(c: &ConvexPolytope, r: f64) -> Option<ConvexPolytope> {
    if r <= 0.0 {
        return Some(c.clone());
    }
    let tol = Tolerance {
        eps_geom: 1e-12 * c.diameter(),
        eps_vol: 0.0,
    };
    let mut out = c.clone();
    for hs in c.facets() {
        match clip_by(&out, &hs.shrunk(r), tol) {
            Ok(Some(p)) if p.volume() > 0.0 => out = p,
            _ => return None,
        }
    }
    Some(out)
}

/// Core halfspace clip shared by all public entry points.
pub(crate) fn clip_by(
    c: &ConvexPolytope,
    hs: &Halfspace,
    tol: Tolerance,
) -> Result<Option<ConvexPolytope>, GeomError> {
    let mut dist: Vec<f64> = c.vertices().iter().map(|v| hs.excess(v)).collect();
    for d in &mut dist {
        if d.abs() <= tol.eps_geom {
            *d = 0.0;
        }
    }
    if !dist.iter().any(|&d| d < 0.0) {
        return Ok(None);
    }
    if !dist.iter().any(|&d| d > 0.0) {
        return Ok(Some(c.clone()));
    }
    let piece = match c.dim() {
        Dim::Two => clip_polygon(c.vertices(), &dist, hs),
        Dim::Three => clip_polyhedron(c, &dist, hs),
    };
    match piece {
        Some(p) if p.volume() > tol.eps_vol.max(0.0) => Ok(Some(p)),
        _ => Err(GeomError::DegenerateCut),
    }
}

fn project(v: &Point, d: f64, hs: &Halfspace) -> Point {
    if d == 0.0 {
        v - hs.normal * hs.excess(v)
    } else {
        *v
    }
}

fn crossing(a: &Point, b: &Point, da: f64, db: f64) -> Point {
    let s = da / (da - db);
    a + (b - a) * s
}

fn clip_polygon(v: &[Point], dist: &[f64], hs: &Halfspace) -> Option<ConvexPolytope> {
    let n = v.len();
    let mut out: Vec<Point> = Vec::with_capacity(n + 2);
    for i in 0..n {
        let j = (i + 1) % n;
        if dist[i] <= 0.0 {
            out.push(project(&v[i], dist[i], hs));
        }
        if (dist[i] < 0.0 && dist[j] > 0.0) || (dist[i] > 0.0 && dist[j] < 0.0) {
            out.push(crossing(&v[i], &v[j], dist[i], dist[j]));
        }
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    (out.len() >= 3 && signed_area(&out) > 0.0)
        .then(|| ConvexPolytope::from_parts_unchecked(Dim::Two, out, Vec::new()))
}

fn clip_polyhedron(c: &ConvexPolytope, dist: &[f64], hs: &Halfspace) -> Option<ConvexPolytope> {
    let src = c.vertices();
    let mut vertices: Vec<Point> = Vec::new();
    let mut on_plane: Vec<bool> = Vec::new();
    let mut kept: Vec<Option<usize>> = vec![None; src.len()];
    for (i, v) in src.iter().enumerate() {
        if dist[i] <= 0.0 {
            kept[i] = Some(vertices.len());
            vertices.push(project(v, dist[i], hs));
            on_plane.push(dist[i] == 0.0);
        }
    }
    let mut cut: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<Vec<usize>> = Vec::with_capacity(c.faces().len() + 1);
    for f in c.faces() {
        if f.iter().all(|&i| dist[i] == 0.0) {
            continue; // replaced by the cap below
        }
        let mut cycle = Vec::with_capacity(f.len() + 2);
        for k in 0..f.len() {
            let (a, b) = (f[k], f[(k + 1) % f.len()]);
            if let Some(ia) = kept[a] {
                cycle.push(ia);
            }
            if (dist[a] < 0.0 && dist[b] > 0.0) || (dist[a] > 0.0 && dist[b] < 0.0) {
                let key = (a.min(b), a.max(b));
                let idx = *cut.entry(key).or_insert_with(|| {
                    vertices.push(crossing(&src[a], &src[b], dist[a], dist[b]));
                    on_plane.push(true);
                    vertices.len() - 1
                });
                cycle.push(idx);
            }
        }
        cycle.dedup();
        if cycle.len() > 1 && cycle.first() == cycle.last() {
            cycle.pop();
        }
        if cycle.len() >= 3 {
            faces.push(cycle);
        }
    }
    let mut cap: Vec<usize> = (0..vertices.len()).filter(|&i| on_plane[i]).collect();
    if cap.len() >= 3 {
        sort_ccw(&mut cap, &vertices, &hs.normal);
        faces.push(cap);
    }
    if faces.len() < 4 {
        return None;
    }
    let p = compact(vertices, faces);
    (p.volume() > 0.0).then_some(p)
}

/// Orders points of a planar convex set counterclockwise seen from `normal`.
fn sort_ccw(idx: &mut [usize], pts: &[Point], normal: &Point) {
    let (e1, e2) = plane_basis(normal);
    let centroid = idx.iter().map(|&i| pts[i]).sum::<Point>() / idx.len() as f64;
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (pts[a] - centroid, pts[b] - centroid);
        let ta = pa.dot(&e2).atan2(pa.dot(&e1));
        let tb = pb.dot(&e2).atan2(pb.dot(&e1));
        ta.total_cmp(&tb)
    });
}

/// Drops unreferenced vertices and renumbers faces.
fn compact(vertices: Vec<Point>, faces: Vec<Vec<usize>>) -> ConvexPolytope {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut out = Vec::with_capacity(vertices.len());
    let faces = faces
        .into_iter()
        .map(|f| {
            f.into_iter()
                .map(|i| {
                    if map[i] == usize::MAX {
                        map[i] = out.len();
                        out.push(vertices[i]);
                    }
                    map[i]
                })
                .collect()
        })
        .collect();
    ConvexPolytope::from_parts_unchecked(Dim::Three, out, faces)
}

/// `H ∩ c` when `H` meets the interior of `c`.
pub(crate) fn section(c: &ConvexPolytope, h: &Hyperplane, eps: f64) -> Option<Facet> {
    let v = c.vertices();
    let dist: Vec<f64> = v
        .iter()
        .map(|x| {
            let d = h.signed_distance(x);
            if d.abs() <= eps {
                0.0
            } else {
                d
            }
        })
        .collect();
    if !dist.iter().any(|&d| d < 0.0) || !dist.iter().any(|&d| d > 0.0) {
        return None;
    }
    let hs = Halfspace::from_side(h, Side::Minus);
    let mut pts: Vec<Point> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        if dist[i] == 0.0 {
            pts.push(project(x, 0.0, &hs));
        }
    }
    for (a, b) in c.edges() {
        if (dist[a] < 0.0 && dist[b] > 0.0) || (dist[a] > 0.0 && dist[b] < 0.0) {
            pts.push(crossing(&v[a], &v[b], dist[a], dist[b]));
        }
    }
    let normal = h.normal();
    match c.dim() {
        Dim::Two => {
            let dir = super::point2(-normal.y, normal.x);
            let key = |p: &Point| p.dot(&dir);
            let lo = pts
                .iter()
                .copied()
                .min_by(|a, b| key(a).total_cmp(&key(b)))?;
            let hi = pts
                .iter()
                .copied()
                .max_by(|a, b| key(a).total_cmp(&key(b)))?;
            (lo != hi).then(|| Facet {
                points: vec![lo, hi],
                normal,
            })
        }
        Dim::Three => {
            let mut idx: Vec<usize> = (0..pts.len()).collect();
            sort_ccw(&mut idx, &pts, &normal);
            let mut points: Vec<Point> = idx.into_iter().map(|i| pts[i]).collect();
            points.dedup_by(|a, b| (*a - *b).norm() <= eps);
            (points.len() >= 3).then_some(Facet { points, normal })
        }
    }
}

impl Facet {
    /// Length in 2D, area in 3D.
    pub fn measure(&self) -> f64 {
        match self.points.len() {
            0 | 1 => 0.0,
            2 => (self.points[1] - self.points[0]).norm(),
            _ => self.vector_area().norm(),
        }
    }

    fn vector_area(&self) -> Point {
        let n = self.points.len();
        let mut a = Point::zeros();
        for k in 0..n {
            a += self.points[k].cross(&self.points[(k + 1) % n]);
        }
        a * 0.5
    }

    pub fn barycenter(&self) -> Point {
        match self.points.len() {
            2 => (self.points[0] + self.points[1]) * 0.5,
            _ => {
                let o = self.points[0];
                let (mut w, mut c) = (0.0, Point::zeros());
                for k in 1..self.points.len() - 1 {
                    let (a, b) = (self.points[k], self.points[k + 1]);
                    let t = (a - o).cross(&(b - o)).dot(&self.normal);
                    w += t;
                    c += (o + a + b) * t / 3.0;
                }
                c / w
            }
        }
    }

    /// Boundary segments of the facet: the segment itself in 2D, the polygon
    /// sides in 3D.
    pub fn sides(&self) -> Vec<(Point, Point)> {
        let n = self.points.len();
        match n {
            2 => vec![(self.points[0], self.points[1])],
            _ => (0..n)
                .map(|k| (self.points[k], self.points[(k + 1) % n]))
                .collect(),
        }
    }

    /// `self ∩ hs`, or `None` when nothing of positive measure remains.
    pub fn clip(&self, hs: &Halfspace) -> Option<Facet> {
        let d: Vec<f64> = self.points.iter().map(|p| hs.excess(p)).collect();
        if d.iter().all(|&x| x <= 0.0) {
            return Some(self.clone());
        }
        if self.points.len() == 2 {
            let (a, b) = (self.points[0], self.points[1]);
            let (da, db) = (d[0], d[1]);
            if da >= 0.0 && db >= 0.0 {
                return None;
            }
            let x = crossing(&a, &b, da, db);
            let points = if da > 0.0 { vec![x, b] } else { vec![a, x] };
            return Some(Facet {
                points,
                normal: self.normal,
            });
        }
        let n = self.points.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            if d[i] <= 0.0 {
                out.push(self.points[i]);
            }
            if (d[i] < 0.0 && d[j] > 0.0) || (d[i] > 0.0 && d[j] < 0.0) {
                out.push(crossing(&self.points[i], &self.points[j], d[i], d[j]));
            }
        }
        out.dedup();
        (out.len() >= 3)
            .then_some(Facet {
                points: out,
                normal: self.normal,
            })
            .filter(|f| f.measure() > 0.0)
    }

    /// Intersection with a convex polytope of the ambient dimension.
    pub fn clip_to(&self, c: &ConvexPolytope) -> Option<Facet> {
        c.facets().iter().try_fold(self.clone(), |f, hs| f.clip(hs))
    }

    pub fn translated(&self, shift: &Point) -> Facet {
        Facet {
            points: self.points.iter().map(|p| p + shift).collect(),
            normal: self.normal,
        }
    }
}

/// Largest `min_facet dist(x, ∂c)` over `x ∈ H ∩ c`, by bisection on the
/// erosion radius. `None` if `H` misses the interior of `c`.
pub fn hyperplane_depth(c: &ConvexPolytope, h: &Hyperplane) -> Option<f64> {
    let (lo, hi) = c.extent(&h.normal());
    if h.offset() <= lo || h.offset() >= hi {
        return None;
    }
    let hits = |r: f64| {
        erosion(c, r).is_some_and(|e| {
            let (a, b) = e.extent(&h.normal());
            a <= h.offset() && h.offset() <= b
        })
    };
    let (mut a, mut b) = (0.0, 0.5 * c.min_width());
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if hits(m) {
            a = m;
        } else {
            b = m;
        }
    }
    Some(a)
}

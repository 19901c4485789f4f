use super::{point2, Dim, GeomError, Halfspace, Point};
use std::collections::HashMap;
use std::f64::consts::PI;

/// A bounded convex cell with nonempty interior.
///
/// In 2D `vertices` is the counterclockwise boundary cycle and `faces` is
/// empty. In 3D every face is a vertex-index cycle whose Newell normal points
/// outward.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolytope {
    dim: Dim,
    vertices: Vec<Point>,
    faces: Vec<Vec<usize>>,
}

impl ConvexPolytope {
    /// Builds a polygon from its boundary cycle (either orientation).
    pub fn polygon(vertices: Vec<Point>) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::InvalidPolytope(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        let mut vertices: Vec<Point> = vertices.into_iter().map(|p| point2(p.x, p.y)).collect();
        let area = signed_area(&vertices);
        if area.abs() <= 0.0 {
            return Err(GeomError::InvalidPolytope("polygon has zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let scale = diameter_of(&vertices);
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if cross2(&(b - a), &(c - b)) < -1e-9 * scale * scale {
                return Err(GeomError::InvalidPolytope("polygon is not convex".into()));
            }
        }
        Ok(ConvexPolytope {
            dim: Dim::Two,
            vertices,
            faces: Vec::new(),
        })
    }

    /// Convex hull of a planar point set (Andrew's monotone chain).
    pub fn convex_hull_2d(points: &[Point]) -> Result<Self, GeomError> {
        let mut pts: Vec<Point> = points.iter().map(|p| point2(p.x, p.y)).collect();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return Err(GeomError::InvalidPolytope(
                "hull needs 3 distinct points".into(),
            ));
        }
        let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
                Box::new(pts.iter())
            } else {
                Box::new(pts.iter().rev())
            };
            for p in iter {
                while hull.len() >= start + 2
                    && cross2(
                        &(hull[hull.len() - 1] - hull[hull.len() - 2]),
                        &(p - hull[hull.len() - 1]),
                    ) <= 0.0
                {
                    hull.pop();
                }
                hull.push(*p);
            }
            hull.pop();
        }
        Self::polygon(hull)
    }

    /// Builds a polyhedron, checking closure, outward orientation and convexity.
    pub fn polyhedron(vertices: Vec<Point>, faces: Vec<Vec<usize>>) -> Result<Self, GeomError> {
        if faces.len() < 4 {
            return Err(GeomError::InvalidPolytope(
                "polyhedron needs at least 4 faces".into(),
            ));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &faces {
            if f.len() < 3 || f.iter().any(|&i| i >= vertices.len()) {
                return Err(GeomError::InvalidPolytope("bad face cycle".into()));
            }
            for k in 0..f.len() {
                let e = (f[k], f[(k + 1) % f.len()]);
                *directed.entry(e).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 || directed.get(&(b, a)) != Some(&1) {
                return Err(GeomError::InvalidPolytope("faces do not close up".into()));
            }
        }
        let p = ConvexPolytope {
            dim: Dim::Three,
            vertices,
            faces,
        };
        if p.volume() <= 0.0 {
            return Err(GeomError::InvalidPolytope(
                "faces are not outward oriented".into(),
            ));
        }
        let tol = 1e-9 * p.diameter();
        for hs in p.facets() {
            if p.vertices.iter().any(|v| hs.excess(v) > tol) {
                return Err(GeomError::InvalidPolytope(
                    "polyhedron is not convex".into(),
                ));
            }
        }
        Ok(p)
    }

    pub(crate) fn from_parts_unchecked(
        dim: Dim,
        vertices: Vec<Point>,
        faces: Vec<Vec<usize>>,
    ) -> Self {
        ConvexPolytope {
            dim,
            vertices,
            faces,
        }
    }

    pub fn rectangle(min: [f64; 2], max: [f64; 2]) -> Self {
        Self::polygon(vec![
            point2(min[0], min[1]),
            point2(max[0], min[1]),
            point2(max[0], max[1]),
            point2(min[0], max[1]),
        ])
        .expect("rectangle with positive extent")
    }

    pub fn square(side: f64) -> Self {
        Self::rectangle([0.0, 0.0], [side, side])
    }

    pub fn unit_square() -> Self {
        Self::square(1.0)
    }

    pub fn cuboid(min: [f64; 3], max: [f64; 3]) -> Self {
        let mut vertices = Vec::with_capacity(8);
        for i in 0..8 {
            vertices.push(Point::new(
                if i & 1 == 0 { min[0] } else { max[0] },
                if i & 2 == 0 { min[1] } else { max[1] },
                if i & 4 == 0 { min[2] } else { max[2] },
            ));
        }
        let faces = vec![
            vec![0, 2, 3, 1], // z = min
            vec![4, 5, 7, 6], // z = max
            vec![0, 1, 5, 4], // y = min
            vec![2, 6, 7, 3], // y = max
            vec![0, 4, 6, 2], // x = min
            vec![1, 3, 7, 5], // x = max
        ];
        Self::polyhedron(vertices, faces).expect("cuboid with positive extent")
    }

    pub fn cube(side: f64) -> Self {
        Self::cuboid([0.0; 3], [side; 3])
    }

    pub fn unit_cube() -> Self {
        Self::cube(1.0)
    }

    /// Axis-aligned box `[min, max]` in the given dimension.
    pub fn aa_box(dim: Dim, min: &[f64], max: &[f64]) -> Self {
        match dim {
            Dim::Two => Self::rectangle([min[0], min[1]], [max[0], max[1]]),
            Dim::Three => Self::cuboid([min[0], min[1], min[2]], [max[0], max[1], max[2]]),
        }
    }

    /// Regular `n`-gon inscribed in the circle of radius `r` around `center`.
    pub fn regular_polygon(n: usize, r: f64, center: Point) -> Self {
        let pts = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                point2(center.x + r * a.cos(), center.y + r * a.sin())
            })
            .collect();
        Self::polygon(pts).expect("regular polygon")
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn volume(&self) -> f64 {
        match self.dim {
            Dim::Two => signed_area(&self.vertices),
            Dim::Three => {
                let o = self.vertices[0];
                self.fan_tetrahedra(&o).map(|(v, _)| v).sum()
            }
        }
    }

    /// Volume centroid.
    pub fn barycenter(&self) -> Point {
        match self.dim {
            Dim::Two => {
                let n = self.vertices.len();
                let o = self.vertices[0];
                let (mut a, mut c) = (0.0, Point::zeros());
                for i in 0..n {
                    let p = self.vertices[i] - o;
                    let q = self.vertices[(i + 1) % n] - o;
                    let w = cross2(&p, &q);
                    a += w;
                    c += (p + q) * w;
                }
                o + c / (3.0 * a)
            }
            Dim::Three => {
                let o = self.vertices[0];
                let (mut v, mut c) = (0.0, Point::zeros());
                for (tv, tc) in self.fan_tetrahedra(&o) {
                    v += tv;
                    c += tc * tv;
                }
                c / v
            }
        }
    }

    /// Signed volumes and centroids of the fan tetrahedra from `o`.
    fn fan_tetrahedra<'a>(&'a self, o: &'a Point) -> impl Iterator<Item = (f64, Point)> + 'a {
        self.faces.iter().flat_map(move |f| {
            let a = self.vertices[f[0]];
            (1..f.len() - 1).map(move |k| {
                let b = self.vertices[f[k]];
                let c = self.vertices[f[k + 1]];
                let v = (a - o).dot(&(b - o).cross(&(c - o))) / 6.0;
                (v, (o + a + b + c) / 4.0)
            })
        })
    }

    /// Perimeter in 2D, surface area in 3D.
    pub fn boundary_measure(&self) -> f64 {
        match self.dim {
            Dim::Two => {
                let n = self.vertices.len();
                (0..n)
                    .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
                    .sum()
            }
            Dim::Three => self
                .faces
                .iter()
                .map(|f| self.face_vector_area(f).norm())
                .sum(),
        }
    }

    /// Newell vector of a face: outward normal scaled by the face area.
    fn face_vector_area(&self, f: &[usize]) -> Point {
        let mut n = Point::zeros();
        for k in 0..f.len() {
            let a = self.vertices[f[k]];
            let b = self.vertices[f[(k + 1) % f.len()]];
            n += a.cross(&b);
        }
        n * 0.5
    }

    /// Outward facet halfspaces `{<x, n> <= b}`.
    pub fn facets(&self) -> Vec<Halfspace> {
        match self.dim {
            Dim::Two => {
                let n = self.vertices.len();
                (0..n)
                    .filter_map(|i| {
                        let a = self.vertices[i];
                        let b = self.vertices[(i + 1) % n];
                        let e = b - a;
                        let len = e.norm();
                        (len > 0.0).then(|| {
                            let normal = point2(e.y, -e.x) / len;
                            Halfspace {
                                normal,
                                offset: normal.dot(&a),
                            }
                        })
                    })
                    .collect()
            }
            Dim::Three => self
                .faces
                .iter()
                .filter_map(|f| {
                    let n = self.face_vector_area(f);
                    let len = n.norm();
                    (len > 0.0).then(|| {
                        let normal = n / len;
                        let centroid =
                            f.iter().map(|&i| self.vertices[i]).sum::<Point>() / f.len() as f64;
                        Halfspace {
                            normal,
                            offset: normal.dot(&centroid),
                        }
                    })
                })
                .collect(),
        }
    }

    /// Undirected edges as vertex-index pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match self.dim {
            Dim::Two => {
                let n = self.vertices.len();
                (0..n).map(|i| (i, (i + 1) % n)).collect()
            }
            Dim::Three => {
                let mut out = Vec::new();
                for f in &self.faces {
                    for k in 0..f.len() {
                        let (a, b) = (f[k], f[(k + 1) % f.len()]);
                        if a < b {
                            out.push((a, b));
                        }
                    }
                }
                out
            }
        }
    }

    /// Support function `h(u) = max <v, u>`.
    pub fn support(&self, u: &Point) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dot(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(min <v,u>, max <v,u>)` over the vertices.
    pub fn extent(&self, u: &Point) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                let s = v.dot(u);
                (lo.min(s), hi.max(s))
            })
    }

    /// `w(u) = h(u) + h(-u)`.
    pub fn width(&self, u: &Point) -> f64 {
        let (lo, hi) = self.extent(u);
        hi - lo
    }

    pub fn diameter(&self) -> f64 {
        diameter_of(&self.vertices)
    }

    /// Smallest width over all directions. Attained at a facet normal in 2D,
    /// and at a facet normal or an edge-edge cross product in 3D.
    pub fn min_width(&self) -> f64 {
        let mut best = self
            .facets()
            .iter()
            .map(|h| self.width(&h.normal))
            .fold(f64::INFINITY, f64::min);
        if self.dim == Dim::Three {
            let dirs: Vec<Point> = self
                .edges()
                .iter()
                .map(|&(a, b)| self.vertices[b] - self.vertices[a])
                .collect();
            for i in 0..dirs.len() {
                for j in (i + 1)..dirs.len() {
                    let c = dirs[i].cross(&dirs[j]);
                    let len = c.norm();
                    if len > 1e-12 * dirs[i].norm() * dirs[j].norm() {
                        best = best.min(self.width(&(c / len)));
                    }
                }
            }
        }
        best
    }

    /// Isotropic mean width: perimeter / pi in 2D, `sum_e l_e delta_e / (4 pi)`
    /// in 3D with `delta_e` the exterior dihedral angle at edge `e`.
    pub fn mean_width(&self) -> f64 {
        match self.dim {
            Dim::Two => self.boundary_measure() / PI,
            Dim::Three => {
                let normals: Vec<Point> = self
                    .faces
                    .iter()
                    .map(|f| {
                        let n = self.face_vector_area(f);
                        let len = n.norm();
                        if len > 0.0 {
                            n / len
                        } else {
                            n
                        }
                    })
                    .collect();
                let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
                for (fi, f) in self.faces.iter().enumerate() {
                    for k in 0..f.len() {
                        owner.insert((f[k], f[(k + 1) % f.len()]), fi);
                    }
                }
                // Summed in face order so the result does not depend on hashing.
                let mut total = 0.0;
                for (fa, f) in self.faces.iter().enumerate() {
                    for k in 0..f.len() {
                        let (a, b) = (f[k], f[(k + 1) % f.len()]);
                        if a < b {
                            if let Some(&fb) = owner.get(&(b, a)) {
                                let cos = normals[fa].dot(&normals[fb]).clamp(-1.0, 1.0);
                                total += (self.vertices[b] - self.vertices[a]).norm() * cos.acos();
                            }
                        }
                    }
                }
                total / (4.0 * PI)
            }
        }
    }

    pub fn translated(&self, shift: &Point) -> Self {
        let mut p = self.clone();
        for v in &mut p.vertices {
            *v += shift;
        }
        p
    }

    /// Image under `x -> alpha x`, `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut p = self.clone();
        for v in &mut p.vertices {
            *v *= alpha;
        }
        p
    }

    /// Image under `x -> m x` for an orthogonal `m` with `det m = 1`.
    pub fn rotated(&self, m: &nalgebra::Matrix3<f64>) -> Self {
        let mut p = self.clone();
        for v in &mut p.vertices {
            *v = m * *v;
        }
        p
    }

    /// Translate so that the barycenter sits at the origin.
    pub fn recentered(&self) -> Self {
        self.translated(&-self.barycenter())
    }

    /// Membership with slack `eps` (positive slack enlarges the body).
    pub fn contains(&self, x: &Point, eps: f64) -> bool {
        self.facets().iter().all(|h| h.excess(x) <= eps)
    }

    /// Distance from an interior point to the boundary (negative outside).
    pub fn depth(&self, x: &Point) -> f64 {
        self.facets()
            .iter()
            .map(|h| -h.excess(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        if self.dim == Dim::Two {
            lo.z = 0.0;
            hi.z = 0.0;
        }
        (lo, hi)
    }

    /// Number of genuine corners: polygon vertices with a nonzero turn, or
    /// polyhedron vertices not lying in the relative interior of an edge or
    /// face.
    pub fn corner_count(&self) -> usize {
        let tol = 1e-9;
        match self.dim {
            Dim::Two => {
                let n = self.vertices.len();
                (0..n)
                    .filter(|&i| {
                        let a = self.vertices[(i + n - 1) % n];
                        let b = self.vertices[i];
                        let c = self.vertices[(i + 1) % n];
                        let (u, v) = (b - a, c - b);
                        cross2(&u, &v) > tol * u.norm() * v.norm()
                    })
                    .count()
            }
            Dim::Three => {
                let facets = self.facets();
                let scale = self.diameter();
                (0..self.vertices.len())
                    .filter(|&i| {
                        let v = self.vertices[i];
                        let mut normals: Vec<Point> = Vec::new();
                        for h in &facets {
                            if h.excess(&v).abs() <= 1e-9 * scale
                                && !normals.iter().any(|n| (n - h.normal).norm() < 1e-9)
                            {
                                normals.push(h.normal);
                            }
                        }
                        // A corner needs three linearly independent facet normals.
                        normals.iter().enumerate().any(|(a, na)| {
                            normals.iter().enumerate().skip(a + 1).any(|(b, nb)| {
                                normals
                                    .iter()
                                    .skip(b + 1)
                                    .any(|nc| na.cross(nb).dot(nc).abs() > tol)
                            })
                        })
                    })
                    .count()
            }
        }
    }

    /// Scale-free roundness: `4 pi A / P^2` in 2D, `36 pi V^2 / S^3` in 3D.
    pub fn isoperimetric_ratio(&self) -> f64 {
        let v = self.volume();
        let s = self.boundary_measure();
        match self.dim {
            Dim::Two => 4.0 * PI * v / (s * s),
            Dim::Three => 36.0 * PI * v * v / (s * s * s),
        }
    }

    /// Inradius: largest `r` with a nonempty erosion, found by bisection.
    pub fn inradius(&self) -> f64 {
        let (mut lo, mut hi) = (0.0, 0.5 * self.min_width());
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if super::erosion(self, mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

pub(crate) fn cross2(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

pub(crate) fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let o = v[0];
    (1..n - 1)
        .map(|i| cross2(&(v[i] - o), &(v[i + 1] - o)))
        .sum::<f64>()
        * 0.5
}

fn diameter_of(v: &[Point]) -> f64 {
    let mut d2: f64 = 0.0;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            d2 = d2.max((v[i] - v[j]).norm_squared());
        }
    }
    d2.sqrt()
}

//! Planar mean values.
//!
//! Counts use reference points so that every object is counted once and
//! boundary truncation does not bias the result: edges, sides and I-segments
//! by their lower endpoint, cells by their lowest corner, all required to lie
//! in the inner window and off the window boundary.

use super::census::{census, CensusCell};
use super::complex::{lower_endpoint, lowest_corner, VertexClass, VertexComplex, MERGE_TOL};
use super::jackknife::tally;
use super::{rows, StatRow, TessellationStats};
use crate::dynamics::NestedTessellation;
use crate::geom::{ConvexPolytope, Dim, Point};
use std::f64::consts::PI;

tally!(
    /// Per-replication sums for the planar estimators.
    PlanarTally {
        area,
        length,
        vertices,
        t_vertices,
        x_vertices,
        vertex_degrees,
        edges,
        sides,
        segments,
        cells,
        census_weight,
        census_perimeter,
        census_area,
        census_corners,
        census_lambda,
    }
);

/// Corners of a polygon, skipping vertices without a turn.
pub fn polygon_corners(c: &ConvexPolytope) -> Vec<Point> {
    let v = c.vertices();
    let n = v.len();
    (0..n)
        .filter(|&i| {
            let (u, w) = (v[i] - v[(i + n - 1) % n], v[(i + 1) % n] - v[i]);
            u.x * w.y - u.y * w.x > 1e-9 * u.norm() * w.norm()
        })
        .map(|i| v[i])
        .collect()
}

pub fn planar_tally(y: &NestedTessellation, inner: &ConvexPolytope) -> PlanarTally {
    assert_eq!(
        y.window.dim(),
        Dim::Two,
        "planar statistics need a planar tessellation"
    );
    let tol = MERGE_TOL * y.window.diameter();
    let counts = |p: &Point| inner.contains(p, 0.0) && y.window.depth(p) > tol;
    let cx = VertexComplex::from_tessellation(y);
    let mut s = PlanarTally {
        area: inner.volume(),
        ..Default::default()
    };
    for m in &y.maximal {
        if let Some(f) = m.facet.clip_to(inner) {
            s.length += f.measure();
        }
        if counts(&lower_endpoint(&m.facet.points[0], &m.facet.points[1])) {
            s.segments += 1.0;
        }
    }
    for v in cx
        .vertices
        .iter()
        .filter(|v| v.is_interior() && inner.contains(&v.location, 0.0))
    {
        s.vertices += 1.0;
        s.vertex_degrees += v.degree() as f64;
        match v.vclass {
            VertexClass::T => s.t_vertices += 1.0,
            VertexClass::X => s.x_vertices += 1.0,
            _ => {}
        }
    }
    for &(a, b) in &cx.edges {
        let (pa, pb) = (cx.vertices[a].location, cx.vertices[b].location);
        if counts(&lower_endpoint(&pa, &pb)) {
            s.edges += 1.0;
        }
    }
    for leaf in y.leaves() {
        let corners = polygon_corners(&leaf.polytope);
        if counts(&lowest_corner(&leaf.polytope)) {
            s.cells += 1.0;
        }
        let k = corners.len();
        s.sides += (0..k)
            .filter(|&i| counts(&lower_endpoint(&corners[i], &corners[(i + 1) % k])))
            .count() as f64;
    }
    for CensusCell {
        polytope: c,
        weight: w,
    } in census(y, inner)
    {
        s.census_weight += w;
        s.census_perimeter += w * c.boundary_measure();
        s.census_area += w * c.volume();
        s.census_corners += w * polygon_corners(&c).len() as f64;
        s.census_lambda += w * y.measure.hit_mass(&c);
    }
    s
}

/// Pools replications into the planar mean-value table.
pub fn planar_stats(reps: &[PlanarTally], horizon: f64) -> TessellationStats {
    type F<'a> = Box<dyn Fn(&PlanarTally) -> f64 + 'a>;
    let specs: Vec<(&str, F)> = vec![
        ("L_A", Box::new(|s| s.length / s.area)),
        ("lambda_V", Box::new(|s| s.vertices / s.area)),
        ("lambda_E", Box::new(|s| s.edges / s.area)),
        ("lambda_S", Box::new(|s| s.sides / s.area)),
        ("lambda_I", Box::new(|s| s.segments / s.area)),
        ("lambda_C", Box::new(|s| s.cells / s.area)),
        ("L_E", Box::new(|s| s.length / s.edges)),
        ("L_S", Box::new(|s| 2.0 * s.length / s.sides)),
        ("L_I", Box::new(|s| s.length / s.segments)),
        ("p", Box::new(|s| s.census_perimeter / s.census_weight)),
        ("a", Box::new(|s| s.census_area / s.census_weight)),
        ("a_identity", Box::new(|s| s.area / s.cells)),
        ("kappa", Box::new(|s| s.t_vertices / s.vertices)),
        ("x_fraction", Box::new(|s| s.x_vertices / s.vertices)),
        ("mu_VE", Box::new(|s| s.vertex_degrees / s.vertices)),
        ("mu_CV", Box::new(|s| s.vertex_degrees / s.cells)),
        ("nu0_C", Box::new(|s| s.census_corners / s.census_weight)),
        (
            "mean_lambda_mass",
            Box::new(|s| s.census_lambda / s.census_weight),
        ),
        ("xi", Box::new(|_| 1.0)),
        ("ratio_L_I_L_E", Box::new(|s| s.edges / s.segments)),
        ("ratio_L_S_L_E", Box::new(|s| 2.0 * s.edges / s.sides)),
        (
            "ratio_lambda_E_lambda_V",
            Box::new(|s| s.edges / s.vertices),
        ),
        (
            "ratio_lambda_C_lambda_V",
            Box::new(|s| s.cells / s.vertices),
        ),
        (
            "closure_L_A",
            Box::new(|s| s.cells / s.area * s.census_perimeter / s.census_weight / 2.0),
        ),
    ];
    let rows: Vec<StatRow> = rows(reps, specs);
    TessellationStats {
        dim: Dim::Two,
        horizon,
        replications: reps.len(),
        rows,
    }
}

/// Isotropic unit-density STIT values at time `t`.
pub fn planar_targets(t: f64) -> Vec<(&'static str, f64)> {
    let t2 = t * t;
    vec![
        ("L_A", t),
        ("lambda_V", 2.0 * t2 / PI),
        ("lambda_E", 3.0 * t2 / PI),
        ("lambda_S", 4.0 * t2 / PI),
        ("lambda_I", t2 / PI),
        ("lambda_C", t2 / PI),
        ("L_E", PI / (3.0 * t)),
        ("L_S", PI / (2.0 * t)),
        ("L_I", PI / t),
        ("p", 2.0 * PI / t),
        ("a", PI / t2),
        ("a_identity", PI / t2),
        ("kappa", 1.0),
        ("mu_VE", 3.0),
        ("mu_CV", 6.0),
        ("nu0_C", 4.0),
        ("mean_lambda_mass", 2.0 / t),
        ("xi", 1.0),
        ("ratio_L_I_L_E", 3.0),
        ("ratio_L_S_L_E", 1.5),
        ("ratio_lambda_E_lambda_V", 1.5),
        ("ratio_lambda_C_lambda_V", 0.5),
        ("closure_L_A", t),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::simulate_window;
    use crate::geom::point2;
    use crate::kernels::SplitKernelSpec;
    use crate::measure::DrivingMeasure;

    #[test]
    fn corners_skip_collinear_points() {
        let c = ConvexPolytope::polygon(vec![
            point2(0.0, 0.0),
            point2(1.0, 0.0),
            point2(2.0, 0.0),
            point2(2.0, 1.0),
            point2(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(polygon_corners(&c).len(), 4);
    }

    #[test]
    fn empty_tessellation_counts_nothing() {
        let w = ConvexPolytope::square(4.0);
        let y = simulate_window(
            &w,
            &SplitKernelSpec::stit(),
            &DrivingMeasure::isotropic(),
            0.0,
            1,
        )
        .unwrap();
        let s = planar_tally(&y, &w);
        assert_eq!(s.vertices, 0.0);
        assert_eq!(s.segments, 0.0);
        assert_eq!(s.cells, 0.0);
        assert_eq!(s.area, 16.0);
    }

    #[test]
    fn topological_identities_hold_per_run() {
        // In a full window every interior vertex is a T, and each T is the end
        // of one segment, lies inside one other, and adds one side to two cells.
        let w = ConvexPolytope::square(15.0);
        let y = simulate_window(
            &w,
            &SplitKernelSpec::stit(),
            &DrivingMeasure::isotropic(),
            1.0,
            3,
        )
        .unwrap();
        let s = planar_tally(&y, &w);
        assert!(s.vertices > 20.0);
        assert_eq!(s.t_vertices, s.vertices);
        assert_eq!(s.vertex_degrees, 3.0 * s.vertices);
        let st = planar_stats(&[s, s], 1.0);
        assert_eq!(st.value("kappa"), 1.0);
        assert_eq!(st.value("mu_VE"), 3.0);
    }
}

//! Spatial mean values.
//!
//! κ comes from the vertex classification, χ from the Euler-type relation
//! `λ_P = λ_E − λ_V + λ_C`; the remaining adjacency and face counts follow
//! from κ and χ.

use super::census::{census, CensusCell};
use super::complex::{lower_endpoint, lowest_corner, VertexClass, VertexComplex, MERGE_TOL};
use super::jackknife::tally;
use super::{rows, TessellationStats};
use crate::dynamics::NestedTessellation;
use crate::geom::{ConvexPolytope, Dim, Facet, Point};
use std::f64::consts::PI;

tally!(
    /// Per-replication sums for the spatial estimators.
    SpatialTally {
        volume,
        surface,
        length,
        vertices,
        t_vertices,
        x_vertices,
        vertex_degrees,
        edges,
        segments,
        cells,
        census_weight,
        census_corners,
        census_lambda,
    }
);

fn segment_in(a: Point, b: Point, inner: &ConvexPolytope) -> f64 {
    Facet {
        points: vec![a, b],
        normal: Point::zeros(),
    }
    .clip_to(inner)
    .map_or(0.0, |f| f.measure())
}

pub fn spatial_tally(y: &NestedTessellation, inner: &ConvexPolytope) -> SpatialTally {
    assert_eq!(
        y.window.dim(),
        Dim::Three,
        "spatial statistics need a spatial tessellation"
    );
    let tol = MERGE_TOL * y.window.diameter();
    let counts = |p: &Point| inner.contains(p, 0.0) && y.window.depth(p) > tol;
    let cx = VertexComplex::from_tessellation(y);
    let mut s = SpatialTally {
        volume: inner.volume(),
        ..Default::default()
    };
    for m in &y.maximal {
        if let Some(f) = m.facet.clip_to(inner) {
            s.surface += f.measure();
        }
    }
    for &(a, b) in &cx.lines {
        s.length += segment_in(a, b, inner);
        if counts(&lower_endpoint(&a, &b)) {
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
    s.cells = y
        .leaves()
        .filter(|n| counts(&lowest_corner(&n.polytope)))
        .count() as f64;
    for CensusCell {
        polytope: c,
        weight: w,
    } in census(y, inner)
    {
        s.census_weight += w;
        s.census_corners += w * c.corner_count() as f64;
        s.census_lambda += w * y.measure.hit_mass(&c);
    }
    s
}

fn lambda_v(s: &SpatialTally) -> f64 {
    s.vertices / s.volume
}

fn kappa(s: &SpatialTally) -> f64 {
    s.t_vertices / s.vertices
}

fn lambda_p(s: &SpatialTally) -> f64 {
    (s.edges - s.vertices + s.cells) / s.volume
}

fn chi(s: &SpatialTally) -> f64 {
    6.0 * lambda_v(s) / lambda_p(s)
}

/// Pools replications into the spatial mean-value table.
pub fn spatial_stats(reps: &[SpatialTally], horizon: f64) -> TessellationStats {
    type F<'a> = Box<dyn Fn(&SpatialTally) -> f64 + 'a>;
    let specs: Vec<(&str, F)> = vec![
        ("S_V", Box::new(|s| s.surface / s.volume)),
        ("L_V", Box::new(|s| s.length / s.volume)),
        ("lambda_V", Box::new(lambda_v)),
        ("lambda_E", Box::new(|s| s.edges / s.volume)),
        ("lambda_I", Box::new(|s| s.segments / s.volume)),
        ("lambda_C", Box::new(|s| s.cells / s.volume)),
        ("lambda_P", Box::new(lambda_p)),
        (
            "lambda_F",
            Box::new(|s| (12.0 / chi(s) + kappa(s) - 2.0) * lambda_v(s)),
        ),
        ("lambda_S_C", Box::new(|s| (4.0 + kappa(s)) * lambda_v(s))),
        ("lambda_S_P", Box::new(|s| 3.0 * kappa(s) * lambda_v(s))),
        ("L_E", Box::new(|s| s.length / s.edges)),
        ("L_I", Box::new(|s| s.length / s.segments)),
        ("kappa", Box::new(kappa)),
        ("x_fraction", Box::new(|s| s.x_vertices / s.vertices)),
        ("chi", Box::new(chi)),
        ("psi", Box::new(|s| 4.0 - 3.0 * kappa(s))),
        ("tau", Box::new(|s| 1.0 + kappa(s))),
        ("xi", Box::new(|_| 1.0)),
        ("mu_VE", Box::new(|s| s.vertex_degrees / s.vertices)),
        ("mu_EP", Box::new(|_| 3.0)),
        ("mu_CV", Box::new(|s| 4.0 * chi(s) / (6.0 - chi(s)))),
        ("mu_CE", Box::new(|s| 6.0 * chi(s) / (6.0 - chi(s)))),
        ("mu_CP", Box::new(|s| 12.0 / (6.0 - chi(s)))),
        (
            "mu_FP",
            Box::new(|s| 12.0 / (12.0 + chi(s) * (kappa(s) - 2.0))),
        ),
        (
            "nu0_C",
            Box::new(|s| 2.0 * kappa(s) * chi(s) / (6.0 - chi(s))),
        ),
        (
            "nu1_C",
            Box::new(|s| 3.0 * kappa(s) * chi(s) / (6.0 - chi(s))),
        ),
        (
            "nu2_C",
            Box::new(|s| (12.0 + (kappa(s) - 2.0) * chi(s)) / (6.0 - chi(s))),
        ),
        ("nu0_P", Box::new(|s| chi(s) * (4.0 + kappa(s)) / 6.0)),
        (
            "nu0_F",
            Box::new(|s| 6.0 * kappa(s) * chi(s) / (12.0 + chi(s) * (kappa(s) - 2.0))),
        ),
        (
            "nu0_C_census",
            Box::new(|s| s.census_corners / s.census_weight),
        ),
        (
            "mean_lambda_mass",
            Box::new(|s| s.census_lambda / s.census_weight),
        ),
        (
            "ratio_lambda_E_lambda_V",
            Box::new(|s| s.edges / s.vertices),
        ),
        ("chi_lower_margin", Box::new(|s| chi(s) - 4.5)),
        ("chi_upper_margin", Box::new(|s| 6.0 - chi(s))),
        (
            "kappa_margin",
            Box::new(|s| kappa(s) - (12.0 - 2.0 * chi(s)) / chi(s)),
        ),
    ];
    TessellationStats {
        dim: Dim::Three,
        horizon,
        replications: reps.len(),
        rows: rows(reps, specs),
    }
}

/// Isotropic unit-density STIT values at time `t`.
pub fn spatial_targets(t: f64) -> Vec<(&'static str, f64)> {
    let lv = PI * t * t * t / 8.0;
    let (k, x) = (2.0 / 3.0, 36.0 / 7.0);
    vec![
        ("S_V", t),
        ("L_V", PI * t * t / 4.0),
        ("lambda_V", lv),
        ("lambda_E", 2.0 * lv),
        ("lambda_I", k * lv),
        ("lambda_C", (6.0 - x) / x * lv),
        ("lambda_P", 6.0 * lv / x),
        ("kappa", k),
        ("chi", x),
        ("psi", 4.0 - 3.0 * k),
        ("tau", 1.0 + k),
        ("xi", 1.0),
        ("mu_VE", 4.0),
        ("mean_lambda_mass", 3.0 / t),
        ("ratio_lambda_E_lambda_V", 2.0),
    ]
}

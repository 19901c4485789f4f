#![allow(dead_code)]

use nested_tess::geom::{
    clip_halfspace, point2, ConvexPolytope, Hyperplane, Point, Side, Tolerance,
};
use proptest::prelude::*;
use std::f64::consts::PI;

pub fn unit(theta: f64, phi: f64) -> Point {
    Point::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos())
}

/// Convex hull of random points in `[-5, 5]²`.
pub fn polygon() -> impl Strategy<Value = ConvexPolytope> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..12).prop_filter_map(
        "degenerate hull",
        |pts| {
            let pts: Vec<Point> = pts.into_iter().map(|(x, y)| point2(x, y)).collect();
            ConvexPolytope::convex_hull_2d(&pts)
                .ok()
                .filter(|c| c.volume() > 0.5)
        },
    )
}

/// A box with random side lengths cut by random halfspaces that keep the origin.
pub fn polyhedron() -> impl Strategy<Value = ConvexPolytope> {
    (
        (0.5..3.0f64, 0.5..3.0f64, 0.5..3.0f64),
        prop::collection::vec((0.0..2.0 * PI, 0.0..PI, 0.3..1.0f64), 0..6),
    )
        .prop_filter_map("degenerate polyhedron", |((a, b, c), cuts)| {
            let mut p = ConvexPolytope::cuboid([-a, -b, -c], [a, b, c]);
            for (theta, phi, s) in cuts {
                let h = Hyperplane::new(unit(theta, phi), s * a.min(b).min(c));
                let side = if h.signed_distance(&Point::zeros()) <= 0.0 {
                    Side::Minus
                } else {
                    Side::Plus
                };
                p = clip_halfspace(&p, &h, side, Tolerance::for_window(&p)).ok()??;
            }
            (p.volume() > 0.1).then_some(p)
        })
}

pub fn polytope() -> impl Strategy<Value = ConvexPolytope> {
    prop_oneof![polygon(), polyhedron()]
}

/// Uniform random direction in the polytope's dimension, from two angles.
pub fn direction(c: &ConvexPolytope, theta: f64, phi: f64) -> Point {
    match c.dim().get() {
        2 => point2(theta.cos(), theta.sin()),
        _ => unit(theta, phi),
    }
}

mod common;

use common::{direction, polygon, polyhedron, polytope};
use nalgebra::{Rotation3, Unit, Vector3};
use nested_tess::geom::{
    erosion, point2, split_polytope, ConvexPolytope, Dim, Hyperplane, Point, Tolerance,
};
use nested_tess::measure::{DensityGrid, DirectionalDistribution, DrivingMeasure};
use nested_tess::rng::seeded;
use nested_tess::stats::ks_two_sample;
use proptest::prelude::*;
use std::f64::consts::PI;

fn rotation(c: &ConvexPolytope, theta: f64, phi: f64, angle: f64) -> Rotation3<f64> {
    let axis = match c.dim() {
        Dim::Two => Vector3::z(),
        Dim::Three => common::unit(theta, phi),
    };
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle)
}

fn measures(dim: Dim) -> Vec<DrivingMeasure> {
    let grid = match dim {
        Dim::Two => DensityGrid::circle(vec![1.0, 3.0, 0.5, 1.0, 3.0, 0.5]).unwrap(),
        Dim::Three => {
            DensityGrid::sphere(vec![vec![1.0, 2.0, 3.0, 4.0], vec![3.0, 4.0, 1.0, 2.0]]).unwrap()
        }
    };
    let atoms = match dim {
        Dim::Two => vec![(point2(1.0, 0.0), 1.0), (point2(1.0, 2.0), 3.0)],
        Dim::Three => vec![
            (Point::new(1.0, 0.0, 0.0), 1.0),
            (Point::new(0.3, 1.0, -2.0), 2.0),
        ],
    };
    vec![
        DrivingMeasure::isotropic(),
        DrivingMeasure::new(2.5, DirectionalDistribution::atoms(atoms).unwrap()),
        DrivingMeasure::new(0.7, DirectionalDistribution::Density(grid)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clipping_conserves_volume(
        c in polytope(),
        theta in 0.0..2.0 * PI,
        phi in 0.0..PI,
        frac in 0.05..0.95f64,
    ) {
        let u = direction(&c, theta, phi);
        let (lo, hi) = c.extent(&u);
        let h = Hyperplane::new(u, lo + frac * (hi - lo));
        let tol = Tolerance::for_window(&c);
        let Ok(s) = split_polytope(&c, &h, tol) else {
            return Err(TestCaseError::reject("sliver cut"));
        };
        let total = s.plus.volume() + s.minus.volume();
        prop_assert!((total - c.volume()).abs() <= 1e-9 * c.volume());
        let eps = 1e-9 * c.diameter();
        for v in c.vertices() {
            prop_assert!(s.plus.contains(v, eps) || s.minus.contains(v, eps));
        }
        for p in [&s.plus, &s.minus] {
            for v in p.vertices() {
                prop_assert!(c.contains(v, eps));
            }
        }
    }

    #[test]
    fn hit_mass_scales_linearly(c in polytope()) {
        for l in measures(c.dim()) {
            let m = l.hit_mass(&c);
            for alpha in [0.5, 2.0, 10.0] {
                prop_assert!((l.hit_mass(&c.scaled(alpha)) - alpha * m).abs() <= 1e-9 * alpha * m);
            }
        }
    }

    #[test]
    fn isotropic_hit_mass_is_isometry_invariant(
        c in polytope(),
        theta in 0.0..2.0 * PI,
        phi in 0.0..PI,
        angle in 0.0..2.0 * PI,
        shift in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64),
    ) {
        let l = DrivingMeasure::isotropic();
        let mut shift = Point::new(shift.0, shift.1, shift.2);
        if c.dim() == Dim::Two {
            shift.z = 0.0;
        }
        let moved = c.rotated(rotation(&c, theta, phi, angle).matrix()).translated(&shift);
        prop_assert!((moved.volume() - c.volume()).abs() <= 1e-9 * c.volume());
        prop_assert!((l.hit_mass(&moved) - l.hit_mass(&c)).abs() <= 1e-9 * l.hit_mass(&c));
    }

    #[test]
    fn erosion_is_monotone(c in polytope(), r1 in 0.0..0.5f64, dr in 0.0..0.5f64) {
        let eps = 1e-9 * c.diameter();
        match (erosion(&c, r1), erosion(&c, r1 + dr)) {
            (Some(big), Some(small)) => {
                for v in small.vertices() {
                    prop_assert!(big.contains(v, eps));
                    prop_assert!(c.depth(v) >= r1 + dr - eps);
                }
            }
            (None, Some(_)) => prop_assert!(false, "larger erosion exists but smaller does not"),
            _ => {}
        }
    }
}

#[test]
fn isotropic_anchors() {
    let l = DrivingMeasure::isotropic();
    assert!((l.hit_mass(&ConvexPolytope::unit_square()) - 4.0 / PI).abs() < 1e-12);
    assert!((l.hit_mass(&ConvexPolytope::unit_cube()) - 1.5).abs() < 1e-12);
}

/// Direction-averaged width by quadrature: midpoint rule on the half circle,
/// Fibonacci lattice on the sphere.
fn averaged_width(c: &ConvexPolytope) -> f64 {
    match c.dim() {
        Dim::Two => {
            let m = 20_000;
            (0..m)
                .map(|k| {
                    let a = (k as f64 + 0.5) * PI / m as f64;
                    c.width(&point2(a.cos(), a.sin()))
                })
                .sum::<f64>()
                / m as f64
        }
        Dim::Three => {
            let m = 200_000;
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    c.width(&Point::new(r * a.cos(), r * a.sin(), z))
                })
                .sum::<f64>()
                / m as f64
        }
    }
}

#[test]
fn isotropic_hit_mass_is_averaged_width() {
    let l = DrivingMeasure::isotropic();
    let shapes = [
        ConvexPolytope::unit_square(),
        ConvexPolytope::rectangle([0.0, 0.0], [3.0, 0.5]),
        ConvexPolytope::polygon(vec![point2(0.0, 0.0), point2(2.0, 0.0), point2(0.3, 1.7)])
            .unwrap(),
        ConvexPolytope::unit_cube(),
        ConvexPolytope::cuboid([0.0, 0.0, 0.0], [1.0, 2.0, 0.25]),
        ConvexPolytope::regular_polygon(7, 1.3, Point::zeros()),
    ];
    for c in shapes {
        let oracle = averaged_width(&c);
        assert!(
            (l.hit_mass(&c) - oracle).abs() < 1e-4 * oracle,
            "{} vs {oracle}",
            l.hit_mass(&c)
        );
    }
}

#[test]
fn monte_carlo_hit_mass_is_isometry_invariant() {
    let l = DrivingMeasure::isotropic();
    let c = ConvexPolytope::cuboid([0.0, 0.0, 0.0], [1.0, 2.0, 0.5]);
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(1.0, 2.0, 3.0)), 0.9);
    let moved = c
        .rotated(rot.matrix())
        .translated(&Point::new(5.0, -2.0, 1.0));
    let n = 200_000;
    let a = l.hit_mass_mc(&c, n, &mut seeded(1));
    let b = l.hit_mass_mc(&moved, n, &mut seeded(2));
    // Width is at most the diameter, so the standard error is at most diam/√n.
    let se = c.diameter() / (n as f64).sqrt();
    assert!((a - b).abs() < 4.0 * se);
    assert!((a - l.hit_mass(&c)).abs() < 4.0 * se);
}

#[test]
fn hitting_guarantee_and_acceptance_rate() {
    let mut rng = seeded(5);
    for c in [
        ConvexPolytope::rectangle([0.0, 0.0], [4.0, 0.3]),
        ConvexPolytope::cuboid([0.0, 0.0, 0.0], [3.0, 0.2, 1.0]),
    ] {
        for l in measures(c.dim()) {
            let n = 20_000;
            let mut attempts = 0usize;
            for _ in 0..n {
                let (h, k) = l.sample_hitting_hyperplane_counted(&c, &mut rng).unwrap();
                attempts += k;
                let d: Vec<f64> = c.vertices().iter().map(|v| h.signed_distance(v)).collect();
                assert!(d.iter().any(|&x| x <= 1e-12) && d.iter().any(|&x| x >= -1e-12));
            }
            if let DirectionalDistribution::Atoms(_) = l.directions {
                assert_eq!(attempts, n);
                continue;
            }
            // Proposals are geometric with success probability E_R[w]/diam.
            let p = l.directions.mean_width(&c) / c.diameter();
            let mean = attempts as f64 / n as f64;
            let se = ((1.0 - p) / (p * p) / n as f64).sqrt();
            assert!((mean - 1.0 / p).abs() < 4.0 * se, "{mean} vs {}", 1.0 / p);
        }
    }
}

#[test]
fn offsets_shift_with_the_body() {
    // With a single direction pair, offsets for c + x are those for c shifted
    // by <x, u>, up to the sign fixed by the canonical normal.
    let u = point2(0.6, 0.8);
    let l = DrivingMeasure::new(1.0, DirectionalDistribution::atoms(vec![(u, 1.0)]).unwrap());
    let c = ConvexPolytope::regular_polygon(5, 1.0, Point::zeros());
    let x = point2(3.0, -1.0);
    let moved = c.translated(&x);
    let along = |h: Hyperplane| h.offset() * h.normal().dot(&u).signum();
    let mut rng = seeded(8);
    let a: Vec<f64> = (0..5000)
        .map(|_| along(l.sample_hitting_hyperplane(&c, &mut rng).unwrap()))
        .collect();
    let b: Vec<f64> = (0..5000)
        .map(|_| along(l.sample_hitting_hyperplane(&moved, &mut rng).unwrap()) - x.dot(&u))
        .collect();
    let r = ks_two_sample(&a, &b);
    assert!(r.p_value > 0.01, "{r:?}");
}

#[test]
fn generated_bodies_are_valid() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for s in [polygon().boxed(), polyhedron().boxed()] {
        for _ in 0..50 {
            let c = s.new_tree(&mut runner).unwrap().current();
            assert!(c.volume() > 0.0 && c.contains(&c.barycenter(), 0.0));
        }
    }
}

//! Typical-cell census by the center rule.
//!
//! A leaf enters the census when its barycenter lies in the inner window and
//! it does not touch the window boundary. For box windows each admitted cell
//! carries the Horvitz–Thompson weight `1 / |{x ∈ inner : c − b + x ⊆ W}|`,
//! which removes the bias against large cells; other windows fall back to the
//! uniform weight `1 / |inner|`.

use crate::dynamics::NestedTessellation;
use crate::geom::{ConvexPolytope, Point};
use crate::measure::DrivingMeasure;

#[derive(Clone, Debug)]
pub struct CensusCell {
    pub polytope: ConvexPolytope,
    pub weight: f64,
}

/// Bounds of `c` if it is an axis-aligned box.
pub fn box_bounds(c: &ConvexPolytope) -> Option<(Point, Point)> {
    let (lo, hi) = c.bounds();
    let d = c.dim().get();
    let vol: f64 = (0..d).map(|k| hi[k] - lo[k]).product();
    ((c.volume() - vol).abs() <= 1e-12 * vol).then_some((lo, hi))
}

pub fn census(y: &NestedTessellation, inner: &ConvexPolytope) -> Vec<CensusCell> {
    let tol = super::complex::MERGE_TOL * y.window.diameter();
    let boxes = box_bounds(&y.window).zip(box_bounds(inner));
    let d = y.window.dim().get();
    let flat = 1.0 / inner.volume();
    y.leaves()
        .filter_map(|n| {
            let c = &n.polytope;
            let b = c.barycenter();
            if !inner.contains(&b, 0.0) || c.vertices().iter().any(|v| y.window.depth(v) <= tol) {
                return None;
            }
            let weight = match boxes {
                Some(((wlo, whi), (ilo, ihi))) => {
                    let (clo, chi) = c.bounds();
                    let admissible: f64 = (0..d)
                        .map(|k| {
                            let lo = ilo[k].max(wlo[k] + b[k] - clo[k]);
                            let hi = ihi[k].min(whi[k] - (chi[k] - b[k]));
                            (hi - lo).max(0.0)
                        })
                        .product();
                    if admissible <= 0.0 {
                        return None;
                    }
                    1.0 / admissible
                }
                None => flat,
            };
            Some(CensusCell {
                polytope: c.clone(),
                weight,
            })
        })
        .collect()
}

/// Weighted sums `(Σw, Σw·Λ([c]))` over the census.
pub fn lambda_mass_sums(cells: &[CensusCell], l: &DrivingMeasure) -> (f64, f64) {
    cells.iter().fold((0.0, 0.0), |(w, s), c| {
        (w + c.weight, s + c.weight * l.hit_mass(&c.polytope))
    })
}

/// Mean Λ-mass of the typical cell of `y`, estimated from one window.
pub fn mean_tcell_lambda_mass(y: &NestedTessellation, inner: &ConvexPolytope) -> f64 {
    let (w, s) = lambda_mass_sums(&census(y, inner), &y.measure);
    s / w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point2;
    use crate::kernels::SplitKernelSpec;

    #[test]
    fn box_detection() {
        assert!(box_bounds(&ConvexPolytope::square(3.0)).is_some());
        assert!(box_bounds(&ConvexPolytope::cube(2.0)).is_some());
        assert!(box_bounds(&ConvexPolytope::regular_polygon(6, 1.0, point2(0.0, 0.0))).is_none());
    }

    #[test]
    fn single_cell_weight() {
        // A lone interior cell: admissible shifts form the inner box shrunk by
        // the cell's extent on each side.
        let w = ConvexPolytope::square(10.0);
        let inner = ConvexPolytope::rectangle([2.0, 2.0], [8.0, 8.0]);
        let mut y =
            NestedTessellation::empty(&w, &SplitKernelSpec::stit(), &DrivingMeasure::isotropic());
        y.nodes[0].polytope = ConvexPolytope::rectangle([4.0, 4.0], [6.0, 7.0]);
        let cells = census(&y, &inner);
        assert_eq!(cells.len(), 1);
        // barycenter (5, 5.5): x-shifts in [2, 8]∩[1, 9], y-shifts in [2, 8]∩[1.5, 8.5].
        assert!((cells[0].weight - 1.0 / 36.0).abs() < 1e-12);
        y.nodes[0].polytope = w.clone();
        assert!(census(&y, &inner).is_empty());
    }
}

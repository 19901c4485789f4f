//! Estimators for tessellation mean values, vertex classification, and the
//! goodness-of-fit machinery used by the validation suites.

pub mod census;
pub mod complex;
pub mod hypothesis;
pub mod jackknife;
pub mod planar;
pub mod spatial;
pub mod zeta;

pub use census::{census, mean_tcell_lambda_mass, CensusCell};
pub use complex::{build_vertex_complex, VertexClass, VertexComplex, VertexRecord};
pub use hypothesis::{
    chi_square, kolmogorov_q, ks_one_sample, ks_two_sample, ks_two_sample_weighted, TestReport,
};
pub use jackknife::{jackknife, Estimate, Tally};
pub use planar::{planar_stats, planar_tally, planar_targets, PlanarTally};
pub use spatial::{spatial_stats, spatial_tally, spatial_targets, SpatialTally};
pub use zeta::{zeta_constants, McMean, ZetaReport};

use crate::geom::{ConvexPolytope, Dim};
use serde::Serialize;
use std::fmt::Write as _;

/// One estimated mean value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatRow {
    pub name: String,
    pub estimate: Estimate,
}

/// Table of mean-value estimates pooled over replications.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TessellationStats {
    pub dim: Dim,
    pub horizon: f64,
    pub replications: usize,
    pub rows: Vec<StatRow>,
}

impl TessellationStats {
    pub fn get(&self, name: &str) -> Option<Estimate> {
        self.rows
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.estimate)
    }

    /// Value of `name`; panics if the row does not exist.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("no statistic named {name}"))
            .value
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,estimate,half_width\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{}",
                r.name, r.estimate.value, r.estimate.half_width
            );
        }
        s
    }
}

pub(crate) type Estimator<'a, T> = Box<dyn Fn(&T) -> f64 + 'a>;

/// Builds rows from `(name, estimator)` pairs by jackknife over `reps`.
pub(crate) fn rows<T: Tally>(reps: &[T], specs: Vec<(&str, Estimator<'_, T>)>) -> Vec<StatRow> {
    specs
        .into_iter()
        .map(|(name, f)| StatRow {
            name: name.to_string(),
            estimate: jackknife(reps, |t| f(t)),
        })
        .collect()
}

/// Inner window at distance `clearance` from the boundary of a box window;
/// the window itself when `clearance` is zero.
pub fn inner_window(window: &ConvexPolytope, clearance: f64) -> Option<ConvexPolytope> {
    if clearance <= 0.0 {
        return Some(window.clone());
    }
    if let Some((lo, hi)) = census::box_bounds(window) {
        let d = window.dim().get();
        let lo: Vec<f64> = (0..d).map(|k| lo[k] + clearance).collect();
        let hi: Vec<f64> = (0..d).map(|k| hi[k] - clearance).collect();
        if (0..d).any(|k| hi[k] <= lo[k]) {
            return None;
        }
        return Some(ConvexPolytope::aa_box(window.dim(), &lo, &hi));
    }
    crate::geom::erosion(window, clearance)
}

/// Default minus-sampling clearance: three mean cell widths at time `t`.
/// Under the isotropic unit-density measure the Λ-mass of a body equals its
/// mean width, and the typical cell has mean Λ-mass `d/t`.
pub fn default_clearance(dim: Dim, t: f64) -> f64 {
    3.0 * dim.as_f64() / t
}

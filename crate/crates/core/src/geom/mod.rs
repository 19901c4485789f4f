//! Convex geometry in dimensions 2 and 3.
//!
//! Points are stored as [`Point`] (a 3-vector); planar objects keep `z = 0`
//! throughout, which lets most support-function code run unchanged in both
//! dimensions. Polygons are kept in counterclockwise order, polyhedra carry
//! outward-oriented face cycles.

mod clip;
mod json;
mod polytope;

pub use clip::{clip_halfspace, erosion, hyperplane_depth, split_polytope, Facet, Split};
pub use json::PolytopeJson;
pub use polytope::ConvexPolytope;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub type Point = nalgebra::Vector3<f64>;

/// Ambient dimension. Only the plane and space are supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn get(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.get() as f64
    }
}

impl TryFrom<u8> for Dim {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(format!("unsupported dimension {other}, expected 2 or 3")),
        }
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.get() as u8
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("cut produced a piece below the volume tolerance")]
    DegenerateCut,
    #[error("hyperplane does not separate the interior of the cell")]
    NotSeparating,
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),
}

/// Absolute tolerances used by clipping and validity checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    /// Coordinates closer than this to a cutting plane are snapped onto it.
    pub eps_geom: f64,
    /// Pieces with smaller volume are rejected as degenerate.
    pub eps_vol: f64,
}

impl Tolerance {
    /// No snapping at all; used where exact interpolation matters more than
    /// clean topology (volume-fraction bisection).
    pub const EXACT: Tolerance = Tolerance {
        eps_geom: 0.0,
        eps_vol: 0.0,
    };

    /// `eps_geom = 1e-9 * diam(W)`, `eps_vol = 1e-12 * vol(W)`.
    pub fn for_window(window: &ConvexPolytope) -> Self {
        Tolerance {
            eps_geom: 1e-9 * window.diameter(),
            eps_vol: 1e-12 * window.volume(),
        }
    }
}

/// Unit-ball volume `kappa_j`.
pub fn kappa(j: usize) -> f64 {
    // kappa_j = pi^{j/2} / Gamma(j/2 + 1), via the two-step recursion.
    match j {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / j as f64 * kappa(j - 2),
    }
}

/// Crofton constant `gamma_1 = 2 kappa_{d-1} / (d kappa_d)` linking the
/// isotropic hit mass to the first intrinsic volume.
pub fn gamma1(d: Dim) -> f64 {
    let d = d.get();
    2.0 * kappa(d - 1) / (d as f64 * kappa(d))
}

/// Which closed halfspace of a hyperplane to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `<x, u> >= r`
    Plus,
    /// `<x, u> <= r`
    Minus,
}

/// `{x : <x, normal> = offset}` with a unit normal in canonical orientation.
///
/// Of the two representations `(u, r)` and `(-u, -r)` the one whose normal
/// is lexicographically larger is kept, so equal hyperplanes compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: Point,
    offset: f64,
}

impl Hyperplane {
    /// Normalizes `normal` (rescaling `offset` with it) and canonicalizes.
    ///
    /// Panics on a zero normal.
    pub fn new(normal: Point, offset: f64) -> Self {
        let len = normal.norm();
        assert!(len > 0.0, "hyperplane normal must be nonzero");
        let (mut n, mut r) = (normal / len, offset / len);
        let first = n.iter().copied().find(|c| *c != 0.0).unwrap_or(0.0);
        if first < 0.0 {
            n = -n;
            r = -r;
        }
        Hyperplane {
            normal: n,
            offset: r,
        }
    }

    pub fn normal(&self) -> Point {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, x: &Point) -> f64 {
        x.dot(&self.normal) - self.offset
    }

    /// The image of the hyperplane under `x -> alpha x`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Hyperplane::new(self.normal, self.offset * alpha)
    }

    pub fn translated(&self, shift: &Point) -> Self {
        Hyperplane::new(self.normal, self.offset + shift.dot(&self.normal))
    }
}

/// `{x : <x, normal> <= offset}`; unlike [`Hyperplane`] the orientation is
/// meaningful, so no canonicalization happens.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Self {
        let len = normal.norm();
        Halfspace {
            normal: normal / len,
            offset: offset / len,
        }
    }

    pub fn from_side(h: &Hyperplane, side: Side) -> Self {
        match side {
            Side::Minus => Halfspace {
                normal: h.normal,
                offset: h.offset,
            },
            Side::Plus => Halfspace {
                normal: -h.normal,
                offset: -h.offset,
            },
        }
    }

    /// Positive outside, negative inside.
    pub fn excess(&self, x: &Point) -> f64 {
        x.dot(&self.normal) - self.offset
    }

    /// Moves the boundary inward by `r`.
    pub fn shrunk(&self, r: f64) -> Self {
        Halfspace {
            normal: self.normal,
            offset: self.offset - r,
        }
    }
}

pub fn point2(x: f64, y: f64) -> Point {
    Point::new(x, y, 0.0)
}

pub fn point3(x: f64, y: f64, z: f64) -> Point {
    Point::new(x, y, z)
}

/// Two unit vectors spanning the orthogonal complement of unit `n`,
/// ordered so that `e1 x e2 = n`.
pub(crate) fn plane_basis(n: &Point) -> (Point, Point) {
    let helper = if n.x.abs() < 0.6 {
        Point::x()
    } else if n.y.abs() < 0.6 {
        Point::y()
    } else {
        Point::z()
    };
    let e1 = (helper - n * helper.dot(n)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

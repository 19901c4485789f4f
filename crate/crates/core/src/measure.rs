//! The driving hyperplane measure `Λ = ρ · R ⊗ ℓ₊`.
//!
//! `Λ([c])` is pinned to `ρ · E_R[w_c(u)]` with `w_c` the full width, so for
//! isotropic `R` it is the mean width of `c`.

use crate::geom::{point2, ConvexPolytope, Dim, Hyperplane, Point};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Rejection attempts before giving up on a hitting hyperplane.
pub const MAX_REJECTIONS: usize = 1_000_000;

/// Bands and sectors of the spherical density grid.
pub const SPHERE_BANDS: usize = 32;
pub const SPHERE_SECTORS: usize = 96;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("no hitting hyperplane accepted after {0} rejections")]
    RejectionOverflow(usize),
    #[error("invalid directional distribution: {0}")]
    InvalidDistribution(String),
}

/// Even probability law `R` of the unit normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DirectionalJson", into = "DirectionalJson")]
pub enum DirectionalDistribution {
    Isotropic,
    /// Symmetrized atoms: every `(u, w)` is accompanied by `(-u, w)`, weights
    /// sum to one.
    Atoms(Vec<(Point, f64)>),
    Density(DensityGrid),
}

/// Piecewise constant density on equal-measure cells of the circle (angle
/// bins) or the sphere (`SPHERE_BANDS` height bands times `SPHERE_SECTORS`
/// longitude sectors, which are equal-area by Archimedes).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    dim: Dim,
    bands: usize,
    sectors: usize,
    /// Cell probabilities, band-major; sum to one.
    mass: Vec<f64>,
    cumulative: Vec<f64>,
    /// Quadrature nodes `(u, weight)` used for hit masses.
    nodes: Vec<(Point, f64)>,
}

impl DensityGrid {
    /// Planar grid over `n` equal angular bins starting at angle 0.
    pub fn circle(values: Vec<f64>) -> Result<Self, MeasureError> {
        let n = values.len();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(MeasureError::InvalidDistribution(
                "circle grid needs an even, nonzero bin count".into(),
            ));
        }
        Self::build(Dim::Two, 1, n, values)
    }

    /// Spherical grid, `values[band][sector]`, bands ordered by increasing z.
    pub fn sphere(values: Vec<Vec<f64>>) -> Result<Self, MeasureError> {
        let bands = values.len();
        let sectors = values.first().map_or(0, Vec::len);
        if bands == 0
            || sectors == 0
            || !sectors.is_multiple_of(2)
            || values.iter().any(|r| r.len() != sectors)
        {
            return Err(MeasureError::InvalidDistribution(
                "sphere grid needs equal-length rows and an even sector count".into(),
            ));
        }
        Self::build(Dim::Three, bands, sectors, values.concat())
    }

    fn build(
        dim: Dim,
        bands: usize,
        sectors: usize,
        values: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(MeasureError::InvalidDistribution(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Err(MeasureError::InvalidDistribution(
                "density is identically zero".into(),
            ));
        }
        let mass: Vec<f64> = values.iter().map(|v| v / total).collect();
        let opposite = |i: usize| {
            let (b, s) = (i / sectors, i % sectors);
            (bands - 1 - b) * sectors + (s + sectors / 2) % sectors
        };
        if (0..mass.len()).any(|i| (mass[i] - mass[opposite(i)]).abs() > 1e-9) {
            return Err(MeasureError::InvalidDistribution(
                "density is not even".into(),
            ));
        }
        let mut acc = 0.0;
        let cumulative = mass
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        let mut grid = DensityGrid {
            dim,
            bands,
            sectors,
            mass,
            cumulative,
            nodes: Vec::new(),
        };
        grid.nodes = grid.quadrature();
        Ok(grid)
    }

    /// Midpoint nodes, subdivided so that there are at least 4096 of them.
    fn quadrature(&self) -> Vec<(Point, f64)> {
        let cells = self.mass.len();
        let sub = 4096_usize.div_ceil(cells);
        let (sb, ss) = match self.dim {
            Dim::Two => (1, sub),
            Dim::Three => {
                let k = (sub as f64).sqrt().ceil() as usize;
                (k, k)
            }
        };
        let mut nodes = Vec::with_capacity(cells * sb * ss);
        for (i, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let (b, s) = (i / self.sectors, i % self.sectors);
            for j in 0..sb {
                for k in 0..ss {
                    let fb = (j as f64 + 0.5) / sb as f64;
                    let fs = (k as f64 + 0.5) / ss as f64;
                    nodes.push((self.cell_point(b, s, fb, fs), m / (sb * ss) as f64));
                }
            }
        }
        nodes
    }

    /// Point of cell `(b, s)` at relative coordinates `(fb, fs)` in `[0,1)^2`.
    fn cell_point(&self, b: usize, s: usize, fb: f64, fs: f64) -> Point {
        let phi = 2.0 * PI * (s as f64 + fs) / self.sectors as f64;
        match self.dim {
            Dim::Two => point2(phi.cos(), phi.sin()),
            Dim::Three => {
                let z = -1.0 + 2.0 * (b as f64 + fb) / self.bands as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                Point::new(rho * phi.cos(), rho * phi.sin(), z)
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let x: f64 = rng.random();
        let i = self
            .cumulative
            .partition_point(|&c| c <= x)
            .min(self.mass.len() - 1);
        self.cell_point(
            i / self.sectors,
            i % self.sectors,
            rng.random(),
            rng.random(),
        )
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Raw cell values in the JSON layout.
    fn values(&self) -> DensityValues {
        match self.dim {
            Dim::Two => DensityValues::Circle(self.mass.clone()),
            Dim::Three => DensityValues::Sphere(
                self.mass
                    .chunks(self.sectors)
                    .map(<[f64]>::to_vec)
                    .collect(),
            ),
        }
    }
}

impl DirectionalDistribution {
    /// Builds symmetrized atoms from `(direction, weight)` pairs; directions
    /// need not be normalized, weights are renormalized to sum to one.
    pub fn atoms(list: Vec<(Point, f64)>) -> Result<Self, MeasureError> {
        let total: f64 = list.iter().map(|(_, w)| *w).sum();
        if list.is_empty() || total <= 0.0 || list.iter().any(|(u, w)| *w < 0.0 || u.norm() == 0.0)
        {
            return Err(MeasureError::InvalidDistribution(
                "atoms need nonzero directions and nonnegative weights with positive sum".into(),
            ));
        }
        let mut out = Vec::with_capacity(2 * list.len());
        for (u, w) in list {
            let u = u.normalize();
            out.push((u, 0.5 * w / total));
            out.push((-u, 0.5 * w / total));
        }
        Ok(DirectionalDistribution::Atoms(out))
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: Dim, rng: &mut R) -> Point {
        match self {
            DirectionalDistribution::Isotropic => isotropic_direction(dim, rng),
            DirectionalDistribution::Atoms(atoms) => {
                let mut x: f64 = rng.random();
                for (u, w) in atoms {
                    if x < *w {
                        return *u;
                    }
                    x -= w;
                }
                atoms[atoms.len() - 1].0
            }
            DirectionalDistribution::Density(grid) => grid.sample(rng),
        }
    }

    /// `E_R[w_c(u)]`.
    pub fn mean_width(&self, c: &ConvexPolytope) -> f64 {
        match self {
            DirectionalDistribution::Isotropic => c.mean_width(),
            DirectionalDistribution::Atoms(atoms) => {
                atoms.iter().map(|(u, w)| w * c.width(u)).sum()
            }
            DirectionalDistribution::Density(grid) => {
                grid.nodes.iter().map(|(u, w)| w * c.width(u)).sum()
            }
        }
    }
}

pub fn isotropic_direction<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Point {
    let phi = 2.0 * PI * rng.random::<f64>();
    match dim {
        Dim::Two => point2(phi.cos(), phi.sin()),
        Dim::Three => {
            let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let r = (1.0 - z * z).max(0.0).sqrt();
            Point::new(r * phi.cos(), r * phi.sin(), z)
        }
    }
}

/// `Λ = ρ · R ⊗ ℓ₊`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivingMeasure {
    pub rho: f64,
    pub directions: DirectionalDistribution,
}

impl Default for DrivingMeasure {
    fn default() -> Self {
        Self::isotropic()
    }
}

impl DrivingMeasure {
    /// `Λ_iso`: unit surface density, isotropic directions.
    pub fn isotropic() -> Self {
        DrivingMeasure {
            rho: 1.0,
            directions: DirectionalDistribution::Isotropic,
        }
    }

    pub fn new(rho: f64, directions: DirectionalDistribution) -> Self {
        DrivingMeasure { rho, directions }
    }

    pub fn sample_direction<R: Rng + ?Sized>(&self, dim: Dim, rng: &mut R) -> Point {
        self.directions.sample(dim, rng)
    }

    /// `Λ([c])`, the measure of hyperplanes hitting `c`.
    pub fn hit_mass(&self, c: &ConvexPolytope) -> f64 {
        self.rho * self.directions.mean_width(c)
    }

    /// Monte Carlo estimate of `Λ([c])` from `n` sampled directions.
    pub fn hit_mass_mc<R: Rng + ?Sized>(&self, c: &ConvexPolytope, n: usize, rng: &mut R) -> f64 {
        let total: f64 = (0..n)
            .map(|_| c.width(&self.sample_direction(c.dim(), rng)))
            .sum();
        self.rho * total / n as f64
    }

    /// `Λ([inner]) / Λ([outer])`.
    pub fn hit_fraction(&self, inner: &ConvexPolytope, outer: &ConvexPolytope) -> f64 {
        self.hit_mass(inner) / self.hit_mass(outer)
    }

    /// Draws from `Λ(· ∩ [c]) / Λ([c])`.
    pub fn sample_hitting_hyperplane<R: Rng + ?Sized>(
        &self,
        c: &ConvexPolytope,
        rng: &mut R,
    ) -> Result<Hyperplane, MeasureError> {
        self.sample_hitting_hyperplane_counted(c, rng)
            .map(|(h, _)| h)
    }

    /// As [`Self::sample_hitting_hyperplane`], also returning the number of
    /// directions proposed (1 for atoms, which are sampled exactly).
    pub fn sample_hitting_hyperplane_counted<R: Rng + ?Sized>(
        &self,
        c: &ConvexPolytope,
        rng: &mut R,
    ) -> Result<(Hyperplane, usize), MeasureError> {
        let (u, attempts) = match &self.directions {
            DirectionalDistribution::Atoms(atoms) => {
                let widths: Vec<f64> = atoms.iter().map(|(u, w)| w * c.width(u)).collect();
                let total: f64 = widths.iter().sum();
                if total <= 0.0 {
                    return Err(MeasureError::RejectionOverflow(0));
                }
                let mut x = rng.random::<f64>() * total;
                let mut pick = atoms.len() - 1;
                for (i, w) in widths.iter().enumerate() {
                    if x < *w {
                        pick = i;
                        break;
                    }
                    x -= w;
                }
                (atoms[pick].0, 1)
            }
            dist => {
                let envelope = c.diameter();
                let mut found = None;
                for attempt in 1..=MAX_REJECTIONS {
                    let u = dist.sample(c.dim(), rng);
                    if rng.random::<f64>() * envelope < c.width(&u) {
                        found = Some((u, attempt));
                        break;
                    }
                }
                found.ok_or(MeasureError::RejectionOverflow(MAX_REJECTIONS))?
            }
        };
        let (lo, hi) = c.extent(&u);
        let offset = lo + (hi - lo) * rng.random::<f64>();
        Ok((Hyperplane::new(u, offset), attempts))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum DirectionalJson {
    Isotropic,
    Atoms { atoms: Vec<Vec<f64>> },
    Density { grid: DensityValues },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DensityValues {
    Circle(Vec<f64>),
    Sphere(Vec<Vec<f64>>),
}

impl TryFrom<DirectionalJson> for DirectionalDistribution {
    type Error = MeasureError;

    fn try_from(j: DirectionalJson) -> Result<Self, MeasureError> {
        match j {
            DirectionalJson::Isotropic => Ok(DirectionalDistribution::Isotropic),
            DirectionalJson::Atoms { atoms } => {
                let list = atoms
                    .into_iter()
                    .map(|a| match a.as_slice() {
                        [x, y, w] => Ok((point2(*x, *y), *w)),
                        [x, y, z, w] => Ok((Point::new(*x, *y, *z), *w)),
                        _ => Err(MeasureError::InvalidDistribution(
                            "atom must be [ux, uy(, uz), w]".into(),
                        )),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                DirectionalDistribution::atoms(list)
            }
            DirectionalJson::Density { grid } => Ok(DirectionalDistribution::Density(match grid {
                DensityValues::Circle(v) => DensityGrid::circle(v)?,
                DensityValues::Sphere(v) => DensityGrid::sphere(v)?,
            })),
        }
    }
}

impl From<DirectionalDistribution> for DirectionalJson {
    fn from(d: DirectionalDistribution) -> Self {
        match d {
            DirectionalDistribution::Isotropic => DirectionalJson::Isotropic,
            // Atoms are stored in (u, -u) pairs; emit one of each.
            DirectionalDistribution::Atoms(atoms) => DirectionalJson::Atoms {
                atoms: atoms
                    .into_iter()
                    .step_by(2)
                    .map(|(u, w)| {
                        let mut v = if u.z == 0.0 {
                            vec![u.x, u.y]
                        } else {
                            vec![u.x, u.y, u.z]
                        };
                        v.push(2.0 * w);
                        v
                    })
                    .collect(),
            },
            DirectionalDistribution::Density(g) => DirectionalJson::Density { grid: g.values() },
        }
    }
}

//! Split kernels `Φ(dH | c)`: the split rate of a cell and the law of its
//! cutting hyperplane.

use crate::geom::{clip_halfspace, erosion, ConvexPolytope, Hyperplane, Point, Side, Tolerance};
use crate::measure::{DrivingMeasure, MeasureError};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Target accuracy of the volume fraction reached by bisection.
pub const FRACTION_TOL: f64 = 1e-10;

/// Subintervals of the Simpson rule for the ramp-mode raw rate.
const RAMP_SIMPSON_STEPS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("cell admits no split under this kernel")]
    UnsplittableCell,
    #[error("volume-fraction bisection missed its target by {0:e}")]
    BisectionFailure(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    /// Split rate `Λ([c])` regardless of the family.
    #[default]
    Canonical,
    /// Split rate equal to the family's own total mass.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErosionMode {
    /// Indicator of `H` hitting the eroded cell.
    Hard,
    /// Density ramping linearly from 0 at depth `r - eps` to 1 at depth `r`.
    Ramp { eps: f64 },
}

/// Symmetric law `G` of the kept volume fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ApportionmentLaw {
    Uniform,
    Beta { a: f64 },
}

impl ApportionmentLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ApportionmentLaw::Uniform => rng.random(),
            ApportionmentLaw::Beta { a } => Beta::new(a, a).expect("validated shape").sample(rng),
        }
    }

    /// Shape parameter of the equivalent `Beta(a, a)`.
    pub fn shape(&self) -> f64 {
        match *self {
            ApportionmentLaw::Uniform => 1.0,
            ApportionmentLaw::Beta { a } => a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelFamily {
    Stit,
    Scaled { alpha: f64 },
    Erosion { r: f64, mode: ErosionMode },
    Apportionment(ApportionmentLaw),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelJson", into = "KernelJson")]
pub struct SplitKernelSpec {
    pub family: KernelFamily,
    pub rate_mode: RateMode,
}

impl SplitKernelSpec {
    pub fn stit() -> Self {
        Self::canonical(KernelFamily::Stit)
    }

    pub fn scaled(alpha: f64) -> Self {
        Self::raw(KernelFamily::Scaled { alpha })
    }

    pub fn erosion(r: f64) -> Self {
        Self::canonical(KernelFamily::Erosion {
            r,
            mode: ErosionMode::Hard,
        })
    }

    pub fn uniform() -> Self {
        Self::canonical(KernelFamily::Apportionment(ApportionmentLaw::Uniform))
    }

    pub fn beta(a: f64) -> Self {
        Self::canonical(KernelFamily::Apportionment(ApportionmentLaw::Beta { a }))
    }

    pub fn canonical(family: KernelFamily) -> Self {
        SplitKernelSpec {
            family,
            rate_mode: RateMode::Canonical,
        }
    }

    pub fn raw(family: KernelFamily) -> Self {
        SplitKernelSpec {
            family,
            rate_mode: RateMode::Raw,
        }
    }

    pub fn with_rate_mode(mut self, mode: RateMode) -> Self {
        self.rate_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let bad = |m: &str| Err(KernelError::InvalidKernel(m.into()));
        match self.family {
            KernelFamily::Scaled { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                bad("alpha must be positive")
            }
            KernelFamily::Erosion { r, .. } if !(r > 0.0 && r.is_finite()) => {
                bad("r must be positive")
            }
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Ramp { eps },
            } if !(eps > 0.0 && eps < r) => bad("ramp eps must lie in (0, r)"),
            KernelFamily::Apportionment(ApportionmentLaw::Beta { a })
                if !(a > 0.0 && a.is_finite()) =>
            {
                bad("beta shape must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        let base = match self.family {
            KernelFamily::Stit => "stit".to_string(),
            KernelFamily::Scaled { alpha } => format!("scaled({alpha})"),
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Hard,
            } => format!("erosion({r})"),
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Ramp { eps },
            } => format!("erosion({r},ramp {eps})"),
            KernelFamily::Apportionment(ApportionmentLaw::Uniform) => "uniform".to_string(),
            KernelFamily::Apportionment(ApportionmentLaw::Beta { a }) => format!("beta({a})"),
        };
        match self.rate_mode {
            RateMode::Canonical => base,
            RateMode::Raw => format!("{base}/raw"),
        }
    }

    /// Smallest erosion radius at which the kernel density can be positive.
    fn min_depth(&self) -> f64 {
        match self.family {
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Hard,
            } => r,
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Ramp { eps },
            } => r - eps,
            _ => 0.0,
        }
    }

    /// Whether `c` admits a split at all. Only erosion kernels can refuse.
    pub fn is_splittable(&self, c: &ConvexPolytope) -> bool {
        match self.family {
            KernelFamily::Erosion { .. } => erosion(c, self.min_depth()).is_some(),
            _ => true,
        }
    }

    /// `|Φ([c] | c)|` in the configured rate mode.
    pub fn rate(&self, l: &DrivingMeasure, c: &ConvexPolytope) -> f64 {
        match self.rate_mode {
            RateMode::Canonical => l.hit_mass(c),
            RateMode::Raw => self.raw_rate(l, c),
        }
    }

    /// The family's own total mass.
    pub fn raw_rate(&self, l: &DrivingMeasure, c: &ConvexPolytope) -> f64 {
        match self.family {
            KernelFamily::Stit | KernelFamily::Apportionment(_) => l.hit_mass(c),
            KernelFamily::Scaled { alpha } => alpha * l.hit_mass(c),
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Hard,
            } => erosion(c, r).map_or(0.0, |e| l.hit_mass(&e)),
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Ramp { eps },
            } => {
                let n = RAMP_SIMPSON_STEPS;
                let step = eps / n as f64;
                let mut sum = 0.0;
                for k in 0..=n {
                    let w = match k {
                        0 => 1.0,
                        k if k == n => 1.0,
                        k if k % 2 == 1 => 4.0,
                        _ => 2.0,
                    };
                    let s = r - eps + k as f64 * step;
                    sum += w * erosion(c, s).map_or(0.0, |e| l.hit_mass(&e));
                }
                sum * step / 3.0 / eps
            }
        }
    }

    /// Draws the cutting hyperplane from `Φ(· | c) / |Φ([c] | c)|`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        l: &DrivingMeasure,
        c: &ConvexPolytope,
        rng: &mut R,
    ) -> Result<Hyperplane, KernelError> {
        match self.family {
            KernelFamily::Stit | KernelFamily::Scaled { .. } => {
                Ok(l.sample_hitting_hyperplane(c, rng)?)
            }
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Hard,
            } => {
                let e = erosion(c, r).ok_or(KernelError::UnsplittableCell)?;
                Ok(l.sample_hitting_hyperplane(&e, rng)?)
            }
            KernelFamily::Erosion {
                r,
                mode: ErosionMode::Ramp { eps },
            } => {
                // Depth level s has density proportional to Λ([ero(c, s)]) on
                // [r - eps, r]; given s, H is Λ-uniform among planes hitting
                // ero(c, s). The mixture has the ramp density.
                let outer = erosion(c, r - eps).ok_or(KernelError::UnsplittableCell)?;
                let envelope = l.hit_mass(&outer);
                for _ in 0..crate::measure::MAX_REJECTIONS {
                    let s = r - eps + eps * rng.random::<f64>();
                    if let Some(e) = erosion(c, s) {
                        if rng.random::<f64>() * envelope < l.hit_mass(&e) {
                            return Ok(l.sample_hitting_hyperplane(&e, rng)?);
                        }
                    }
                }
                Err(MeasureError::RejectionOverflow(crate::measure::MAX_REJECTIONS).into())
            }
            KernelFamily::Apportionment(law) => {
                let u = l.sample_hitting_hyperplane(c, rng)?.normal();
                let fraction = law.sample(rng);
                let offset = volume_fraction_offset(c, &u, fraction)?;
                Ok(Hyperplane::new(u, offset))
            }
        }
    }
}

/// Fraction of `c` lying in `{<x, u> <= s}`.
pub fn volume_fraction(c: &ConvexPolytope, u: &Point, s: f64) -> f64 {
    let h = Hyperplane::new(*u, s);
    // Canonicalization may flip the normal; keep the side matching `u`.
    let side = if h.normal().dot(u) > 0.0 {
        Side::Minus
    } else {
        Side::Plus
    };
    match clip_halfspace(c, &h, side, Tolerance::EXACT) {
        Ok(Some(p)) => p.volume() / c.volume(),
        _ => 0.0,
    }
}

/// Offset `s` with `vol(c ∩ {<x,u> <= s}) = U vol(c)`, by bisection.
pub fn volume_fraction_offset(
    c: &ConvexPolytope,
    u: &Point,
    fraction: f64,
) -> Result<f64, KernelError> {
    let u = u.normalize();
    let (mut lo, mut hi) = c.extent(&u);
    let mut mid = 0.5 * (lo + hi);
    let mut err = f64::INFINITY;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f = volume_fraction(c, &u, mid);
        err = f - fraction;
        if err.abs() <= 0.01 * FRACTION_TOL || mid <= lo || mid >= hi {
            break;
        }
        if err < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if err.abs() > FRACTION_TOL {
        return Err(KernelError::BisectionFailure(err.abs()));
    }
    Ok(mid)
}

/// Flat JSON layout of a kernel.
#[derive(Serialize, Deserialize)]
struct KernelJson {
    kernel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    law: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default)]
    rate_mode: RateMode,
}

impl TryFrom<KernelJson> for SplitKernelSpec {
    type Error = KernelError;

    fn try_from(j: KernelJson) -> Result<Self, KernelError> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                KernelError::InvalidKernel(format!(
                    "kernel \"{}\" needs field \"{name}\"",
                    j.kernel
                ))
            })
        };
        let family = match j.kernel.as_str() {
            "stit" => KernelFamily::Stit,
            "scaled" => KernelFamily::Scaled {
                alpha: need(j.alpha, "alpha")?,
            },
            "erosion" => {
                let r = need(j.r, "r")?;
                let mode = match j.mode.as_deref().unwrap_or("hard") {
                    "hard" => ErosionMode::Hard,
                    "ramp" => ErosionMode::Ramp {
                        eps: need(j.eps, "eps")?,
                    },
                    other => {
                        return Err(KernelError::InvalidKernel(format!(
                            "unknown erosion mode \"{other}\""
                        )))
                    }
                };
                KernelFamily::Erosion { r, mode }
            }
            "apportionment" => {
                KernelFamily::Apportionment(match j.law.as_deref().unwrap_or("uniform") {
                    "uniform" => ApportionmentLaw::Uniform,
                    "beta" => ApportionmentLaw::Beta { a: need(j.a, "a")? },
                    other => {
                        return Err(KernelError::InvalidKernel(format!(
                            "unknown apportionment law \"{other}\""
                        )))
                    }
                })
            }
            other => {
                return Err(KernelError::InvalidKernel(format!(
                    "unknown kernel \"{other}\""
                )))
            }
        };
        let spec = SplitKernelSpec {
            family,
            rate_mode: j.rate_mode,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<SplitKernelSpec> for KernelJson {
    fn from(k: SplitKernelSpec) -> Self {
        let mut j = KernelJson {
            kernel: String::new(),
            alpha: None,
            r: None,
            mode: None,
            eps: None,
            law: None,
            a: None,
            rate_mode: k.rate_mode,
        };
        match k.family {
            KernelFamily::Stit => j.kernel = "stit".into(),
            KernelFamily::Scaled { alpha } => {
                j.kernel = "scaled".into();
                j.alpha = Some(alpha);
            }
            KernelFamily::Erosion { r, mode } => {
                j.kernel = "erosion".into();
                j.r = Some(r);
                match mode {
                    ErosionMode::Hard => j.mode = Some("hard".into()),
                    ErosionMode::Ramp { eps } => {
                        j.mode = Some("ramp".into());
                        j.eps = Some(eps);
                    }
                }
            }
            KernelFamily::Apportionment(law) => {
                j.kernel = "apportionment".into();
                match law {
                    ApportionmentLaw::Uniform => j.law = Some("uniform".into()),
                    ApportionmentLaw::Beta { a } => {
                        j.law = Some("beta".into());
                        j.a = Some(a);
                    }
                }
            }
        }
        j
    }
}

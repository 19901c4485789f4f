//! Monte Carlo ζ-constants: mean absolute determinants of independent
//! directions drawn from the directional distribution.

use crate::geom::Dim;
use crate::measure::DirectionalDistribution;
use crate::rng::seeded;
use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McMean {
    pub mean: f64,
    pub se: f64,
}

impl McMean {
    fn from_moments(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        McMean {
            mean,
            se: (var / nf).sqrt(),
        }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// `ζ` in the plane; `ζ₂` and `ζ₃` in space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZetaReport {
    pub dim: Dim,
    pub n: usize,
    pub zeta: Option<McMean>,
    pub zeta2: Option<McMean>,
    pub zeta3: Option<McMean>,
}

pub fn zeta_constants(r: &DirectionalDistribution, dim: Dim, n: usize, seed: u64) -> ZetaReport {
    let mut rng = seeded(seed);
    let (mut s2, mut q2, mut s3, mut q3) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let u1 = r.sample(dim, &mut rng);
        let u2 = r.sample(dim, &mut rng);
        let a = u1.cross(&u2).norm();
        s2 += a;
        q2 += a * a;
        if dim == Dim::Three {
            let u3 = r.sample(dim, &mut rng);
            let v = u1.cross(&u2).dot(&u3).abs();
            s3 += v;
            q3 += v * v;
        }
    }
    let m2 = McMean::from_moments(s2, q2, n);
    match dim {
        Dim::Two => ZetaReport {
            dim,
            n,
            zeta: Some(m2),
            zeta2: None,
            zeta3: None,
        },
        Dim::Three => ZetaReport {
            dim,
            n,
            zeta: None,
            zeta2: Some(m2),
            zeta3: Some(McMean::from_moments(s3, q3, n)),
        },
    }
}

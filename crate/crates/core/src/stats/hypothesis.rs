use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::PI;

/// Outcome of a goodness-of-fit test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    /// Sample size, or effective size for two-sample and weighted tests.
    pub n: f64,
}

impl TestReport {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Kolmogorov survival function `Q(λ) = P(sup|B| > λ)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form converges fast for small arguments.
        let y = (-PI * PI / (8.0 * lambda * lambda)).exp();
        let s = (2.0 * PI).sqrt() / lambda * (y + y.powi(9) + y.powi(25) + y.powi(49));
        (1.0 - s).clamp(0.0, 1.0)
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        let s = 2.0 * (x - x.powi(4) + x.powi(9) - x.powi(16));
        s.clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value with Stephens' small-sample correction.
fn ks_p(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample KS test of `data` against the continuous CDF `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> TestReport {
    let mut xs: Vec<f64> = data.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    TestReport {
        statistic: d,
        p_value: ks_p(d, n),
        n,
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestReport {
    ks_two_sample_weighted(a, &vec![1.0; a.len()], b, &vec![1.0; b.len()])
}

/// Two-sample KS test between weighted empirical laws; each sample counts
/// with its Kish effective size `(Σw)² / Σw²`.
pub fn ks_two_sample_weighted(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> TestReport {
    let prep = |x: &[f64], w: &[f64]| {
        let mut v: Vec<(f64, f64)> = x.iter().copied().zip(w.iter().copied()).collect();
        v.sort_by(|p, q| p.0.total_cmp(&q.0));
        let total: f64 = w.iter().sum();
        let n_eff = total * total / w.iter().map(|x| x * x).sum::<f64>();
        (v, total, n_eff)
    };
    let (va, ta, na) = prep(a, wa);
    let (vb, tb, nb) = prep(b, wb);
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb, mut d) = (0.0f64, 0.0f64, 0.0f64);
    while i < va.len() || j < vb.len() {
        let x = match (va.get(i), vb.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        while i < va.len() && va[i].0 <= x {
            fa += va[i].1 / ta;
            i += 1;
        }
        while j < vb.len() && vb[j].0 <= x {
            fb += vb[j].1 / tb;
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    let n = na * nb / (na + nb);
    TestReport {
        statistic: d,
        p_value: ks_p(d, n),
        n,
    }
}

/// Pearson χ² test; `ddof` extra degrees of freedom are removed.
pub fn chi_square(observed: &[f64], expected: &[f64], ddof: usize) -> TestReport {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .filter(|(_, e)| **e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let k = observed.len().saturating_sub(1 + ddof).max(1);
    let dist = ChiSquared::new(k as f64).expect("positive degrees of freedom");
    TestReport {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
        n: observed.iter().sum(),
    }
}

pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn kolmogorov_branches_agree() {
        for &l in &[1.1f64, 1.18, 1.25] {
            let x = (-2.0 * l * l).exp();
            let series = 2.0 * (x - x.powi(4) + x.powi(9) - x.powi(16) + x.powi(25));
            assert!((kolmogorov_q(l) - series).abs() < 1e-9, "{l}");
        }
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(0.5) - 0.9639).abs() < 1e-3);
    }

    #[test]
    fn uniform_sample_passes() {
        let mut rng = seeded(5);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        assert!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_one_sample(&ys, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
    }

    #[test]
    fn two_sample_detects_shift() {
        let mut rng = seeded(6);
        let a: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() + 0.1).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
    }

    #[test]
    fn weights_act_like_multiplicities() {
        let a = [0.1, 0.2, 0.3];
        let b = [0.15, 0.25];
        let w = ks_two_sample_weighted(&a, &[2.0, 1.0, 1.0], &b, &[1.0, 1.0]);
        let u = ks_two_sample(&[0.1, 0.1, 0.2, 0.3], &b);
        assert!((w.statistic - u.statistic).abs() < 1e-12);
    }

    #[test]
    fn chi_square_on_fair_die() {
        let r = chi_square(&[100.0, 98.0, 103.0, 99.0, 100.0, 100.0], &[100.0; 6], 0);
        assert!(r.p_value > 0.99);
        let r = chi_square(&[200.0, 0.0, 100.0, 100.0, 100.0, 100.0], &[100.0; 6], 0);
        assert!(r.p_value < 1e-10);
    }
}

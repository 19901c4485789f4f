//! Validation suites: Monte Carlo estimates checked against closed-form
//! targets, reported as CSV rows with a pass/fail verdict.

use crate::dynamics::{iterate, replicate, simulate_window, CopyMode};
use crate::geom::{ConvexPolytope, Dim};
use crate::kernels::SplitKernelSpec;
use crate::measure::DrivingMeasure;
use crate::stats::{
    default_clearance, inner_window, planar_stats, planar_tally, planar_targets, spatial_stats,
    spatial_tally, spatial_targets, PlanarTally, TessellationStats,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Planar STIT mean-value table.
    Planar,
    /// Spatial STIT constants and the inequality panel.
    Spatial,
    /// Scaling and iteration stability of STIT.
    Stit,
    /// First-order law and topological identities across kernels.
    Kernels,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Planar, Suite::Spatial, Suite::Stit, Suite::Kernels];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Planar => "planar",
            Suite::Spatial => "spatial",
            Suite::Stit => "stit",
            Suite::Kernels => "kernels",
        })
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| format!("unknown suite \"{s}\" (planar, spatial, stit, kernels)"))
    }
}

/// How an estimate is judged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Within this relative error of the target.
    Relative(f64),
    /// Equal to the target up to rounding.
    Exact,
    /// The confidence band reaches nonnegative values.
    NonNegative,
    /// Shown for reference only.
    Report,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Relative(r) => write!(f, "rel {r}"),
            Rule::Exact => f.write_str("exact"),
            Rule::NonNegative => f.write_str(">= 0"),
            Rule::Report => f.write_str("report"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub estimate: f64,
    pub half_width: f64,
    pub target: Option<f64>,
    pub rule: Rule,
    /// `None` for report-only rows.
    pub pass: Option<bool>,
}

impl Check {
    pub fn new(
        quantity: impl Into<String>,
        estimate: f64,
        half_width: f64,
        target: Option<f64>,
        rule: Rule,
    ) -> Self {
        let pass = match (rule, target) {
            (Rule::Relative(r), Some(t)) => Some((estimate - t).abs() <= r * t.abs()),
            (Rule::Exact, Some(t)) => Some((estimate - t).abs() <= 1e-9 * t.abs().max(1.0)),
            (Rule::NonNegative, _) => Some(estimate + half_width >= 0.0),
            _ => None,
        };
        Check {
            quantity: quantity.into(),
            estimate,
            half_width,
            target,
            rule,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.pass == Some(false))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,quantity,estimate,half_width,target,rule,pass\n");
        for c in &self.checks {
            let target = c.target.map(|t| t.to_string()).unwrap_or_default();
            let pass = c
                .pass
                .map(|p| if p { "pass" } else { "fail" })
                .unwrap_or("");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                self.suite, c.quantity, c.estimate, c.half_width, target, c.rule, pass
            );
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Replications; each suite has its own default.
    pub reps: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 7,
            reps: None,
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> ValidationReport {
    let checks = match suite {
        Suite::Planar => planar_suite(cfg),
        Suite::Spatial => spatial_suite(cfg),
        Suite::Stit => stit_suite(cfg),
        Suite::Kernels => kernels_suite(cfg),
    };
    ValidationReport { suite, checks }
}

/// Planar replications in `[0, side]²` with the given clearance.
pub fn planar_run(
    k: &SplitKernelSpec,
    side: f64,
    clearance: f64,
    t: f64,
    reps: usize,
    seed: u64,
) -> TessellationStats {
    let w = ConvexPolytope::square(side);
    let inner = inner_window(&w, clearance).expect("clearance leaves an inner window");
    let l = DrivingMeasure::isotropic();
    let tallies: Vec<PlanarTally> = replicate(reps, seed, |_, s| {
        let y = simulate_window(&w, k, &l, t, s).expect("valid run");
        planar_tally(&y, &inner)
    });
    planar_stats(&tallies, t)
}

fn row(st: &TessellationStats, name: &str, target: Option<f64>, rule: Rule) -> Check {
    let e = st
        .get(name)
        .unwrap_or_else(|| panic!("no statistic named {name}"));
    Check::new(name, e.value, e.half_width, target, rule)
}

fn targeted(st: &TessellationStats, targets: &[(&str, f64)], name: &str, rule: Rule) -> Check {
    let t = targets.iter().find(|(n, _)| *n == name).map(|p| p.1);
    row(st, name, t, rule)
}

fn planar_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let t = 1.0;
    let st = planar_run(
        &SplitKernelSpec::stit(),
        30.0,
        default_clearance(Dim::Two, t),
        t,
        cfg.reps.unwrap_or(100),
        cfg.seed,
    );
    let tg = planar_targets(t);
    let mut out: Vec<Check> = [
        ("L_A", Rule::Relative(0.02)),
        ("lambda_V", Rule::Relative(0.05)),
        ("lambda_I", Rule::Relative(0.07)),
        ("L_E", Rule::Relative(0.05)),
        ("L_I", Rule::Relative(0.05)),
        ("p", Rule::Relative(0.05)),
        ("mu_VE", Rule::Exact),
        ("nu0_C", Rule::Relative(0.05)),
        ("kappa", Rule::Exact),
        ("lambda_E", Rule::Relative(0.05)),
        ("lambda_S", Rule::Relative(0.05)),
        ("lambda_C", Rule::Relative(0.05)),
        ("L_S", Rule::Relative(0.05)),
        ("mean_lambda_mass", Rule::Relative(0.03)),
        ("closure_L_A", Rule::Relative(0.03)),
        ("a_identity", Rule::Relative(0.05)),
        ("a", Rule::Report),
        ("xi", Rule::Exact),
    ]
    .into_iter()
    .map(|(n, r)| targeted(&st, &tg, n, r))
    .collect();
    // The tabulated mean area is half the identity value; shown, not asserted.
    let a = st.get("a").expect("mean area row");
    out.push(Check::new(
        "a_table_value",
        a.value,
        a.half_width,
        Some(PI / (2.0 * t * t)),
        Rule::Report,
    ));
    out
}

fn spatial_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let t = 1.0;
    let w = ConvexPolytope::cube(8.0);
    let l = DrivingMeasure::isotropic();
    let tallies = replicate(cfg.reps.unwrap_or(50), cfg.seed, |_, s| {
        spatial_tally(
            &simulate_window(&w, &SplitKernelSpec::stit(), &l, t, s).expect("valid run"),
            &w,
        )
    });
    let st = spatial_stats(&tallies, t);
    let tg = spatial_targets(t);
    let mut out: Vec<Check> = [
        ("S_V", Rule::Relative(0.03)),
        ("L_V", Rule::Relative(0.05)),
        ("lambda_V", Rule::Relative(0.07)),
        ("kappa", Rule::Relative(0.05)),
        ("chi", Rule::Relative(0.05)),
        ("mu_VE", Rule::Exact),
        ("ratio_lambda_E_lambda_V", Rule::Relative(0.05)),
        ("lambda_I", Rule::Relative(0.07)),
        ("lambda_E", Rule::Relative(0.07)),
        ("psi", Rule::Relative(0.05)),
        ("tau", Rule::Relative(0.05)),
        ("xi", Rule::Exact),
    ]
    .into_iter()
    .map(|(n, r)| targeted(&st, &tg, n, r))
    .collect();
    for n in ["chi_lower_margin", "chi_upper_margin", "kappa_margin"] {
        out.push(row(&st, n, None, Rule::NonNegative));
    }
    for n in [
        "lambda_C",
        "lambda_P",
        "mu_CV",
        "nu0_C",
        "nu0_C_census",
        "mean_lambda_mass",
    ] {
        out.push(targeted(&st, &tg, n, Rule::Report));
    }
    out
}

/// `L_A` of `Y(s) ⊞ Y(s)` in `[0, side]²`, copies generated by restriction.
pub fn iterated_length_density(
    k: &SplitKernelSpec,
    side: f64,
    s: f64,
    reps: usize,
    seed: u64,
) -> TessellationStats {
    let w = ConvexPolytope::square(side);
    let inner = inner_window(&w, 4.0).expect("inner window");
    let l = DrivingMeasure::isotropic();
    let tallies: Vec<PlanarTally> = replicate(reps, seed, |i, sd| {
        let host = simulate_window(&w, k, &l, s, sd).expect("valid run");
        let y = iterate(
            &host,
            s,
            CopyMode::Restriction { margin: 4.0 },
            sd ^ (i as u64 + 1),
        )
        .expect("valid copies");
        planar_tally(&y, &inner)
    });
    planar_stats(&tallies, 2.0 * s)
}

fn stit_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let k = SplitKernelSpec::stit();
    let reps = cfg.reps.unwrap_or(40);
    let mut out = Vec::new();
    let it = iterated_length_density(&k, 20.0, 0.75, 4 * reps, cfg.seed);
    let e = it.get("L_A").expect("length density");
    out.push(Check::new(
        "L_A_iterated_0.75+0.75",
        e.value,
        e.half_width,
        Some(1.5),
        Rule::Relative(0.03),
    ));
    let mut lv = Vec::new();
    for t in [1.0, 2.0] {
        let st = scaled_planar_run(&k, t, reps, crate::rng::stream_seed(cfg.seed, t as u64));
        let m = st.get("mean_lambda_mass").expect("mean mass");
        out.push(Check::new(
            format!("mean_lambda_mass_t{t}"),
            m.value,
            m.half_width,
            Some(2.0 / t),
            Rule::Relative(0.03),
        ));
        lv.push(st.get("lambda_V").expect("vertex intensity"));
    }
    let ratio = lv[1].value / lv[0].value;
    let hw = ratio * (lv[0].half_width / lv[0].value + lv[1].half_width / lv[1].value);
    out.push(Check::new(
        "lambda_V_ratio_2t_t",
        ratio,
        hw,
        Some(4.0),
        Rule::Relative(0.07),
    ));
    out
}

/// Kernels of the first-order panel.
pub fn panel_kernels() -> Vec<SplitKernelSpec> {
    vec![
        SplitKernelSpec::stit(),
        SplitKernelSpec::erosion(0.05),
        SplitKernelSpec::uniform(),
        SplitKernelSpec::beta(4.0),
    ]
}

/// Planar run for time `t` in a window scaled with the mean cell size. Non-STIT
/// kernels are not consistent under restriction, so the window's shape leaks
/// into interior cells through the early splits; at side `40/t` this biases
/// the mean Λ-mass of Beta(4) cells by about −3%, at `80/t` by under 1%.
pub fn scaled_planar_run(k: &SplitKernelSpec, t: f64, reps: usize, seed: u64) -> TessellationStats {
    planar_run(k, 80.0 / t, default_clearance(Dim::Two, t), t, reps, seed)
}

fn kernels_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let reps = cfg.reps.unwrap_or(60);
    let mut out = Vec::new();
    for (ki, k) in panel_kernels().iter().enumerate() {
        let label = k.label();
        for (ti, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let st = scaled_planar_run(
                k,
                t,
                reps,
                crate::rng::stream_seed(cfg.seed, (ki * 3 + ti) as u64),
            );
            let m = st.get("mean_lambda_mass").expect("mean mass");
            out.push(Check::new(
                format!("{label}:mean_lambda_mass_t{t}"),
                m.value,
                m.half_width,
                Some(2.0 / t),
                Rule::Relative(0.03),
            ));
            if t == 1.0 {
                for (name, target, rule) in [
                    ("mu_VE", 3.0, Rule::Relative(0.05)),
                    ("ratio_lambda_E_lambda_V", 1.5, Rule::Relative(0.05)),
                    ("ratio_lambda_C_lambda_V", 0.5, Rule::Relative(0.05)),
                    ("nu0_C", 4.0, Rule::Relative(0.05)),
                    ("ratio_L_I_L_E", 3.0, Rule::Relative(0.05)),
                    ("ratio_L_S_L_E", 1.5, Rule::Relative(0.05)),
                ] {
                    let e = st.get(name).expect("topological row");
                    out.push(Check::new(
                        format!("{label}:{name}"),
                        e.value,
                        e.half_width,
                        Some(target),
                        rule,
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn rules() {
        assert_eq!(
            Check::new("x", 1.01, 0.0, Some(1.0), Rule::Relative(0.02)).pass,
            Some(true)
        );
        assert_eq!(
            Check::new("x", 1.03, 0.0, Some(1.0), Rule::Relative(0.02)).pass,
            Some(false)
        );
        assert_eq!(
            Check::new("x", 3.0, 0.0, Some(3.0), Rule::Exact).pass,
            Some(true)
        );
        assert_eq!(
            Check::new("x", -0.1, 0.2, None, Rule::NonNegative).pass,
            Some(true)
        );
        assert_eq!(
            Check::new("x", -0.3, 0.2, None, Rule::NonNegative).pass,
            Some(false)
        );
        assert_eq!(
            Check::new("x", 9.0, 0.0, Some(1.0), Rule::Report).pass,
            None
        );
    }

    #[test]
    fn csv_has_one_row_per_check() {
        let r = ValidationReport {
            suite: Suite::Planar,
            checks: vec![Check::new(
                "L_A",
                1.0,
                0.01,
                Some(1.0),
                Rule::Relative(0.02),
            )],
        };
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().ends_with(",pass"));
        assert!(r.passed());
    }
}

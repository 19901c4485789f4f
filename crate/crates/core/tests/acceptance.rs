//! Acceptance suite: one PASS/FAIL line per criterion on stderr.
//!
//! Criteria listed in `KNOWN_DEVIATIONS` may fail without failing the test;
//! they are printed as `FAIL (known, see ledger)`.

mod common;

use nested_tess::dynamics::{iterate, replicate, simulate_window, CopyMode};
use nested_tess::geom::{
    hyperplane_depth, point2, split_polytope, ConvexPolytope, Dim, Hyperplane, Tolerance,
};
use nested_tess::kernels::{volume_fraction, volume_fraction_offset, SplitKernelSpec};
use nested_tess::measure::{DirectionalDistribution, DrivingMeasure};
use nested_tess::rng::{seeded, stream_seed};
use nested_tess::shrink::{
    compare_typical_cell, csd_population_run, csd_run, doubled_holding_times, extract_spinal_chain,
    spinal_time_diagnostic, TypicalCellEnsemble,
};
use nested_tess::stats::{
    census, planar_stats, planar_tally, planar_targets, spatial_stats, spatial_tally,
    spatial_targets, zeta_constants, CensusCell, Estimate,
};
use nested_tess::validate::{iterated_length_density, planar_run, scaled_planar_run};
use proptest::strategy::{Strategy, ValueTree};
use rand::Rng;
use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

/// Criteria allowed to fail; each has an entry in the decisions ledger.
const KNOWN_DEVIATIONS: &[u32] = &[];

const SEED: u64 = 2024;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn rel(&mut self, name: &str, e: Estimate, target: f64, tol: f64) {
        let err = (e.value - target).abs() / target.abs();
        self.check(
            err <= tol,
            format!(
                "{name} = {:.5} ± {:.5}, target {target:.5}, rel err {err:.4} (tol {tol})",
                e.value, e.half_width
            ),
        );
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

fn iso() -> DrivingMeasure {
    DrivingMeasure::isotropic()
}

fn census_ensemble(
    k: &SplitKernelSpec,
    w: &ConvexPolytope,
    clearance: f64,
    t: f64,
    reps: usize,
    seed: u64,
) -> TypicalCellEnsemble {
    let inner = nested_tess::stats::inner_window(w, clearance).unwrap();
    let cells: Vec<CensusCell> = replicate(reps, seed, |_, s| {
        census(&simulate_window(w, k, &iso(), t, s).unwrap(), &inner)
    })
    .into_iter()
    .flatten()
    .collect();
    TypicalCellEnsemble::from_census(cells, t)
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let st = planar_run(&SplitKernelSpec::stit(), 30.0, 6.0, 1.0, 100, SEED);
    let tg = planar_targets(1.0);
    let target = |n: &str| tg.iter().find(|p| p.0 == n).unwrap().1;
    for (q, tol) in [
        ("L_A", 0.02),
        ("lambda_V", 0.05),
        ("lambda_I", 0.07),
        ("L_E", 0.05),
        ("L_I", 0.05),
        ("p", 0.05),
        ("nu0_C", 0.05),
    ] {
        o.rel(q, st.get(q).unwrap(), target(q), tol);
    }
    let mu = st.value("mu_VE");
    o.check(mu == 3.0, format!("mu_VE = {mu} (exact 3)"));
    let elapsed = start.elapsed();
    o.check(
        elapsed < Duration::from_secs(120),
        format!("runtime {elapsed:.1?} (< 2 min)"),
    );
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let kernels = [
        SplitKernelSpec::stit(),
        SplitKernelSpec::erosion(0.05),
        SplitKernelSpec::uniform(),
        SplitKernelSpec::beta(4.0),
    ];
    for (ki, k) in kernels.iter().enumerate() {
        for (ti, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let st = scaled_planar_run(k, t, 60, stream_seed(SEED, (ki * 3 + ti) as u64));
            o.rel(
                &format!("{} t={t}: mean Λ-mass", k.label()),
                st.get("mean_lambda_mass").unwrap(),
                2.0 / t,
                0.03,
            );
        }
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let w = ConvexPolytope::cube(8.0);
    let run = |k: &SplitKernelSpec, reps: usize, seed: u64| {
        let tallies = replicate(reps, seed, |_, s| {
            spatial_tally(&simulate_window(&w, k, &iso(), 1.0, s).unwrap(), &w)
        });
        spatial_stats(&tallies, 1.0)
    };
    let st = run(&SplitKernelSpec::stit(), 50, SEED);
    let tg = spatial_targets(1.0);
    let target = |n: &str| tg.iter().find(|p| p.0 == n).unwrap().1;
    for (q, tol) in [
        ("S_V", 0.03),
        ("L_V", 0.05),
        ("lambda_V", 0.07),
        ("kappa", 0.05),
        ("chi", 0.05),
    ] {
        o.rel(q, st.get(q).unwrap(), target(q), tol);
    }
    let kernels = [
        (SplitKernelSpec::stit(), st),
        (
            SplitKernelSpec::erosion(0.05),
            run(&SplitKernelSpec::erosion(0.05), 20, SEED + 1),
        ),
        (
            SplitKernelSpec::uniform(),
            run(&SplitKernelSpec::uniform(), 20, SEED + 2),
        ),
        (
            SplitKernelSpec::beta(4.0),
            run(&SplitKernelSpec::beta(4.0), 20, SEED + 3),
        ),
    ];
    for (k, st) in &kernels {
        let (chi, kappa) = (st.value("chi"), st.value("kappa"));
        let ok = (4.5..6.0).contains(&chi) && kappa >= (12.0 - 2.0 * chi) / chi;
        o.check(
            ok,
            format!(
                "{}: chi = {chi:.4} in [4.5, 6), kappa = {kappa:.4} >= {:.4}",
                k.label(),
                (12.0 - 2.0 * chi) / chi
            ),
        );
    }
    let elapsed = start.elapsed();
    o.check(
        elapsed < Duration::from_secs(600),
        format!("runtime {elapsed:.1?} (< 10 min)"),
    );
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let n = 1_000_000;
    let z3 = zeta_constants(&DirectionalDistribution::Isotropic, Dim::Three, n, SEED);
    let z2 = zeta_constants(&DirectionalDistribution::Isotropic, Dim::Two, n, SEED + 1);
    for (name, m, target) in [
        ("zeta2 (3D)", z3.zeta2.unwrap(), PI / 4.0),
        ("zeta3 (3D)", z3.zeta3.unwrap(), PI / 8.0),
        ("zeta (2D)", z2.zeta.unwrap(), 2.0 / PI),
    ] {
        let z = (m.mean - target).abs() / m.se;
        o.check(
            z < 3.0,
            format!(
                "{name} = {:.6} ± {:.6} (se), target {target:.6}, {z:.2} se",
                m.mean, m.se
            ),
        );
    }
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let w = ConvexPolytope::square(30.0);
    for k in [SplitKernelSpec::stit(), SplitKernelSpec::beta(4.0)] {
        let ens = census_ensemble(&k, &w, 6.0, 1.0, 30, 5);
        let run = csd_run(
            &k,
            &iso(),
            &ConvexPolytope::unit_square(),
            3000,
            10_000,
            50,
            9,
        )
        .unwrap();
        let cmp = compare_typical_cell(&ens, &run.ensemble, &iso()).unwrap();
        let n_ok = ens.len() >= 2000 && run.ensemble.len() >= 2000;
        let detail: Vec<String> = cmp
            .functionals
            .iter()
            .map(|(f, r)| format!("{f} p={:.3}", r.p_value))
            .collect();
        o.check(
            n_ok && cmp.min_p() > 0.01,
            format!(
                "{}: census n={} vs CSD n={}: {}",
                k.label(),
                ens.len(),
                run.ensemble.len(),
                detail.join(", ")
            ),
        );
        o.note(format!(
            "CSD drift factor {:.4}, stationarity p = {:.3}",
            run.drift_factor, run.stationarity.p_value
        ));
        let pop = csd_population_run(
            &k,
            &iso(),
            &ConvexPolytope::unit_square(),
            400,
            3000,
            20_000,
            50,
            9,
        )
        .unwrap();
        let cmp = compare_typical_cell(&ens, &pop.ensemble, &iso()).unwrap();
        o.note(format!(
            "population form (diagnostic): drift {:.4}, min p = {:.3}",
            pop.drift_factor,
            cmp.min_p()
        ));
    }
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let w = ConvexPolytope::rectangle([-10.0, -10.0], [10.0, 10.0]);
    for k in [SplitKernelSpec::stit(), SplitKernelSpec::erosion(0.05)] {
        let chains = replicate(500, SEED, |_, s| {
            extract_spinal_chain(
                &simulate_window(&w, &k, &iso(), 1.0, s).unwrap(),
                &nested_tess::geom::Point::zeros(),
            )
            .unwrap()
        });
        let r = spinal_time_diagnostic(&chains);
        let neg = spinal_time_diagnostic(&doubled_holding_times(&chains));
        o.check(
            r.p_value > 0.01 && neg.p_value < 1e-6,
            format!(
                "{}: 500 chains, n = {}, p = {:.4}; doubled times p = {:.2e}",
                k.label(),
                r.n,
                r.p_value,
                neg.p_value
            ),
        );
    }
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    for (i, k) in [
        SplitKernelSpec::stit(),
        SplitKernelSpec::uniform(),
        SplitKernelSpec::beta(4.0),
    ]
    .iter()
    .enumerate()
    {
        let lv = |t: f64, s: u64| planar_run(k, 30.0, 6.0, t, 100, s).get("lambda_V").unwrap();
        let (a, b) = (
            lv(1.0, stream_seed(SEED, 2 * i as u64)),
            lv(2.0, stream_seed(SEED, 2 * i as u64 + 1)),
        );
        let ratio = b.value / a.value;
        o.check(
            (ratio / 4.0 - 1.0).abs() <= 0.07,
            format!(
                "{}: lambda_V(2)/lambda_V(1) = {:.4}/{:.4} = {ratio:.4}, target 4 (7%)",
                k.label(),
                b.value,
                a.value
            ),
        );
    }
    let l = iso();
    let k0 = ConvexPolytope::unit_square();
    for k in [SplitKernelSpec::stit(), SplitKernelSpec::beta(4.0)] {
        let base = csd_run(&k, &l, &k0, 2000, 5000, 20, 31).unwrap();
        let big = csd_run(&k, &l, &k0.scaled(10.0), 2000, 5000, 20, 32).unwrap();
        let cmp = compare_typical_cell(&base.ensemble, &big.ensemble, &l).unwrap();
        let masses = |e: &TypicalCellEnsemble| -> Vec<f64> {
            e.samples.iter().map(|(c, _)| l.hit_mass(c)).collect()
        };
        let r = nested_tess::stats::ks_two_sample(&masses(&base.ensemble), &masses(&big.ensemble));
        o.check(
            cmp.min_p() > 0.01 && r.p_value > 0.01,
            format!(
                "{}: CSD from K0 vs 10·K0, shape min p = {:.3}, Λ-mass p = {:.3}",
                k.label(),
                cmp.min_p(),
                r.p_value
            ),
        );
    }
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let st = iterated_length_density(&SplitKernelSpec::stit(), 20.0, 0.75, 160, SEED);
    o.rel(
        "stit: L_A(Y(0.75) ⊞ Y(0.75))",
        st.get("L_A").unwrap(),
        1.5,
        0.03,
    );

    let k = SplitKernelSpec::beta(8.0);
    let w = ConvexPolytope::square(20.0);
    let inner = nested_tess::stats::inner_window(&w, 4.0).unwrap();
    let out = replicate(100, SEED, |i, s| {
        let host = simulate_window(&w, &k, &iso(), 0.75, s).unwrap();
        let z = iterate(
            &host,
            0.75,
            CopyMode::Restriction { margin: 4.0 },
            s ^ (i as u64 + 1),
        )
        .unwrap();
        let d = simulate_window(&w, &k, &iso(), 1.5, stream_seed(s, 1)).unwrap();
        (
            planar_tally(&z, &inner),
            planar_tally(&d, &inner),
            census(&z, &inner),
            census(&d, &inner),
        )
    });
    let la = |v: Vec<_>| planar_stats(&v, 1.5).get("L_A").unwrap();
    let (lz, ld) = (
        la(out.iter().map(|o| o.0).collect()),
        la(out.iter().map(|o| o.1).collect()),
    );
    o.note(format!(
        "beta(8): L_A composite {:.4} ± {:.4}, direct {:.4} ± {:.4}",
        lz.value, lz.half_width, ld.value, ld.half_width
    ));
    let ez = TypicalCellEnsemble::from_census(out.iter().flat_map(|o| o.2.clone()).collect(), 1.5);
    let ed = TypicalCellEnsemble::from_census(out.iter().flat_map(|o| o.3.clone()).collect(), 1.5);
    let cmp = compare_typical_cell(&ez, &ed, &iso()).unwrap();
    let detail: Vec<String> = cmp
        .functionals
        .iter()
        .map(|(f, r)| format!("{f} p={:.2e}", r.p_value))
        .collect();
    o.check(
        cmp.min_p() < 0.01,
        format!(
            "beta(8): composite vs direct cells differ: {}",
            detail.join(", ")
        ),
    );
    o
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let r = 0.1;
    let k = SplitKernelSpec::erosion(r);
    let w = ConvexPolytope::square(40.0);
    let (mut splits, mut violations, mut worst) = (0usize, 0usize, f64::INFINITY);
    let mut seed = SEED;
    while splits < 100_000 {
        let y = simulate_window(&w, &k, &iso(), 3.0, seed).unwrap();
        for n in y.nodes.iter().filter(|n| n.children.is_some()) {
            let depth = hyperplane_depth(&n.polytope, n.split_plane.as_ref().unwrap())
                .unwrap_or(f64::NEG_INFINITY);
            worst = worst.min(depth);
            violations += (depth < r - 1e-9) as usize;
            splits += 1;
        }
        seed += 1;
    }
    o.check(
        violations == 0,
        format!(
            "erosion(0.1): {splits} splits, {violations} violations, smallest depth {worst:.12}"
        ),
    );
    o
}

fn criterion_10() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let l = iso();
    let square = l.hit_mass(&ConvexPolytope::unit_square());
    let cube = l.hit_mass(&ConvexPolytope::unit_cube());
    o.check(
        (square - 4.0 / PI).abs() < 1e-12 && (cube - 1.5).abs() < 1e-12,
        format!("anchors: square {square:.15} (4/π), cube {cube:.15} (1.5)"),
    );

    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut rng = seeded(SEED);
    let (mut worst_vol, mut worst_scale, mut worst_iso, mut worst_frac) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..2000 {
        let c = common::polytope().new_tree(&mut runner).unwrap().current();
        let u = common::direction(
            &c,
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..PI),
        );
        let (lo, hi) = c.extent(&u);
        let h = Hyperplane::new(u, lo + rng.random_range(0.05..0.95) * (hi - lo));
        if let Ok(s) = split_polytope(&c, &h, Tolerance::for_window(&c)) {
            worst_vol =
                worst_vol.max((s.plus.volume() + s.minus.volume() - c.volume()).abs() / c.volume());
        }
        let m = l.hit_mass(&c);
        for alpha in [0.5, 2.0, 10.0] {
            worst_scale =
                worst_scale.max((l.hit_mass(&c.scaled(alpha)) - alpha * m).abs() / (alpha * m));
        }
        let axis = match c.dim() {
            Dim::Two => nalgebra::Vector3::z(),
            Dim::Three => common::unit(rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..PI)),
        };
        let rot = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            rng.random_range(0.0..2.0 * PI),
        );
        let shift = match c.dim() {
            Dim::Two => point2(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
            Dim::Three => nested_tess::geom::Point::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ),
        };
        let moved = c.rotated(rot.matrix()).translated(&shift);
        worst_iso = worst_iso.max((l.hit_mass(&moved) - m).abs() / m);
        let f = rng.random_range(0.001..0.999);
        let s = volume_fraction_offset(&c, &u, f).unwrap();
        worst_frac = worst_frac.max((volume_fraction(&c, &u, s) - f).abs());
    }
    o.check(
        worst_vol <= 1e-9,
        format!("clipping volume conservation: worst rel err {worst_vol:.2e} (<= 1e-9)"),
    );
    o.check(
        worst_scale <= 1e-9,
        format!("hit-mass homogeneity: worst rel err {worst_scale:.2e} (<= 1e-9)"),
    );
    o.check(
        worst_iso <= 1e-9,
        format!("hit-mass isometry invariance: worst rel err {worst_iso:.2e} (<= 1e-9)"),
    );
    o.check(
        worst_frac <= 1e-10,
        format!("bisection accuracy: worst fraction err {worst_frac:.2e} (<= 1e-10)"),
    );
    let elapsed = start.elapsed();
    o.check(
        elapsed < Duration::from_secs(10),
        format!("runtime {elapsed:.2?} (< 10 s)"),
    );
    o
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        (1, "planar STIT mean-value table", criterion_1),
        (2, "kernel-independent first-order law", criterion_2),
        (
            3,
            "spatial STIT constants and inequality panel",
            criterion_3,
        ),
        (4, "zeta constants", criterion_4),
        (
            5,
            "typical cell: window census vs shrink dynamics",
            criterion_5,
        ),
        (6, "spinal time-mark law", criterion_6),
        (7, "scaling", criterion_7),
        (8, "iteration stability", criterion_8),
        (9, "hard-core guarantee", criterion_9),
        (10, "geometry invariants", criterion_10),
    ];
    // Written to stderr directly so the lines show without --nocapture.
    let mut err = std::io::stderr();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let status = match (o.pass, KNOWN_DEVIATIONS.contains(&id)) {
            (true, _) => "PASS".to_string(),
            (false, true) => "FAIL (known, see ledger)".to_string(),
            (false, false) => {
                unexpected.push(id);
                "FAIL".to_string()
            }
        };
        let _ = writeln!(
            err,
            "criterion {id:>2} {status}: {name} [{:.1?}]",
            start.elapsed()
        );
        for line in &o.lines {
            let _ = writeln!(err, "    {line}");
        }
    }
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}

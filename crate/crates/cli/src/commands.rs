use crate::config::{ConfigError, RunConfig};
use crate::Source;
use nested_tess::dynamics::{replicate, simulate_window, svg, write_jsonl, SimError};
use nested_tess::geom::{ConvexPolytope, Dim};
use nested_tess::kernels::KernelFamily;
use nested_tess::measure::{DirectionalDistribution, DrivingMeasure};
use nested_tess::shrink::{csd_population_run, csd_run, ShrinkError, TypicalCellEnsemble};
use nested_tess::stats::{
    census, default_clearance, inner_window, planar_stats, planar_tally, planar_targets,
    spatial_stats, spatial_tally, spatial_targets, zeta_constants, McMean,
};
use nested_tess::validate::{run_suite, Suite, SuiteConfig};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CmdError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Shrink(#[from] ShrinkError),
}

fn config_error(field: &'static str, message: impl Into<String>) -> CmdError {
    CmdError::Config(ConfigError::Invalid {
        field,
        message: message.into(),
    })
}

/// Writes through a sibling temporary file that is renamed into place on
/// success and removed on failure; standard output when `path` is `None`.
fn emit<F>(path: Option<&Path>, write: F) -> Result<(), CmdError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let Some(path) = path else {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        write(&mut lock)?;
        return Ok(lock.flush()?);
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = File::create(&tmp).and_then(|f| {
        let mut w = BufWriter::new(f);
        write(&mut w)?;
        w.flush()
    });
    match result.and_then(|_| fs::rename(&tmp, path)) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}

pub fn simulate(
    cfg: &RunConfig,
    out: Option<PathBuf>,
    svg_path: Option<PathBuf>,
) -> Result<bool, CmdError> {
    let w = cfg.window()?;
    let y = simulate_window(&w, &cfg.kernel, &cfg.measure, cfg.t, cfg.seed)?;
    let out = out.or_else(|| cfg.outputs.jsonl.clone());
    emit(out.as_deref(), |o| write_jsonl(&y, o))?;
    if let Some(p) = svg_path.or_else(|| cfg.outputs.svg.clone()) {
        match svg(&y, 800.0) {
            Some(text) => emit(Some(&p), |o| o.write_all(text.as_bytes()))?,
            None => log::warn!("SVG output is only available for planar runs; skipped"),
        }
    }
    Ok(true)
}

fn inner(cfg: &RunConfig, w: &ConvexPolytope) -> Result<ConvexPolytope, CmdError> {
    if let Some(c) = cfg.clearance {
        return inner_window(w, c)
            .ok_or_else(|| config_error("clearance", format!("{c} leaves no inner window")));
    }
    let c = default_clearance(cfg.dim, cfg.t);
    Ok(inner_window(w, c).unwrap_or_else(|| {
        log::warn!("window too small for the default clearance {c}; counting in the whole window");
        w.clone()
    }))
}

/// Closed-form targets apply to STIT under the unit-density isotropic measure.
fn has_targets(cfg: &RunConfig) -> bool {
    cfg.kernel.family == KernelFamily::Stit && cfg.measure == DrivingMeasure::isotropic()
}

pub fn stats(cfg: &RunConfig, out: Option<PathBuf>) -> Result<bool, CmdError> {
    if cfg.t <= 0.0 {
        return Err(config_error("t", "statistics need a positive horizon"));
    }
    let w = cfg.window()?;
    let inner = inner(cfg, &w)?;
    // Fail early on a bad run instead of inside the worker threads.
    simulate_window(&w, &cfg.kernel, &cfg.measure, 0.0, cfg.seed)?;
    let run =
        |s: u64| simulate_window(&w, &cfg.kernel, &cfg.measure, cfg.t, s).expect("validated run");
    let (st, targets) = match cfg.dim {
        Dim::Two => (
            planar_stats(
                &replicate(cfg.replications, cfg.seed, |_, s| {
                    planar_tally(&run(s), &inner)
                }),
                cfg.t,
            ),
            planar_targets(cfg.t),
        ),
        Dim::Three => (
            spatial_stats(
                &replicate(cfg.replications, cfg.seed, |_, s| {
                    spatial_tally(&run(s), &inner)
                }),
                cfg.t,
            ),
            spatial_targets(cfg.t),
        ),
    };
    let mut csv = String::from("quantity,estimate,half_width,target,covered\n");
    for r in &st.rows {
        let target = has_targets(cfg)
            .then(|| targets.iter().find(|(n, _)| *n == r.name).map(|p| p.1))
            .flatten();
        let (t, c) = match target {
            Some(t) => (
                t.to_string(),
                ((r.estimate.value - t).abs() <= r.estimate.half_width).to_string(),
            ),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{t},{c}",
            r.name, r.estimate.value, r.estimate.half_width
        );
    }
    emit(out.or_else(|| cfg.outputs.csv.clone()).as_deref(), |o| {
        o.write_all(csv.as_bytes())
    })?;
    Ok(true)
}

pub struct TypicalCellOpts {
    pub source: Source,
    pub samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub particles: usize,
}

pub fn typical_cell(
    cfg: &RunConfig,
    out: Option<PathBuf>,
    o: TypicalCellOpts,
) -> Result<bool, CmdError> {
    let start = match cfg.dim {
        Dim::Two => ConvexPolytope::unit_square(),
        Dim::Three => ConvexPolytope::unit_cube(),
    };
    let ensemble = match o.source {
        Source::Csd | Source::Population => {
            let run = match o.source {
                Source::Csd => csd_run(
                    &cfg.kernel,
                    &cfg.measure,
                    &start,
                    o.samples,
                    o.burn_in,
                    o.thin,
                    cfg.seed,
                )?,
                _ => csd_population_run(
                    &cfg.kernel,
                    &cfg.measure,
                    &start,
                    o.particles,
                    o.samples,
                    o.burn_in,
                    o.thin,
                    cfg.seed,
                )?,
            };
            eprintln!(
                "jumps {}, restarts {}, drift factor {:.4} (halves {:.4} / {:.4}), stationarity p = {:.3}",
                run.jumps,
                run.restarts,
                run.drift_factor,
                run.drift_halves.0,
                run.drift_halves.1,
                run.stationarity.p_value
            );
            run.ensemble
        }
        Source::Census => {
            if cfg.t <= 0.0 {
                return Err(config_error("t", "a census needs a positive horizon"));
            }
            let w = cfg.window()?;
            let inner = inner(cfg, &w)?;
            simulate_window(&w, &cfg.kernel, &cfg.measure, 0.0, cfg.seed)?;
            let cells = replicate(cfg.replications, cfg.seed, |_, s| {
                census(
                    &simulate_window(&w, &cfg.kernel, &cfg.measure, cfg.t, s)
                        .expect("validated run"),
                    &inner,
                )
            });
            TypicalCellEnsemble::from_census(cells.into_iter().flatten().collect(), cfg.t)
        }
    };
    emit(out.or_else(|| cfg.outputs.jsonl.clone()).as_deref(), |w| {
        ensemble.write_jsonl(&cfg.measure, w)
    })?;
    Ok(true)
}

pub fn validate(
    cfg: &RunConfig,
    reps: Option<usize>,
    suite: Suite,
    out: Option<PathBuf>,
) -> Result<bool, CmdError> {
    let report = run_suite(
        suite,
        &SuiteConfig {
            seed: cfg.seed,
            reps,
        },
    );
    emit(out.or_else(|| cfg.outputs.csv.clone()).as_deref(), |o| {
        o.write_all(report.to_csv().as_bytes())
    })?;
    for c in report.failures() {
        eprintln!(
            "FAIL {}: {} (target {:?}, {})",
            c.quantity, c.estimate, c.target, c.rule
        );
    }
    Ok(report.passed())
}

pub fn zeta(
    cfg: &RunConfig,
    isotropic: bool,
    n: usize,
    out: Option<PathBuf>,
) -> Result<bool, CmdError> {
    if n < 10_000 {
        return Err(config_error(
            "n",
            format!("needs at least 10000 samples, got {n}"),
        ));
    }
    let r = if isotropic {
        DirectionalDistribution::Isotropic
    } else {
        cfg.measure.directions.clone()
    };
    let z = zeta_constants(&r, cfg.dim, n, cfg.seed);
    let iso = matches!(r, DirectionalDistribution::Isotropic);
    let mut csv = String::from("constant,mean,se,isotropic_value\n");
    let mut row = |name: &str, m: Option<McMean>, v: f64| {
        if let Some(m) = m {
            let v = if iso { v.to_string() } else { String::new() };
            let _ = writeln!(csv, "{name},{},{},{v}", m.mean, m.se);
        }
    };
    row("zeta", z.zeta, 2.0 / PI);
    row("zeta2", z.zeta2, PI / 4.0);
    row("zeta3", z.zeta3, PI / 8.0);
    emit(out.or_else(|| cfg.outputs.csv.clone()).as_deref(), |o| {
        o.write_all(csv.as_bytes())
    })?;
    Ok(true)
}

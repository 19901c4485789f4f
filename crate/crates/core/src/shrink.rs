//! Shrink chains, the continuous shrink dynamics (CSD) as a typical-cell
//! sampler, and spinal chains extracted from simulated tessellations.

use crate::dynamics::{NestedTessellation, SimError, MAX_CUT_ATTEMPTS};
use crate::geom::{split_polytope, ConvexPolytope, Point, PolytopeJson, Tolerance};
use crate::kernels::{KernelError, KernelFamily, RateMode, SplitKernelSpec};
use crate::measure::DrivingMeasure;
use crate::rng::{seeded, SimRng};
use crate::stats::hypothesis::{
    exp1_cdf, ks_one_sample, ks_two_sample, ks_two_sample_weighted, TestReport,
};
use crate::stats::CensusCell;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

pub const DEFAULT_BURN_IN: usize = 10_000;
pub const DEFAULT_THIN: usize = 50;
/// CSD restarts tolerated before a run is abandoned.
pub const MAX_RESTARTS: usize = 1_000;
/// Split-test p-value below which a CSD trace is flagged.
pub const STATIONARITY_ALPHA: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShrinkError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("no admissible cut after {0} attempts")]
    NoAdmissibleCut(usize),
    #[error("continuous shrink dynamics restarted {0} times")]
    TooManyRestarts(usize),
    #[error("ensemble is empty")]
    EmptyEnsemble,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    Centered,
    /// Centered and scaled to unit Λ-mass.
    CenteredUnit,
}

/// Applies `norm` to `body`.
pub fn normalize(body: &ConvexPolytope, norm: Normalization, l: &DrivingMeasure) -> ConvexPolytope {
    match norm {
        Normalization::Raw => body.clone(),
        Normalization::Centered => body.recentered(),
        Normalization::CenteredUnit => {
            let c = body.recentered();
            let m = l.hit_mass(&c);
            c.scaled(1.0 / m)
        }
    }
}

/// State of a shrink chain. The body is stored as a centered shape of unit
/// Λ-mass together with its log Λ-mass and its barycenter, so that long raw
/// chains keep their geometry well conditioned.
#[derive(Clone, Debug)]
pub struct ShrinkChainState {
    pub shape: ConvexPolytope,
    pub log_mass: f64,
    pub center: Point,
    pub normalization: Normalization,
}

impl ShrinkChainState {
    pub fn new(body: &ConvexPolytope, normalization: Normalization, l: &DrivingMeasure) -> Self {
        let mut s = ShrinkChainState {
            shape: normalize(body, Normalization::CenteredUnit, l),
            log_mass: l.hit_mass(body).ln(),
            center: body.barycenter(),
            normalization,
        };
        s.apply_normalization();
        s
    }

    fn apply_normalization(&mut self) {
        match self.normalization {
            Normalization::Raw => {}
            Normalization::Centered => self.center = Point::zeros(),
            Normalization::CenteredUnit => {
                self.center = Point::zeros();
                self.log_mass = 0.0;
            }
        }
    }

    /// The body in the state's normalization.
    pub fn body(&self) -> ConvexPolytope {
        let b = self.shape.scaled(self.log_mass.exp());
        if self.center == Point::zeros() {
            b
        } else {
            b.translated(&self.center)
        }
    }

    pub fn lambda_mass(&self) -> f64 {
        self.log_mass.exp()
    }
}

/// Kernels whose cut law, relative to the cell, does not depend on scale.
fn scale_free(k: &SplitKernelSpec) -> bool {
    !matches!(k.family, KernelFamily::Erosion { .. })
}

/// Splits `body` with the kernel and returns both pieces.
fn split_once(
    body: &ConvexPolytope,
    k: &SplitKernelSpec,
    l: &DrivingMeasure,
    rng: &mut SimRng,
) -> Result<(ConvexPolytope, ConvexPolytope), ShrinkError> {
    if !k.is_splittable(body) {
        return Err(KernelError::UnsplittableCell.into());
    }
    let tol = Tolerance::for_window(body);
    for _ in 0..MAX_CUT_ATTEMPTS {
        match k.sample(l, body, rng) {
            Ok(h) => {
                if let Ok(s) = split_polytope(body, &h, tol) {
                    return Ok((s.plus, s.minus));
                }
            }
            Err(KernelError::BisectionFailure(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(ShrinkError::NoAdmissibleCut(MAX_CUT_ATTEMPTS))
}

/// Splits `body` and keeps either piece with probability ½.
fn split_keep(
    body: &ConvexPolytope,
    k: &SplitKernelSpec,
    l: &DrivingMeasure,
    rng: &mut SimRng,
) -> Result<ConvexPolytope, ShrinkError> {
    let (plus, minus) = split_once(body, k, l, rng)?;
    Ok(if rng.random_bool(0.5) { plus } else { minus })
}

/// One step of the shrink chain: split, keep either side with probability
/// ½, normalize.
pub fn shrink_step(
    state: &ShrinkChainState,
    k: &SplitKernelSpec,
    l: &DrivingMeasure,
    rng: &mut SimRng,
) -> Result<ShrinkChainState, ShrinkError> {
    // Scale-free kernels split the unit shape; others need the true size.
    let scale = if scale_free(k) {
        1.0
    } else {
        state.log_mass.exp()
    };
    let kept = split_keep(&state.shape.scaled(scale), k, l, rng)?;
    let m = l.hit_mass(&kept) / scale;
    let shift = kept.barycenter() / scale;
    let mut next = ShrinkChainState {
        shape: normalize(&kept, Normalization::CenteredUnit, l),
        log_mass: state.log_mass + m.ln(),
        center: state.center + shift * state.log_mass.exp(),
        normalization: state.normalization,
    };
    next.apply_normalization();
    Ok(next)
}

/// Waiting time to the next CSD jump from a body of split rate `a` growing
/// as `e^s`: inverts the cumulative rate `a (e^Δ − 1)`.
pub fn csd_waiting_time<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    (e / a).ln_1p()
}

/// Upper bound of `rate(K) / Λ([K])` over all bodies.
fn rate_envelope(k: &SplitKernelSpec) -> f64 {
    match (k.rate_mode, k.family) {
        (RateMode::Raw, KernelFamily::Scaled { alpha }) => alpha.max(1.0),
        _ => 1.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Csd,
    WindowCensus,
}

#[derive(Clone, Debug)]
pub struct TypicalCellEnsemble {
    /// Centered bodies with nonnegative weights.
    pub samples: Vec<(ConvexPolytope, f64)>,
    pub provenance: Provenance,
    pub horizon: f64,
}

impl TypicalCellEnsemble {
    pub fn from_census(cells: Vec<CensusCell>, horizon: f64) -> Self {
        TypicalCellEnsemble {
            samples: cells
                .into_iter()
                .map(|c| (c.polytope.recentered(), c.weight))
                .collect(),
            provenance: Provenance::WindowCensus,
            horizon,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Every sample brought to centered unit Λ-mass.
    pub fn renormalized(&self, l: &DrivingMeasure) -> TypicalCellEnsemble {
        TypicalCellEnsemble {
            samples: self
                .samples
                .iter()
                .map(|(c, w)| (normalize(c, Normalization::CenteredUnit, l), *w))
                .collect(),
            provenance: self.provenance,
            horizon: self.horizon,
        }
    }

    /// Weighted mean Λ-mass.
    pub fn mean_lambda_mass(&self, l: &DrivingMeasure) -> f64 {
        let (w, s) = self
            .samples
            .iter()
            .fold((0.0, 0.0), |(w, s), (c, x)| (w + x, s + x * l.hit_mass(c)));
        s / w
    }

    pub fn weights(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    /// Samples whose index has the given parity; for split-half checks.
    pub fn half(&self, odd: bool) -> TypicalCellEnsemble {
        TypicalCellEnsemble {
            samples: self
                .samples
                .iter()
                .skip(odd as usize)
                .step_by(2)
                .cloned()
                .collect(),
            provenance: self.provenance,
            horizon: self.horizon,
        }
    }

    /// JSON lines, one sample per line.
    pub fn write_jsonl<W: Write>(&self, l: &DrivingMeasure, mut out: W) -> io::Result<()> {
        #[derive(Serialize)]
        struct Record {
            polytope: PolytopeJson,
            weight: f64,
            lambda_mass: f64,
            provenance: Provenance,
            horizon: f64,
        }
        for (c, w) in &self.samples {
            let rec = Record {
                polytope: PolytopeJson::from(c),
                weight: *w,
                lambda_mass: l.hit_mass(c),
                provenance: self.provenance,
                horizon: self.horizon,
            };
            serde_json::to_writer(&mut out, &rec)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CsdRun {
    /// Samples rescaled so that their mean Λ-mass equals `d`.
    pub ensemble: TypicalCellEnsemble,
    /// Pre-rescale Λ-mass at each recorded state.
    pub trace: Vec<f64>,
    /// `d / mean Λ-mass` over the whole run and over each half of it.
    pub drift_factor: f64,
    pub drift_halves: (f64, f64),
    pub jumps: usize,
    pub restarts: usize,
    /// KS split-test of the first against the second half of the trace.
    pub stationarity: TestReport,
    pub non_ergodicity_suspected: bool,
}

impl CsdRun {
    /// Relative change of the drift factor between the two halves.
    pub fn drift_instability(&self) -> f64 {
        (self.drift_halves.0 / self.drift_halves.1 - 1.0).abs()
    }
}

/// Continuous shrink dynamics started from `k0`.
///
/// Between jumps the centered body grows as `e^s K`; jumps occur at rate
/// `rate(K)` and apply a centered shrink step. After `burn_in` jumps, every
/// `thin`-th post-jump state is recorded.
pub fn csd_run(
    k: &SplitKernelSpec,
    l: &DrivingMeasure,
    k0: &ConvexPolytope,
    n_samples: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Result<CsdRun, ShrinkError> {
    let mut rng = seeded(seed);
    let d = k0.dim().as_f64();
    let start = k0.recentered();
    let mut body = start.clone();
    let envelope = rate_envelope(k);
    let thin = thin.max(1);
    let (mut jumps, mut restarts) = (0usize, 0usize);
    let mut samples = Vec::with_capacity(n_samples);
    let mut trace = Vec::with_capacity(n_samples);
    while samples.len() < n_samples {
        // Next jump by thinning the envelope rate `envelope · Λ(e^s K)`.
        let lam = l.hit_mass(&body);
        let mut s = 0.0f64;
        loop {
            s += csd_waiting_time(envelope * lam * s.exp(), &mut rng);
            let grown = body.scaled(s.exp());
            let ratio = k.rate(l, &grown) / (envelope * lam * s.exp());
            if ratio >= 1.0 || rng.random::<f64>() < ratio {
                break;
            }
        }
        match split_keep(&body.scaled(s.exp()), k, l, &mut rng) {
            Ok(kept) => body = kept.recentered(),
            Err(ShrinkError::Kernel(KernelError::UnsplittableCell))
            | Err(ShrinkError::NoAdmissibleCut(_)) => {
                restarts += 1;
                log::warn!("shrink dynamics restarted after jump {jumps}: no admissible split");
                if restarts > MAX_RESTARTS {
                    return Err(ShrinkError::TooManyRestarts(restarts));
                }
                body = start.clone();
                continue;
            }
            Err(e) => return Err(e),
        }
        jumps += 1;
        if jumps >= burn_in && (jumps - burn_in).is_multiple_of(thin) {
            trace.push(l.hit_mass(&body));
            samples.push(body.clone());
        }
    }
    Ok(finish_run(samples, trace, d, jumps, restarts))
}

fn finish_run(
    samples: Vec<ConvexPolytope>,
    trace: Vec<f64>,
    d: f64,
    jumps: usize,
    restarts: usize,
) -> CsdRun {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let half = trace.len() / 2;
    let drift_factor = d / mean(&trace);
    let drift_halves = if half > 0 {
        (d / mean(&trace[..half]), d / mean(&trace[half..]))
    } else {
        (drift_factor, drift_factor)
    };
    let stationarity = ks_two_sample(&trace[..half], &trace[half..]);
    let non_ergodicity_suspected = stationarity.p_value < STATIONARITY_ALPHA;
    if non_ergodicity_suspected {
        log::warn!(
            "shrink dynamics trace fails the stationarity split test (p = {:.2e})",
            stationarity.p_value
        );
    }
    let samples = samples
        .into_iter()
        .map(|c| (c.scaled(drift_factor), 1.0))
        .collect();
    CsdRun {
        ensemble: TypicalCellEnsemble {
            samples,
            provenance: Provenance::Csd,
            horizon: 1.0,
        },
        trace,
        drift_factor,
        drift_halves,
        jumps,
        restarts,
        stationarity,
        non_ergodicity_suspected,
    }
}

/// Population form of the shrink dynamics: `particles` centered bodies grow
/// together as `e^s`; a body splits at its rate and is replaced by both
/// pieces, after which one body chosen uniformly among all of them is
/// removed. The empirical law of the population tracks the number-weighted
/// cell law at all times and needs no rescaling: its mean Λ-mass settles at
/// `d` by itself. The single-body chain of [`csd_run`] only does so at its
/// jump epochs; time averages along one lineage favour slowly splitting
/// bodies.
///
/// Burn-in and thinning count population jumps. Each record is one body
/// drawn uniformly from the population.
#[allow(clippy::too_many_arguments)]
pub fn csd_population_run(
    k: &SplitKernelSpec,
    l: &DrivingMeasure,
    k0: &ConvexPolytope,
    particles: usize,
    n_samples: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Result<CsdRun, ShrinkError> {
    let mut rng = seeded(seed);
    let d = k0.dim().as_f64();
    let n = particles.max(1);
    // Bodies are stored at scale `e^{-g}` of their true size.
    let mut g = 0.0f64;
    let mut pop: Vec<ConvexPolytope> = vec![k0.recentered(); n];
    let mut mass: Vec<f64> = pop.iter().map(|c| l.hit_mass(c)).collect();
    let mut total: f64 = mass.iter().sum();
    let envelope = rate_envelope(k);
    let (mut jumps, mut restarts) = (0usize, 0usize);
    let mut clock = 0.0;
    let mut grid: Option<(f64, f64)> = None;
    let mut samples = Vec::with_capacity(n_samples);
    let mut trace = Vec::with_capacity(n_samples);
    while samples.len() < n_samples {
        let i = loop {
            let s = csd_waiting_time(envelope * total * g.exp(), &mut rng);
            g += s;
            clock += s;
            let mut u = rng.random::<f64>() * total;
            let i = mass.iter().position(|&m| {
                u -= m;
                u < 0.0
            });
            let i = i.unwrap_or(n - 1);
            let grown = pop[i].scaled(g.exp());
            let ratio = k.rate(l, &grown) / (envelope * mass[i] * g.exp());
            if ratio >= 1.0 || rng.random::<f64>() < ratio {
                break i;
            }
        };
        if let Some((next, spacing)) = grid.as_mut() {
            while *next < clock && samples.len() < n_samples {
                let j = rng.random_range(0..n);
                let c = pop[j].scaled((*next - clock + g).exp());
                trace.push(l.hit_mass(&c));
                samples.push(c);
                *next += *spacing;
            }
        }
        let scale = g.exp();
        match split_once(&pop[i].scaled(scale), k, l, &mut rng) {
            Ok((a, b)) => {
                pop[i] = a.recentered().scaled(1.0 / scale);
                pop.push(b.recentered().scaled(1.0 / scale));
                let gone = rng.random_range(0..=n);
                pop.swap_remove(gone);
            }
            Err(ShrinkError::Kernel(KernelError::UnsplittableCell))
            | Err(ShrinkError::NoAdmissibleCut(_)) => {
                restarts += 1;
                log::warn!(
                    "population shrink dynamics replaced an unsplittable body after jump {jumps}"
                );
                if restarts > MAX_RESTARTS {
                    return Err(ShrinkError::TooManyRestarts(restarts));
                }
                let j = (i + 1 + rng.random_range(0..n.max(2) - 1)) % n;
                pop[i] = pop[j].clone();
            }
            Err(e) => return Err(e),
        }
        // Fold the common growth back into the stored bodies now and then.
        if g > 2.0 {
            let f = g.exp();
            pop.iter_mut().for_each(|c| *c = c.scaled(f));
            g = 0.0;
        }
        mass = pop.iter().map(|c| l.hit_mass(c)).collect();
        total = mass.iter().sum();
        jumps += 1;
        if jumps == burn_in.max(1) && grid.is_none() {
            let spacing = clock / jumps as f64 * thin.max(1) as f64;
            grid = Some((clock + spacing, spacing));
        }
    }
    Ok(finish_run(samples, trace, d, jumps, restarts))
}

/// Scalar shape functionals compared between ensembles.
pub const SHAPE_FUNCTIONALS: [&str; 3] =
    ["vertex_count", "isoperimetric_ratio", "width_anisotropy"];

pub fn shape_functional(name: &str, c: &ConvexPolytope) -> f64 {
    match name {
        "vertex_count" => c.corner_count() as f64,
        "isoperimetric_ratio" => c.isoperimetric_ratio(),
        "width_anisotropy" => c.diameter() / c.min_width(),
        _ => panic!("unknown shape functional {name}"),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeComparison {
    pub functionals: Vec<(String, TestReport)>,
}

impl ShapeComparison {
    pub fn min_p(&self) -> f64 {
        self.functionals
            .iter()
            .map(|f| f.1.p_value)
            .fold(1.0, f64::min)
    }
}

/// Weighted two-sample KS tests on each shape functional after bringing all
/// samples to centered unit Λ-mass.
pub fn compare_typical_cell(
    a: &TypicalCellEnsemble,
    b: &TypicalCellEnsemble,
    l: &DrivingMeasure,
) -> Result<ShapeComparison, ShrinkError> {
    if a.is_empty() || b.is_empty() {
        return Err(ShrinkError::EmptyEnsemble);
    }
    let (a, b) = (a.renormalized(l), b.renormalized(l));
    let (wa, wb) = (a.weights(), b.weights());
    let functionals = SHAPE_FUNCTIONALS
        .iter()
        .map(|&name| {
            let xa: Vec<f64> = a
                .samples
                .iter()
                .map(|(c, _)| shape_functional(name, c))
                .collect();
            let xb: Vec<f64> = b
                .samples
                .iter()
                .map(|(c, _)| shape_functional(name, c))
                .collect();
            (name.to_string(), ks_two_sample_weighted(&xa, &wa, &xb, &wb))
        })
        .collect();
    Ok(ShapeComparison { functionals })
}

#[derive(Clone, Debug)]
pub struct SpinalEntry {
    pub cell: ConvexPolytope,
    pub birth: f64,
    pub lambda_mass: f64,
    /// Rate and scheduled end of the cell's exponential clock.
    pub rate: f64,
    pub clock: f64,
    pub frozen: bool,
}

/// Ancestors of the cell containing a probe point; index 0 is the leaf.
#[derive(Clone, Debug)]
pub struct SpinalChain {
    pub horizon: f64,
    pub entries: Vec<SpinalEntry>,
}

pub fn extract_spinal_chain(
    y: &NestedTessellation,
    probe: &Point,
) -> Result<SpinalChain, SimError> {
    if y.window.depth(probe) <= 0.0 {
        return Err(SimError::OriginOutsideWindow);
    }
    let entries = y
        .path_to(probe)
        .into_iter()
        .rev()
        .map(|id| {
            let n = &y.nodes[id];
            SpinalEntry {
                cell: n.polytope.clone(),
                birth: n.birth,
                lambda_mass: y.measure.hit_mass(&n.polytope),
                rate: n.rate,
                clock: n.clock,
                frozen: n.frozen,
            }
        })
        .collect();
    Ok(SpinalChain {
        horizon: y.horizon,
        entries,
    })
}

/// Rescaled holding times `rate · (clock − birth)` of every non-frozen chain
/// entry, the leaf included with its scheduled clock. Whether an entry
/// exists depends only on the clocks of its ancestors, so each residual is
/// Exp(1) given that it is observed.
pub fn spinal_residuals(chains: &[SpinalChain]) -> Vec<f64> {
    chains
        .iter()
        .flat_map(|c| c.entries.iter())
        .filter(|e| !e.frozen && e.rate > 0.0 && e.clock.is_finite())
        .map(|e| e.rate * (e.clock - e.birth))
        .collect()
}

/// KS test of the pooled spinal residuals against Exp(1).
pub fn spinal_time_diagnostic(chains: &[SpinalChain]) -> TestReport {
    ks_one_sample(&spinal_residuals(chains), exp1_cdf)
}

/// Copies of `chains` with every holding time doubled; a negative control.
pub fn doubled_holding_times(chains: &[SpinalChain]) -> Vec<SpinalChain> {
    chains
        .iter()
        .map(|c| SpinalChain {
            horizon: c.horizon,
            entries: c
                .entries
                .iter()
                .map(|e| SpinalEntry {
                    clock: e.birth + 2.0 * (e.clock - e.birth),
                    ..e.clone()
                })
                .collect(),
        })
        .collect()
}

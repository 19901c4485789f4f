//! Event-driven recursive split dynamics in a bounded window.

mod export;

pub use export::{read_jsonl, svg, write_jsonl, JsonlHeader, JsonlRecord};

use crate::geom::{split_polytope, ConvexPolytope, Facet, Hyperplane, Point, Tolerance};
use crate::kernels::{KernelError, SplitKernelSpec};
use crate::measure::DrivingMeasure;
use crate::rng::{self, SimRng};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Attempts at a non-degenerate cut before a cell is frozen.
pub const MAX_CUT_ATTEMPTS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("horizon must be finite and nonnegative, got {0}")]
    BadHorizon(f64),
    #[error("point lies outside the window interior")]
    OriginOutsideWindow,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Clone, Debug)]
pub struct CellNode {
    pub id: usize,
    pub polytope: ConvexPolytope,
    pub birth: f64,
    /// Scheduled end of life. For split cells this is the death time; for
    /// leaves it lies beyond the horizon (infinite for frozen cells).
    pub clock: f64,
    /// Split rate used for the clock.
    pub rate: f64,
    pub parent: Option<usize>,
    /// `(plus, minus)` children.
    pub children: Option<(usize, usize)>,
    pub split_plane: Option<Hyperplane>,
    pub frozen: bool,
}

impl CellNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// Death time, if the cell has split.
    pub fn death(&self) -> Option<f64> {
        self.children.map(|_| self.clock)
    }
}

/// The facet inserted by one split, with its time mark.
#[derive(Clone, Debug)]
pub struct MaximalPolytope {
    pub facet: Facet,
    pub birth: f64,
    /// Cell that was split.
    pub cell: usize,
}

#[derive(Clone, Debug)]
pub struct NestedTessellation {
    pub window: ConvexPolytope,
    pub horizon: f64,
    pub kernel: SplitKernelSpec,
    pub measure: DrivingMeasure,
    pub seed: u64,
    /// Node table in birth order; node 0 is the window.
    pub nodes: Vec<CellNode>,
    /// In birth order.
    pub maximal: Vec<MaximalPolytope>,
}

#[derive(PartialEq)]
struct Event(f64, usize);

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Min-heap on time, ties by id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Runs the split dynamics in `window` up to time `t`, seeded by `seed`.
pub fn simulate_window(
    window: &ConvexPolytope,
    kernel: &SplitKernelSpec,
    measure: &DrivingMeasure,
    t: f64,
    seed: u64,
) -> Result<NestedTessellation, SimError> {
    let mut rng = rng::seeded(seed);
    let mut y = simulate_with_rng(window, kernel, measure, t, &mut rng)?;
    y.seed = seed;
    Ok(y)
}

/// As [`simulate_window`] with an explicit random stream.
pub fn simulate_with_rng(
    window: &ConvexPolytope,
    kernel: &SplitKernelSpec,
    measure: &DrivingMeasure,
    t: f64,
    rng: &mut SimRng,
) -> Result<NestedTessellation, SimError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SimError::BadHorizon(t));
    }
    kernel.validate()?;
    let tol = Tolerance::for_window(window);
    let mut y = NestedTessellation {
        window: window.clone(),
        horizon: t,
        kernel: *kernel,
        measure: measure.clone(),
        seed: 0,
        nodes: Vec::new(),
        maximal: Vec::new(),
    };
    let mut queue = BinaryHeap::new();
    let root = y.spawn(window.clone(), 0.0, None, rng);
    queue.push(Event(y.nodes[root].clock, root));
    while let Some(Event(time, id)) = queue.pop() {
        if time > t {
            break;
        }
        let cell = y.nodes[id].polytope.clone();
        let mut split = None;
        for _ in 0..MAX_CUT_ATTEMPTS {
            match kernel.sample(measure, &cell, rng) {
                Ok(h) => {
                    if let Ok(s) = split_polytope(&cell, &h, tol) {
                        split = Some((h, s));
                        break;
                    }
                }
                Err(KernelError::UnsplittableCell) => break,
                Err(KernelError::BisectionFailure(_)) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        let Some((h, s)) = split else {
            log::warn!("cell {id} frozen at time {time}: no admissible cut found");
            y.nodes[id].frozen = true;
            continue;
        };
        let plus = y.spawn(s.plus, time, Some(id), rng);
        let minus = y.spawn(s.minus, time, Some(id), rng);
        let node = &mut y.nodes[id];
        node.children = Some((plus, minus));
        node.split_plane = Some(h);
        y.maximal.push(MaximalPolytope {
            facet: s.facet,
            birth: time,
            cell: id,
        });
        queue.push(Event(y.nodes[plus].clock, plus));
        queue.push(Event(y.nodes[minus].clock, minus));
    }
    Ok(y)
}

impl NestedTessellation {
    /// Adds a cell born at `birth` and draws its exponential clock.
    fn spawn(
        &mut self,
        polytope: ConvexPolytope,
        birth: f64,
        parent: Option<usize>,
        rng: &mut SimRng,
    ) -> usize {
        let splittable = self.kernel.is_splittable(&polytope);
        let rate = if splittable {
            self.kernel.rate(&self.measure, &polytope)
        } else {
            0.0
        };
        let clock = if rate > 0.0 {
            let e: f64 = Exp1.sample(rng);
            birth + e / rate
        } else {
            f64::INFINITY
        };
        let id = self.nodes.len();
        self.nodes.push(CellNode {
            id,
            polytope,
            birth,
            clock,
            rate,
            parent,
            children: None,
            split_plane: None,
            frozen: !splittable,
        });
        id
    }

    /// The single-cell tessellation of `window` at time 0.
    pub fn empty(
        window: &ConvexPolytope,
        kernel: &SplitKernelSpec,
        measure: &DrivingMeasure,
    ) -> Self {
        let rate = kernel.rate(measure, window);
        NestedTessellation {
            window: window.clone(),
            horizon: 0.0,
            kernel: *kernel,
            measure: measure.clone(),
            seed: 0,
            nodes: vec![CellNode {
                id: 0,
                polytope: window.clone(),
                birth: 0.0,
                clock: f64::INFINITY,
                rate,
                parent: None,
                children: None,
                split_plane: None,
                frozen: false,
            }],
            maximal: Vec::new(),
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &CellNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn leaf_cells(&self) -> Vec<&CellNode> {
        self.leaves().collect()
    }

    /// The leaf containing `x`; on a cutting plane the minus side wins.
    pub fn locate(&self, x: &Point) -> Result<&CellNode, SimError> {
        if self.window.depth(x) <= 0.0 {
            return Err(SimError::OriginOutsideWindow);
        }
        Ok(&self.nodes[self.path_to(x).last().copied().unwrap_or(0)])
    }

    /// Node ids from the root to the leaf containing `x`.
    pub fn path_to(&self, x: &Point) -> Vec<usize> {
        let mut path = vec![0];
        let mut id = 0;
        while let (Some((plus, minus)), Some(h)) =
            (self.nodes[id].children, self.nodes[id].split_plane)
        {
            id = if h.signed_distance(x) > 0.0 {
                plus
            } else {
                minus
            };
            path.push(id);
        }
        path
    }

    /// The cell containing the origin.
    pub fn zero_cell(&self) -> Result<&CellNode, SimError> {
        self.locate(&Point::zeros())
    }

    /// `ι_s`: drops everything born after `s`.
    pub fn time_restrict(&self, s: f64) -> NestedTessellation {
        let s = s.min(self.horizon).max(0.0);
        let keep = self.nodes.partition_point(|n| n.birth <= s);
        let mut nodes = self.nodes[..keep].to_vec();
        for n in &mut nodes {
            if n.clock > s {
                n.children = None;
                n.split_plane = None;
                n.frozen = n.rate == 0.0;
            }
        }
        NestedTessellation {
            window: self.window.clone(),
            horizon: s,
            kernel: self.kernel,
            measure: self.measure.clone(),
            seed: self.seed,
            nodes,
            maximal: self
                .maximal
                .iter()
                .filter(|m| m.birth <= s)
                .cloned()
                .collect(),
        }
    }

    /// The tessellation induced in `region ⊆ window`: splits are replayed in
    /// time order and those missing the current piece are skipped.
    pub fn restrict_to(&self, region: &ConvexPolytope) -> NestedTessellation {
        let tol = Tolerance::for_window(region);
        let mut out = NestedTessellation {
            window: region.clone(),
            horizon: self.horizon,
            kernel: self.kernel,
            measure: self.measure.clone(),
            seed: self.seed,
            nodes: Vec::new(),
            maximal: Vec::new(),
        };
        out.nodes.push(CellNode {
            id: 0,
            polytope: region.clone(),
            birth: 0.0,
            clock: f64::INFINITY,
            rate: self.kernel.rate(&self.measure, region),
            parent: None,
            children: None,
            split_plane: None,
            frozen: false,
        });
        // (source node, restricted node) pairs still to be replayed.
        let mut stack = vec![(0usize, 0usize)];
        while let Some((src, dst)) = stack.pop() {
            let node = &self.nodes[src];
            let (Some((plus, minus)), Some(h)) = (node.children, node.split_plane) else {
                out.nodes[dst].clock = node.clock;
                out.nodes[dst].frozen = node.frozen;
                continue;
            };
            let piece = out.nodes[dst].polytope.clone();
            match split_polytope(&piece, &h, tol) {
                Ok(s) => {
                    out.nodes[dst].clock = node.clock;
                    let add = |poly: ConvexPolytope, out: &mut NestedTessellation| {
                        let id = out.nodes.len();
                        out.nodes.push(CellNode {
                            id,
                            rate: out.kernel.rate(&out.measure, &poly),
                            polytope: poly,
                            birth: node.clock,
                            clock: f64::INFINITY,
                            parent: Some(dst),
                            children: None,
                            split_plane: None,
                            frozen: false,
                        });
                        id
                    };
                    let p = add(s.plus, &mut out);
                    let m = add(s.minus, &mut out);
                    out.nodes[dst].children = Some((p, m));
                    out.nodes[dst].split_plane = Some(h);
                    out.maximal.push(MaximalPolytope {
                        facet: s.facet,
                        birth: node.clock,
                        cell: dst,
                    });
                    stack.push((plus, p));
                    stack.push((minus, m));
                }
                Err(_) => {
                    // The piece lies on one side; follow that child.
                    let c = piece.barycenter();
                    stack.push((
                        if h.signed_distance(&c) > 0.0 {
                            plus
                        } else {
                            minus
                        },
                        dst,
                    ));
                }
            }
        }
        out.sort_by_birth();
        out
    }

    /// Renumbers nodes (and orders maximal polytopes) by birth time.
    fn sort_by_birth(&mut self) {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| {
            self.nodes[a]
                .birth
                .total_cmp(&self.nodes[b].birth)
                .then(a.cmp(&b))
        });
        let mut rank = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let mut nodes: Vec<CellNode> = order.iter().map(|&i| self.nodes[i].clone()).collect();
        for n in &mut nodes {
            n.id = rank[n.id];
            n.parent = n.parent.map(|p| rank[p]);
            n.children = n.children.map(|(a, b)| (rank[a], rank[b]));
        }
        self.nodes = nodes;
        for m in &mut self.maximal {
            m.cell = rank[m.cell];
        }
        self.maximal.sort_by(|a, b| a.birth.total_cmp(&b.birth));
    }

    /// Sum of leaf volumes (equals the window volume).
    pub fn leaf_volume(&self) -> f64 {
        self.leaves().map(|n| n.polytope.volume()).sum()
    }

    pub fn split_count(&self) -> usize {
        self.maximal.len()
    }
}

/// How the i.i.d. copies of an iteration are generated inside a host cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CopyMode {
    /// Run the dynamics with the host cell itself as window.
    Cell,
    /// Run the dynamics in the host's bounding box enlarged by `margin`, then
    /// restrict to the host cell.
    Restriction { margin: f64 },
}

/// `Y₁ ⊞ Y₂`: inside every leaf of `host` an independent copy run for time
/// `s` is inserted, its time marks shifted by the host horizon. Copy `i`
/// (in leaf order) uses stream `stream(seed, i)`.
pub fn iterate(
    host: &NestedTessellation,
    s: f64,
    mode: CopyMode,
    seed: u64,
) -> Result<NestedTessellation, SimError> {
    let t1 = host.horizon;
    let mut out = host.clone();
    out.horizon = t1 + s;
    let leaves: Vec<usize> = host.leaves().map(|n| n.id).collect();
    for (i, &leaf) in leaves.iter().enumerate() {
        let cell = &host.nodes[leaf].polytope;
        let mut rng = rng::stream(seed, i as u64);
        let copy = match mode {
            CopyMode::Cell => simulate_with_rng(cell, &host.kernel, &host.measure, s, &mut rng)?,
            CopyMode::Restriction { margin } => {
                let (lo, hi) = cell.bounds();
                let d = cell.dim().get();
                let pad = Point::repeat(margin);
                let (lo, hi) = (lo - pad, hi + pad);
                let boxed =
                    ConvexPolytope::aa_box(cell.dim(), &lo.as_slice()[..d], &hi.as_slice()[..d]);
                simulate_with_rng(&boxed, &host.kernel, &host.measure, s, &mut rng)?
                    .restrict_to(cell)
            }
        };
        graft(&mut out, leaf, &copy, t1);
    }
    out.sort_by_birth();
    Ok(out)
}

/// Replaces leaf `at` of `y` by the tree of `copy` (whose root is the leaf's
/// cell), shifting the copy's times by `shift`.
fn graft(y: &mut NestedTessellation, at: usize, copy: &NestedTessellation, shift: f64) {
    let base = y.nodes.len();
    let map = |i: usize| if i == 0 { at } else { base + i - 1 };
    let root = &copy.nodes[0];
    let host = &mut y.nodes[at];
    host.clock = shift + root.clock;
    host.children = root.children.map(|(a, b)| (map(a), map(b)));
    host.split_plane = root.split_plane;
    host.frozen = root.frozen;
    for n in &copy.nodes[1..] {
        y.nodes.push(CellNode {
            id: map(n.id),
            polytope: n.polytope.clone(),
            birth: shift + n.birth,
            clock: shift + n.clock,
            rate: n.rate,
            parent: n.parent.map(map),
            children: n.children.map(|(a, b)| (map(a), map(b))),
            split_plane: n.split_plane,
            frozen: n.frozen,
        });
    }
    for m in &copy.maximal {
        y.maximal.push(MaximalPolytope {
            facet: m.facet.clone(),
            birth: shift + m.birth,
            cell: map(m.cell),
        });
    }
}

/// Simulates `reps` replications in parallel; replication `i` uses
/// `stream_seed(seed, i)`. Results come back in replication order.
pub fn replicate<T, F>(reps: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync,
{
    use rayon::prelude::*;
    (0..reps)
        .into_par_iter()
        .map(|i| f(i, rng::stream_seed(seed, i as u64)))
        .collect()
}

/// Draws one exponential holding time with the given rate.
pub fn exp_clock<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

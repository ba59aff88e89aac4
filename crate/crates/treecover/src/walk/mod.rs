//! Continuous-time random walk on `T_n` / `T̄_n` with unit edge rates.
//!
//! At `x` the walk holds for Exp(deg x) and jumps to a uniform neighbour.

pub mod branching;
pub mod engine;
pub mod sampler;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tree::{TreeShape, VertexRef};
pub use engine::{StopReason, Walker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tracking {
    All,
    /// Root, leaves, and the ancestors of the given leaf index.
    LeavesAndBranch(Option<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoldMode {
    /// Every holding time drawn as it happens.
    Eager,
    /// Only clocks that drive the stop rule are drawn as they happen.
    Deferred,
}

#[derive(Debug, Clone)]
pub struct WalkConfig {
    pub shape: TreeShape,
    pub tracking: Tracking,
    pub seed: u64,
    pub replica_id: u64,
    pub hold_mode: HoldMode,
    pub max_jumps: Option<u64>,
    pub excursion_hits: bool,
}

impl WalkConfig {
    pub fn new(shape: TreeShape, seed: u64, replica_id: u64) -> Self {
        WalkConfig {
            shape,
            tracking: Tracking::All,
            seed,
            replica_id,
            hold_mode: HoldMode::Deferred,
            max_jumps: None,
            excursion_hits: false,
        }
    }

    pub fn track_internal(mut self, on: bool) -> Self {
        self.tracking = if on {
            Tracking::All
        } else {
            Tracking::LeavesAndBranch(None)
        };
        self
    }

    pub fn with_branch(mut self, leaf_index: u64) -> Self {
        self.tracking = Tracking::LeavesAndBranch(Some(leaf_index));
        self
    }

    pub fn eager(mut self) -> Self {
        self.hold_mode = HoldMode::Eager;
        self
    }

    pub fn with_max_jumps(mut self, cap: u64) -> Self {
        self.max_jumps = Some(cap);
        self
    }

    pub fn with_excursion_hits(mut self) -> Self {
        self.excursion_hits = true;
        self
    }

    pub fn with_shape(&self, shape: TreeShape) -> Self {
        WalkConfig { shape, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    RootLocalTime(f64),
    RealTime(f64),
    Covered,
    /// Stop at the first return to the root with `2 S_k > s`.
    SumLeafLocalTime { k: u32, s: f64 },
    /// Stop as soon as any component rule holds.
    Composite(Vec<StopRule>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeField {
    pub shape: TreeShape,
    pub values: Vec<f64>,
    pub real_elapsed: f64,
    pub root_local: f64,
    pub tracking: Tracking,
}

impl LocalTimeField {
    pub fn zero(shape: TreeShape) -> Self {
        LocalTimeField {
            shape,
            values: vec![0.0; shape.vertex_count()],
            real_elapsed: 0.0,
            root_local: 0.0,
            tracking: Tracking::All,
        }
    }

    pub fn get(&self, v: &VertexRef) -> f64 {
        self.values[v.flat()]
    }

    pub fn is_tracked(&self, v: &VertexRef) -> bool {
        self.depth_tracked(v.depth)
            || match self.tracking {
                Tracking::LeavesAndBranch(Some(b)) => {
                    v.index == b >> (self.shape.n - v.depth)
                }
                _ => false,
            }
    }

    /// Whether every vertex at `depth` carries its local time.
    pub fn depth_tracked(&self, depth: u32) -> bool {
        matches!(self.tracking, Tracking::All) || depth == 0 || depth == self.shape.n
    }

    pub fn level(&self, depth: u32) -> &[f64] {
        let off = self.shape.offset(depth);
        &self.values[off..off + self.shape.width(depth) as usize]
    }

    pub fn leaves(&self) -> &[f64] {
        self.level(self.shape.n)
    }

    /// Leaves never visited.
    pub fn zero_leaves(&self) -> Vec<u64> {
        self.leaves()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == 0.0)
            .map(|(i, _)| i as u64)
            .collect()
    }

    /// Pointwise sum of two fields on the same shape.
    pub fn add(&self, other: &LocalTimeField) -> Result<LocalTimeField> {
        if self.shape != other.shape {
            return Err(Error::Argument("adding fields on different trees".into()));
        }
        Ok(LocalTimeField {
            shape: self.shape,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            real_elapsed: self.real_elapsed + other.real_elapsed,
            root_local: self.root_local + other.root_local,
            tracking: if self.tracking == other.tracking {
                self.tracking
            } else {
                Tracking::LeavesAndBranch(None)
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct WalkOutcome {
    pub field: LocalTimeField,
    pub cover_real: Option<f64>,
    pub cover_root_clock: Option<f64>,
    pub jump_count: u64,
    pub visited_count: usize,
    pub aborted: bool,
    pub reason: StopReason,
    /// Per vertex, the number of root excursions that reached it.
    pub excursion_hits: Option<Vec<u32>>,
}

pub fn simulate(config: &WalkConfig, stop: &StopRule) -> Result<WalkOutcome> {
    let mut w = Walker::new(config);
    let reason = w.run(stop)?;
    Ok(w.outcome(reason))
}

pub fn cover_times(config: &WalkConfig) -> Result<WalkOutcome> {
    simulate(config, &StopRule::Covered)
}

#[derive(Debug, Clone)]
pub struct PhaseRun {
    pub a: LocalTimeField,
    pub b: LocalTimeField,
    /// Leaf indices not visited during phase B.
    pub b_unvisited: Vec<u64>,
}

/// Phase A up to root clock `t_A`, then phase B for a further `t_B + s n`.
pub fn run_phases(config: &WalkConfig, s: f64) -> Result<PhaseRun> {
    let (t_a, t_b) = phase_times(config.shape.n, s)?;
    let mut w = Walker::new(config);
    w.run(&StopRule::RootLocalTime(t_a))?;
    let a = w.snapshot();
    let before = w.visits().to_vec();
    w.run(&StopRule::RootLocalTime(t_a + t_b))?;
    let b = w.snapshot();
    let off = config.shape.offset(config.shape.n);
    let b_unvisited = (0..config.shape.leaf_count())
        .filter(|&i| w.visits()[off + i] == before[off + i])
        .map(|i| i as u64)
        .collect();
    Ok(PhaseRun { a, b, b_unvisited })
}

/// `(t_A, t_B + s n)`.
pub fn phase_times(n: u32, s: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::Argument(format!("phases need n >= 2, got {n}")));
    }
    let c = crate::stats::centering::centering(n)?;
    let t_b = c.t_b + s * n as f64;
    if t_b < 0.0 {
        return Err(Error::Argument(format!("phase B length {t_b} < 0")));
    }
    Ok((c.t_a, t_b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafSums {
    pub s: f64,
    pub s_hat: f64,
    pub r: f64,
    pub r_hat: f64,
}

pub fn leaf_sums(field: &LocalTimeField, k: u32) -> Result<LeafSums> {
    if k > field.shape.n {
        return Err(Error::Range(format!("k = {k} > n = {}", field.shape.n)));
    }
    if (0..=k).any(|j| !field.depth_tracked(j)) {
        return Err(Error::State(format!("depths up to {k} not tracked")));
    }
    let level_sum = |j: u32| field.level(j).iter().sum::<f64>();
    let s = level_sum(k);
    let r: f64 = (0..=k).map(level_sum).sum();
    let scale = 0.5f64.powi(k as i32);
    Ok(LeafSums {
        s,
        s_hat: s * scale,
        r,
        r_hat: r * scale,
    })
}

/// Run to `tau_{k,s}` on `T_k`; depths below `k` (when `shape.n > k`) are
/// filled in from the local times at depth `k`.
pub fn stop_tau(config: &WalkConfig, k: u32, s: f64) -> Result<WalkOutcome> {
    let n = config.shape.n;
    if k == 0 || k > n || !(s >= 0.0) {
        return Err(Error::Argument(format!("stop_tau with k={k}, s={s}")));
    }
    let trace = config.with_shape(TreeShape::new(config.shape.kind, k)?);
    let mut out = simulate(&trace, &StopRule::SumLeafLocalTime { k, s })?;
    if n > k {
        let mut rng = crate::rng::replica_rng(config.seed, "stop-tau-below", config.replica_id);
        out.field = branching::extend(&out.field, config.shape, &mut rng)?;
        out.cover_real = None;
        out.cover_root_clock = None;
        out.visited_count = out.field.values.iter().filter(|&&x| x > 0.0).count().max(1);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct NuOutcome {
    pub theta: f64,
    /// `None` when `theta <= 0`.
    pub outcome: Option<WalkOutcome>,
}

impl NuOutcome {
    pub fn degenerate(&self) -> bool {
        self.outcome.is_none()
    }
}

pub fn theta(s: f64, xi: f64) -> f64 {
    s - 2.0 * s.sqrt() * xi
}

pub fn stop_nu(config: &WalkConfig, k: u32, s: f64, xi: f64) -> Result<NuOutcome> {
    let th = theta(s, xi);
    if !(th > 0.0) {
        return Ok(NuOutcome { theta: th, outcome: None });
    }
    let target = 2f64.powi(k as i32 + 1) * th;
    Ok(NuOutcome {
        theta: th,
        outcome: Some(stop_tau(config, k, target)?),
    })
}

/// One excursion from the depth-1 ancestor of `target`: does it reach
/// `target` before the root?
pub fn hit_before_root(config: &WalkConfig, target: &VertexRef) -> Result<bool> {
    let shape = config.shape;
    if !shape.contains(target) || target.is_root() {
        return Err(Error::Argument(format!("target {target:?} not a non-root vertex")));
    }
    let mut rng = crate::rng::replica_rng(config.seed, "excursion", config.replica_id);
    Ok(excursion_hits(&shape, target, &mut rng))
}

pub(crate) fn excursion_hits(shape: &TreeShape, target: &VertexRef, rng: &mut Rng) -> bool {
    use rand::Rng as _;
    let n = shape.n;
    let start = target.ancestor_unchecked(1);
    let (mut d, mut i) = (1u32, start.index);
    loop {
        if d == target.depth && i == target.index {
            return true;
        }
        if d == 0 {
            return false;
        }
        if d == n {
            d -= 1;
            i >>= 1;
            continue;
        }
        match rng.random_range(0..3u32) {
            0 => {
                d -= 1;
                i >>= 1;
            }
            b => {
                d += 1;
                i = (i << 1) | (b as u64 - 1);
            }
        }
    }
}

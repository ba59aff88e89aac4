//! The event loop.
//!
//! Holding times are independent of the jump chain, so the time spent at a
//! vertex over `m` visits is Gamma(m, deg). In `HoldMode::Deferred` only the
//! vertices whose clocks drive the stop rule draw their holds on the fly;
//! everything else keeps a visit count that is turned into time by `flush`.

use rand::Rng as _;
use rand::RngCore;
use rand_distr::{Distribution, Gamma};

use super::{HoldMode, LocalTimeField, StopRule, Tracking, WalkConfig, WalkOutcome};
use crate::error::{Error, Result};
use crate::rng::{exp1, replica_rng, Rng};
use crate::tree::{depth_degree, TreeKind, TreeShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    RootLocalTime,
    RealTime,
    Covered,
    LeafSum,
    JumpCap,
}

#[derive(Debug, Clone, Default)]
struct Targets {
    root: Option<f64>,
    real: Option<f64>,
    covered: bool,
    leaf_sum: Option<(u32, f64)>,
}

impl Targets {
    fn compile(stop: &StopRule, n: u32) -> Result<Targets> {
        let mut t = Targets::default();
        t.add(stop, n)?;
        Ok(t)
    }

    fn add(&mut self, stop: &StopRule, n: u32) -> Result<()> {
        match *stop {
            StopRule::RootLocalTime(x) => {
                if !(x >= 0.0) {
                    return Err(Error::Argument(format!("root local time {x}")));
                }
                self.root = Some(self.root.map_or(x, |y| y.min(x)));
            }
            StopRule::RealTime(x) => {
                if !(x >= 0.0) {
                    return Err(Error::Argument(format!("real time {x}")));
                }
                self.real = Some(self.real.map_or(x, |y| y.min(x)));
            }
            StopRule::Covered => self.covered = true,
            StopRule::SumLeafLocalTime { k, s } => {
                if k == 0 || k > n || !(s >= 0.0) {
                    return Err(Error::Argument(format!("leaf-sum stop k={k}, s={s}")));
                }
                match self.leaf_sum {
                    Some((k0, s0)) if k0 == k => self.leaf_sum = Some((k, s0.min(s))),
                    Some(_) => {
                        return Err(Error::Argument(
                            "composite of leaf-sum stops at different depths".into(),
                        ))
                    }
                    None => self.leaf_sum = Some((k, s)),
                }
            }
            StopRule::Composite(ref rules) => {
                for r in rules {
                    self.add(r, n)?;
                }
            }
        }
        Ok(())
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub struct Walker {
    shape: TreeShape,
    rng: Rng,
    hold_mode: HoldMode,
    tracking: Tracking,
    branch: Option<Vec<u64>>,
    offsets: Vec<usize>,
    depth: u32,
    index: u64,
    values: Vec<f64>,
    visits: Vec<u32>,
    flushed: Vec<u32>,
    root_local: f64,
    real: CompensatedSum,
    visited: usize,
    jumps: u64,
    max_jumps: Option<u64>,
    excursion_start: f64,
    excursions: u32,
    cover_real: Option<f64>,
    cover_root_clock: Option<f64>,
    leaf_sums: Vec<f64>,
    exc_last: Option<Vec<u32>>,
    exc_hits: Option<Vec<u32>>,
    leaf_sum_depth: Option<u32>,
    current_timed: bool,
}

impl Walker {
    pub fn new(config: &WalkConfig) -> Walker {
        let shape = config.shape;
        let size = shape.vertex_count();
        let mut values = vec![0.0; size];
        values[0] = 0.0;
        let mut visits = vec![0u32; size];
        visits[0] = 1;
        let branch = match config.tracking {
            Tracking::LeavesAndBranch(Some(leaf)) => Some(
                (0..=shape.n)
                    .map(|d| leaf >> (shape.n - d))
                    .collect::<Vec<_>>(),
            ),
            _ => None,
        };
        Walker {
            shape,
            rng: replica_rng(config.seed, "walk", config.replica_id),
            hold_mode: config.hold_mode,
            tracking: config.tracking,
            branch,
            offsets: (0..=shape.n).map(|d| shape.offset(d)).collect(),
            depth: 0,
            index: 0,
            values,
            visits,
            flushed: vec![0u32; size],
            root_local: 0.0,
            real: CompensatedSum::default(),
            visited: 1,
            jumps: 0,
            max_jumps: config.max_jumps,
            excursion_start: 0.0,
            excursions: 0,
            cover_real: None,
            cover_root_clock: None,
            leaf_sums: vec![0.0; shape.n as usize + 1],
            exc_last: config.excursion_hits.then(|| vec![u32::MAX; size]),
            exc_hits: config.excursion_hits.then(|| vec![0u32; size]),
            leaf_sum_depth: None,
            current_timed: false,
        }
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn root_local(&self) -> f64 {
        self.root_local
    }

    pub fn at_root(&self) -> bool {
        self.depth == 0
    }

    pub fn visits(&self) -> &[u32] {
        &self.visits
    }

    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    #[inline]
    fn tracked(&self, depth: u32, index: u64) -> bool {
        match self.tracking {
            Tracking::All => true,
            Tracking::LeavesAndBranch(_) => {
                depth == 0
                    || depth == self.shape.n
                    || self.branch.as_ref().is_some_and(|b| b[depth as usize] == index)
            }
        }
    }

    /// Turn completed but untimed visits into holding time. The visit in
    /// progress at the current vertex is left pending.
    pub fn flush(&mut self) {
        if self.hold_mode == HoldMode::Eager {
            return;
        }
        let n = self.shape.n;
        let current = self.offsets[self.depth as usize] + self.index as usize;
        for d in 1..=n {
            let deg = depth_degree(self.shape.kind, n, d) as f64;
            let off = self.offsets[d as usize];
            for i in 0..self.shape.width(d) {
                let f = off + i as usize;
                let ongoing = (f == current && !self.current_timed) as u32;
                let pending = self.visits[f] - self.flushed[f] - ongoing;
                if pending == 0 {
                    continue;
                }
                self.flushed[f] += pending;
                let time = if pending == 1 {
                    exp1(&mut self.rng) / deg
                } else {
                    Gamma::new(pending as f64, 1.0 / deg)
                        .expect("positive shape")
                        .sample(&mut self.rng)
                };
                self.real.add(time);
                if self.tracked(d, i) {
                    self.values[f] += time;
                }
            }
        }
    }

    #[inline]
    fn eager_at(&self, depth: u32) -> bool {
        match self.hold_mode {
            HoldMode::Eager => true,
            HoldMode::Deferred => depth == 0 || self.leaf_sum_depth == Some(depth),
        }
    }

    pub fn snapshot(&mut self) -> LocalTimeField {
        self.flush();
        LocalTimeField {
            shape: self.shape,
            values: self.values.clone(),
            real_elapsed: self.real.value(),
            root_local: self.root_local,
            tracking: self.tracking,
        }
    }

    pub fn outcome(&mut self, reason: StopReason) -> WalkOutcome {
        let field = self.snapshot();
        WalkOutcome {
            field,
            cover_real: self.cover_real,
            cover_root_clock: self.cover_root_clock,
            jump_count: self.jumps,
            visited_count: self.visited,
            aborted: reason == StopReason::JumpCap,
            reason,
            excursion_hits: self.exc_hits.clone(),
        }
    }

    /// Advance until `stop` holds. Clocks are cumulative across calls.
    pub fn run(&mut self, stop: &StopRule) -> Result<StopReason> {
        let targets = Targets::compile(stop, self.shape.n)?;
        if targets.real.is_some() && self.hold_mode == HoldMode::Deferred {
            return Err(Error::Argument(
                "real-time stops need eager holding times".into(),
            ));
        }
        self.leaf_sum_depth = targets.leaf_sum.map(|(k, _)| k);
        if self.cover_real.is_some() && targets.covered {
            return Ok(StopReason::Covered);
        }
        let n = self.shape.n;
        let unary = self.shape.kind == TreeKind::UnaryRoot;
        let total = self.shape.vertex_count();
        let root_deg = depth_degree(self.shape.kind, n, 0) as f64;
        let leaf_target = targets.leaf_sum.map(|(k, s)| (k as usize, s));
        let leaf_k = leaf_target.map_or(usize::MAX, |(k, _)| k);

        if let Some((k, s)) = leaf_target {
            if self.depth == 0 && 2.0 * self.leaf_sums[k] > s {
                return Ok(StopReason::LeafSum);
            }
        }
        if let Some(t) = targets.root {
            if self.depth == 0 && self.root_local >= t {
                return Ok(StopReason::RootLocalTime);
            }
        }

        loop {
            let d = self.depth;
            let f = self.offsets[d as usize] + self.index as usize;
            if self.eager_at(d) {
                let deg = if d == 0 {
                    root_deg
                } else if d == n {
                    1.0
                } else {
                    3.0
                };
                let mut h = exp1(&mut self.rng) / deg;
                let mut reason = None;
                if d == 0 {
                    if let Some(t) = targets.root {
                        if self.root_local + h >= t {
                            h = t - self.root_local;
                            reason = Some(StopReason::RootLocalTime);
                        }
                    }
                }
                if let Some(t) = targets.real {
                    let now = self.real.value();
                    if now + h >= t {
                        h = (t - now).max(0.0);
                        reason = Some(StopReason::RealTime);
                    }
                }
                if d == 0 {
                    self.root_local += h;
                    if reason == Some(StopReason::RootLocalTime) {
                        if let Some(t) = targets.root {
                            self.root_local = t;
                        }
                    }
                }
                self.real.add(h);
                if self.tracked(d, self.index) {
                    if d == 0 {
                        self.values[0] = self.root_local;
                    } else {
                        self.values[f] += h;
                    }
                }
                if d as usize == leaf_k || self.hold_mode == HoldMode::Eager {
                    self.leaf_sums[d as usize] += h;
                }
                if d != 0 {
                    self.flushed[f] += 1;
                }
                self.current_timed = true;
                if let Some(r) = reason {
                    return Ok(r);
                }
            }

            if let Some(cap) = self.max_jumps {
                if self.jumps >= cap {
                    return Ok(StopReason::JumpCap);
                }
            }
            self.jumps += 1;

            // jump
            if d == 0 {
                self.excursion_start = self.root_local;
                self.excursions += 1;
                self.depth = 1;
                self.index = if unary {
                    0
                } else {
                    (self.rng.next_u32() & 1) as u64
                };
            } else if d == n {
                self.depth -= 1;
                self.index >>= 1;
            } else {
                match self.rng.random_range(0..3u32) {
                    0 => {
                        self.depth -= 1;
                        self.index >>= 1;
                    }
                    b => {
                        self.depth += 1;
                        self.index = (self.index << 1) | (b as u64 - 1);
                    }
                }
            }

            // arrival
            self.current_timed = false;
            let d = self.depth;
            let f = self.offsets[d as usize] + self.index as usize;
            let first = self.visits[f] == 0;
            self.visits[f] += 1;
            if let (Some(last), Some(hits)) = (self.exc_last.as_mut(), self.exc_hits.as_mut()) {
                if last[f] != self.excursions {
                    last[f] = self.excursions;
                    hits[f] += 1;
                }
            }
            if first {
                self.visited += 1;
                if self.visited == total {
                    self.cover_root_clock = Some(self.excursion_start);
                    self.flush();
                    self.cover_real = Some(self.real.value());
                    if targets.covered {
                        return Ok(StopReason::Covered);
                    }
                }
            }
            if d == 0 {
                if let Some((k, s)) = leaf_target {
                    if 2.0 * self.leaf_sums[k] > s {
                        return Ok(StopReason::LeafSum);
                    }
                }
            }
        }
    }
}

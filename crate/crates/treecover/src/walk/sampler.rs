//! Interchangeable ways of producing root-clock local-time fields.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{branching, run_phases, simulate, LocalTimeField, PhaseRun, StopRule, WalkConfig};
use crate::error::{Error, Result};
use crate::rng::replica_rng;

pub trait LocalTimeSampler: Send + Sync {
    fn name(&self) -> &'static str;

    /// Field at root clock `t`.
    fn root_clock_field(&self, config: &WalkConfig, t: f64) -> Result<LocalTimeField>;

    /// Phase A / phase B snapshots with phase-B non-visit marks.
    fn phases(&self, config: &WalkConfig, s: f64) -> Result<PhaseRun>;
}

pub struct EventLoop;

impl LocalTimeSampler for EventLoop {
    fn name(&self) -> &'static str {
        "event-loop"
    }

    fn root_clock_field(&self, config: &WalkConfig, t: f64) -> Result<LocalTimeField> {
        Ok(simulate(config, &StopRule::RootLocalTime(t))?.field)
    }

    fn phases(&self, config: &WalkConfig, s: f64) -> Result<PhaseRun> {
        run_phases(config, s)
    }
}

/// Generation-by-generation sampling. The walk sits at the root when each
/// phase ends, so phase B is an independent increment.
pub struct Branching;

impl LocalTimeSampler for Branching {
    fn name(&self) -> &'static str {
        "branching"
    }

    fn root_clock_field(&self, config: &WalkConfig, t: f64) -> Result<LocalTimeField> {
        let mut rng = replica_rng(config.seed, "branching", config.replica_id);
        branching::sample_field(config.shape, t, &mut rng)
    }

    fn phases(&self, config: &WalkConfig, s: f64) -> Result<PhaseRun> {
        let (t_a, t_b) = super::phase_times(config.shape.n, s)?;
        let mut rng = replica_rng(config.seed, "branching-phases", config.replica_id);
        let a = branching::sample_field(config.shape, t_a, &mut rng)?;
        let inc = branching::sample_field(config.shape, t_b, &mut rng)?;
        let b_unvisited = inc.zero_leaves();
        let b = a.add(&inc)?;
        Ok(PhaseRun { a, b, b_unvisited })
    }
}

#[derive(Clone)]
pub struct SamplerRegistry {
    entries: BTreeMap<&'static str, Arc<dyn LocalTimeSampler>>,
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        SamplerRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, sampler: Arc<dyn LocalTimeSampler>) {
        self.entries.insert(sampler.name(), sampler);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn LocalTimeSampler>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownSampler(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        let mut r = SamplerRegistry::empty();
        r.register(Arc::new(EventLoop));
        r.register(Arc::new(Branching));
        r
    }
}

pub fn sampler(name: &str) -> Result<Arc<dyn LocalTimeSampler>> {
    SamplerRegistry::default().get(name)
}

//! Named experiments behind one trait, looked up by name.

mod bessel;
mod cover;
mod hitting;
mod iso_test;
mod martingale;
mod moments;
mod negcorr;
mod phase;
mod suite;
mod tau;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::Params;
use crate::error::{Error, Result};
use crate::report::ExperimentReport;
use crate::rng::StreamKey;
use crate::walk::sampler::{LocalTimeSampler, SamplerRegistry};

pub use bessel::{envelope_ratio, BesselExperiment, DENSITY_C};
pub use cover::CoverExperiment;
pub use hitting::HittingExperiment;
pub use iso_test::IsoExperiment;
pub use martingale::{MartingaleExperiment, ZLambdaExperiment};
pub use moments::MomentsExperiment;
pub use negcorr::NegCorrExperiment;
pub use phase::PhaseExperiment;
pub use suite::FullSuite;
pub use tau::{fit_rhat_constant, RhatExperiment, TauCltExperiment, RHAT_C};

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Tests and statistics only; the caller fills in params and verdict.
    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport>;
}

/// Everything an experiment may use: seed, parameters, samplers, and the
/// worker pool that replicas fan out over.
pub struct RunContext {
    pub seed: u64,
    pub params: Params,
    pub samplers: SamplerRegistry,
    pool: Arc<rayon::ThreadPool>,
}

impl RunContext {
    pub fn new(seed: u64, params: Params, workers: usize) -> Result<RunContext> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(RunContext {
            seed,
            params,
            samplers: SamplerRegistry::default(),
            pool: Arc::new(pool),
        })
    }

    /// Same seed, samplers and pool; parameters scoped to `prefix`.
    pub fn child(&self, prefix: &str) -> RunContext {
        RunContext {
            seed: self.seed,
            params: self.params.scoped(prefix),
            samplers: self.samplers.clone(),
            pool: self.pool.clone(),
        }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// 64-bit seed of the stream `label` under the master seed.
    pub fn stream_seed(&self, label: &str) -> u64 {
        StreamKey::new(self.seed, label).seed()
    }

    /// `f(0), .., f(count - 1)` on the pool, collected in replica order.
    pub fn replicas<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.pool
            .install(|| (0..count as u64).into_par_iter().map(&f).collect::<Result<Vec<T>>>())
    }

    /// Run `f` inside the pool, so nested parallel iterators use it.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        self.pool.install(f)
    }

    /// The sampler named by the `sampler` parameter.
    pub fn sampler(&self, default: &str) -> Result<Arc<dyn LocalTimeSampler>> {
        let name = self.params.string("sampler", default)?;
        self.samplers.get(&name)
    }
}

#[derive(Clone)]
pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        ExperimentRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, e: Arc<dyn Experiment>) {
        self.entries.insert(e.name(), e);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Experiment>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownExperiment(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Experiment>> {
        self.entries.values()
    }

    /// Run `name`, record the effective parameters and settle the verdict.
    pub fn run(&self, name: &str, ctx: &RunContext) -> Result<ExperimentReport> {
        let e = self.get(name)?;
        let mut report = e.run(ctx)?;
        for (k, v) in ctx.params.effective() {
            report.params.entry(k).or_insert(v);
        }
        let unused = ctx.params.unused();
        if !unused.is_empty() {
            report.note(format!("parameters not used: {}", unused.join(", ")));
        }
        report.finalize();
        Ok(report)
    }
}

/// Order in which the suite runs its members.
pub const SUITE_ORDER: [&str; 11] = [
    "hitting",
    "moments",
    "bessel",
    "iso-test",
    "negcorr",
    "martingale",
    "zlambda",
    "tau-clt",
    "rhat",
    "cover",
    "phase-ab",
];

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut r = ExperimentRegistry::empty();
        r.register(Arc::new(CoverExperiment));
        r.register(Arc::new(PhaseExperiment));
        r.register(Arc::new(IsoExperiment));
        r.register(Arc::new(MomentsExperiment));
        r.register(Arc::new(HittingExperiment));
        r.register(Arc::new(BesselExperiment));
        r.register(Arc::new(MartingaleExperiment));
        r.register(Arc::new(NegCorrExperiment));
        r.register(Arc::new(ZLambdaExperiment));
        r.register(Arc::new(TauCltExperiment));
        r.register(Arc::new(RhatExperiment));
        r.register(Arc::new(FullSuite));
        r
    }
}

/// Scale a replica count by the `scale` parameter, keeping at least `floor`.
pub(crate) fn scaled(ctx: &RunContext, key: &str, default: usize, floor: usize) -> Result<usize> {
    if ctx.params.contains(key) {
        return ctx.params.usize(key, default);
    }
    let scale = ctx.params.f64("scale", 1.0)?;
    if !(scale > 0.0) {
        return Err(Error::Config(format!("scale {scale}")));
    }
    let v = ((default as f64 * scale).round() as usize).max(floor);
    ctx.params.usize(key, v)
}

#[cfg(test)]
mod tests;

//! Isomorphism in law on a grid of `(n, t)`, and tightness of `|𝒢_n(1)|`.

use super::{scaled, Experiment, RunContext};
use crate::error::Result;
use crate::gff::sample_dgff_leaves;
use crate::iso::{iso_distribution_test, IsoTestParams};
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::rng::replica_rng;
use crate::stats::{self, centering::m_n};
use crate::tree::TreeShape;

pub struct IsoExperiment;

impl Experiment for IsoExperiment {
    fn name(&self) -> &'static str {
        "iso-test"
    }

    fn description(&self) -> &'static str {
        "L + h² against (h' + √t)² in law; tightness of the Gaussian sub-level set"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        let ns = p.u32_list("ns", &[1, 2, 3])?;
        let ts = p.f64_list("ts", &[1.0, 4.0])?;
        let samples = scaled(ctx, "samples", 100_000, 1000)?;
        let projections = p.usize("projections", 4)?;
        let sampler = ctx.sampler("event-loop")?;
        for &n in &ns {
            for &t in &ts {
                let params = IsoTestParams {
                    n,
                    t,
                    samples,
                    projections,
                    alpha: 0.01,
                    seed: ctx.stream_seed(&format!("iso-test/n{n}-t{t}")),
                };
                let sub = ctx.install(|| iso_distribution_test(sampler.as_ref(), &params))?;
                report.absorb(&sub);
            }
        }

        // |G_n(1)| at several depths
        let gns = p.u32_list("g_ns", &[8, 12, 16])?;
        let u = p.f64("u", 1.0)?;
        let greps = scaled(ctx, "g_replicas", 2000, 100)?;
        let mut p95 = Vec::new();
        for &n in &gns {
            let shape = TreeShape::unary(n)?;
            let m = m_n(n as f64);
            let key = ctx.stream_seed(&format!("iso-test/g{n}"));
            report.stream(&format!("iso-test/g{n}"));
            let sizes = ctx.replicas(greps, |r| {
                let leaves = sample_dgff_leaves(shape, &mut replica_rng(key, "h", r));
                Ok(leaves.iter().filter(|&&h| (h + m) * (h + m) <= u).count() as f64)
            })?;
            p95.push(stats::quantile(&sizes, 0.95));
            report.add_stat(&format!("g-size-n{n}"), sizes);
        }
        let growth = p95.last().copied().unwrap_or(0.0) / p95.first().copied().unwrap_or(1.0).max(1.0);
        report.add_test(
            TestResult::below("g-size-tight", growth, 3.0, Calibration::Calibrated)
                .with_detail(format!("95th percentiles {p95:?} at n = {gns:?}; ratio last/first")),
        );
        Ok(report)
    }
}

//! Gambler's ruin, Poisson visit counts and exact non-visit probabilities.

use super::{scaled, Experiment, RunContext};
use crate::error::Result;
use crate::oracles::hitting_probability;
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::rng::replica_rng;
use crate::stats::{self, centering::centering};
use crate::tree::{TreeKind, TreeShape};
use crate::walk::{branching, hit_before_root, simulate, StopRule, WalkConfig};

pub struct HittingExperiment;

impl Experiment for HittingExperiment {
    fn name(&self) -> &'static str {
        "hitting"
    }

    fn description(&self) -> &'static str {
        "hitting a leaf before the root, Poisson visit counts, non-visit probability"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);

        // oracle: 1/n from depth 1, and d/n from depth d on the root-leaf path
        let max_n = p.u32("oracle_max_n", 10)?;
        let mut worst: f64 = 0.0;
        let mut worst_path: f64 = 0.0;
        for n in 1..=max_n {
            let shape = TreeShape::regular(n)?;
            let leaf = shape.vertex(n, (1u64 << n) - 1)?;
            for d in 1..=n {
                let h = hitting_probability(&shape, &leaf.ancestor(d)?, &leaf, &shape.root())?;
                let err = (h - d as f64 / n as f64).abs();
                worst_path = worst_path.max(err);
                if d == 1 {
                    worst = worst.max(err);
                }
            }
        }
        report.add_test(
            TestResult::below("gamblers-ruin-oracle", worst, 1e-10, Calibration::Theory)
                .with_detail(format!("max |h - 1/n| over n <= {max_n}")),
        );
        report.add_test(TestResult::below("gamblers-ruin-path", worst_path, 1e-10, Calibration::Derived));

        // Monte Carlo single excursions
        let n = p.u32("n", 8)?;
        let excursions = scaled(ctx, "excursions", 200_000, 1000)?;
        let shape = TreeShape::unary(n)?;
        let target = shape.vertex(n, 0)?;
        let seed = ctx.stream_seed("hitting/excursion");
        report.stream("hitting/excursion");
        let hits = ctx.replicas(excursions, |r| {
            hit_before_root(&WalkConfig::new(shape, seed, r), &target).map(|b| b as u8 as f64)
        })?;
        let (m, se) = stats::mean_se(&hits);
        let q = 1.0 / n as f64;
        let se_exact = (q * (1.0 - q) / excursions as f64).sqrt();
        report.add_test(
            TestResult::within_sigma("gamblers-ruin-mc", m, se_exact, q, 3.0, Calibration::Theory)
                .with_detail(format!("sample se {se:.2e}")),
        );

        // visit counts: root excursions reaching a fixed leaf
        let vn = p.u32("visit_n", 6)?;
        let vt = p.f64("visit_t", 12.0)?;
        let vreps = scaled(ctx, "visit_replicas", 100_000, 500)?;
        let vshape = TreeShape::regular(vn)?;
        let leaf_flat = vshape.offset(vn);
        let seed = ctx.stream_seed("hitting/visits");
        report.stream("hitting/visits");
        let counts = ctx.replicas(vreps, |r| {
            let c = WalkConfig::new(vshape, seed, r).track_internal(false).with_excursion_hits();
            let out = simulate(&c, &StopRule::RootLocalTime(vt))?;
            Ok(out.excursion_hits.expect("requested")[leaf_flat] as u64)
        })?;
        let rate = vt / vn as f64;
        let gof = stats::poisson_gof(&counts, rate)?;
        report.add_test(
            TestResult::p_value("visit-count-poisson", gof.chi2, gof.p, 0.01, Calibration::Theory)
                .with_detail(format!("rate {rate}, df {}", gof.df)),
        );
        report.add_stat("visit-count", counts.iter().map(|&c| c as f64).collect());

        // exact non-visit probability e^{-t/n} with the event loop
        let nn = p.u32("nonvisit_n", 4)?;
        let nt = p.f64("nonvisit_t", 4.0)?;
        let nreps = scaled(ctx, "nonvisit_replicas", 100_000, 500)?;
        let nshape = TreeShape::regular(nn)?;
        let seed = ctx.stream_seed("hitting/nonvisit");
        report.stream("hitting/nonvisit");
        let zero = ctx.replicas(nreps, |r| {
            let c = WalkConfig::new(nshape, seed, r).track_internal(false);
            let out = simulate(&c, &StopRule::RootLocalTime(nt))?;
            Ok((out.field.leaves()[0] == 0.0) as u8 as f64)
        })?;
        let target = (-nt / nn as f64).exp();
        report.add_test(within_binomial("non-visit-small", &zero, target, Calibration::Theory));

        // the same at t = t_B on a deep tree, sampled along one root path
        let dn = p.u32("deep_n", 16)?;
        let dreps = scaled(ctx, "deep_replicas", 100_000, 500)?;
        let dshape = TreeShape::new(TreeKind::UnaryRoot, dn)?;
        let t_b = centering(dn)?.t_b;
        report.stream("hitting/deep");
        let key = ctx.stream_seed("hitting/deep");
        let zero = ctx.replicas(dreps, |r| {
            let mut rng = replica_rng(key, "path", r);
            let l = branching::sample_paths(dshape, t_b, &[0], &mut rng)?;
            Ok((l[0] == 0.0) as u8 as f64)
        })?;
        let target = (-t_b / dn as f64).exp();
        report.add_test(
            within_binomial("non-visit-deep", &zero, target, Calibration::Theory)
                .with_detail(format!("t_B = {t_b:.4}, e^(-t/n) = 1/sqrt(n) = {target:.6}, branching path sampler")),
        );
        Ok(report)
    }
}

/// Proportion of ones within 3σ of `q`, σ from the binomial variance.
fn within_binomial(name: &str, x: &[f64], q: f64, cal: Calibration) -> TestResult {
    let m = stats::mean(x);
    let se = (q * (1.0 - q) / x.len() as f64).sqrt();
    TestResult::within_sigma(name, m, se, q, 3.0, cal)
}

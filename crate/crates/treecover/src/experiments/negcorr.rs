//! The two-tree field with negative cross covariance.

use super::{scaled, Experiment, RunContext};
use crate::error::Result;
use crate::gff::negcorr::{omega_edges, sample_negcorr, CopyVertex};
use crate::gff::{negcorr_covariance_oracle, omega_covariance_by_accumulation, omega_covariance_oracle};
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::rng::replica_rng;
use crate::stats;
use crate::tree::TreeShape;

pub struct NegCorrExperiment;

impl Experiment for NegCorrExperiment {
    fn name(&self) -> &'static str {
        "negcorr"
    }

    fn description(&self) -> &'static str {
        "exact covariance of the edge weights, sampled covariances of the two-tree field"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        let depth = p.u32("depth", 8)?;
        let mut worst: f64 = 0.0;
        for n in 1..=depth {
            let edges = omega_edges(n)?;
            let cov = omega_covariance_by_accumulation(n)?;
            for (a, e) in edges.iter().enumerate() {
                for (b, f) in edges.iter().enumerate() {
                    worst = worst.max((cov[a * edges.len() + b] - omega_covariance_oracle(e, f)).abs());
                }
            }
        }
        report.add_test(
            TestResult::below("omega-exact", worst, 1e-12, Calibration::Theory)
                .with_detail(format!("max entrywise error for n <= {depth}")),
        );

        let n = p.u32("sample_depth", 2)?;
        let draws = scaled(ctx, "draws", 100_000, 1000)?;
        let shape = TreeShape::regular(n)?;
        let key = ctx.stream_seed("negcorr/sample");
        report.stream("negcorr/sample");
        // leaf 0 of each copy and leaf 1 and the last leaf of copy 0
        let picks = [
            CopyVertex { copy: 0, v: shape.vertex(n, 0)? },
            CopyVertex { copy: 1, v: shape.vertex(n, 0)? },
            CopyVertex { copy: 0, v: shape.vertex(n, 1)? },
            CopyVertex { copy: 1, v: shape.vertex(n, shape.width(n) - 1)? },
        ];
        let rows = ctx.replicas(draws, |r| {
            let f = sample_negcorr(n, &mut replica_rng(key, "h", r))?;
            Ok(picks.iter().map(|x| f.get(x)).collect::<Vec<f64>>())
        })?;
        let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
        for (i, j, name) in [
            (0, 1, "cross-cov"),
            (0, 3, "cross-cov-far"),
            (0, 2, "within-cov"),
            (0, 0, "variance"),
            (1, 1, "variance-copy2"),
        ] {
            let (c, se) = stats::covariance_se(&col(i), &col(j));
            let target = negcorr_covariance_oracle(&picks[i], &picks[j])?;
            let cal = if name == "cross-cov" { Calibration::Exact } else { Calibration::Theory };
            report.add_test(TestResult::within_sigma(name, c, se, target, 3.0, cal).with_detail(format!("target {target}")));
        }
        report.add_stat("h1-leaf0", col(0));
        report.add_stat("h2-leaf0", col(1));
        Ok(report)
    }
}

//! Means and covariances of the local-time field against exact values.

use serde_json::Value;

use super::{scaled, Experiment, RunContext};
use crate::error::{Error, Result};
use crate::oracles::{centered_leaf_cross, cov_local_times, exact_moments};
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::stats;
use crate::tree::TreeShape;
use crate::walk::{leaf_sums, WalkConfig};

pub struct MomentsExperiment;

impl Experiment for MomentsExperiment {
    fn name(&self) -> &'static str {
        "moments"
    }

    fn description(&self) -> &'static str {
        "E S, E R, Var S, Var R and leaf covariances at root clock t"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        let ns = p.u32_list("ns", &[4, 5, 6])?;
        let ts = p.f64_list("ts", &[2.0, 4.0, 10.0])?;
        if ns.len() != ts.len() {
            return Err(Error::Config("ns and ts must have equal length".into()));
        }
        let reps = scaled(ctx, "replicas", 20_000, 200)?;
        let sampler = ctx.sampler("event-loop")?;

        let small = exact_moments(TreeShape::regular(2)?, 1.0);
        report.add_test(TestResult::tolerance("var-s-n2-t1", small.var_s, 24.0, 1e-12, Calibration::Derived));

        for (&n, &t) in ns.iter().zip(&ts) {
            let shape = TreeShape::regular(n)?;
            let label = format!("moments/n{n}-t{t}");
            let seed = ctx.stream_seed(&label);
            report.stream(&label);
            let x = shape.vertex(n, 0)?;
            // partners of leaf 0 meeting it at depth d = 0..n
            let partners: Vec<usize> = (0..=n)
                .map(|d| if d == n { x.flat() } else { shape.offset(n) + (1usize << (n - d - 1)) })
                .collect();
            let rows = ctx.replicas(reps, |r| {
                let field = sampler.root_clock_field(&WalkConfig::new(shape, seed, r), t)?;
                let sums = leaf_sums(&field, n)?;
                let mut row = vec![sums.s, sums.r, sums.s_hat];
                row.extend(partners.iter().map(|&f| field.values[f]));
                Ok(row)
            })?;
            let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
            let (s, r, s_hat) = (col(0), col(1), col(2));
            let ex = exact_moments(shape, t);
            let tag = format!("n{n}-t{t}");

            let (m, se) = stats::mean_se(&s);
            report.add_test(TestResult::within_sigma(&format!("mean-s-{tag}"), m, se, ex.es, 3.0, Calibration::Theory));
            let (m, se) = stats::mean_se(&r);
            report.add_test(TestResult::within_sigma(&format!("mean-r-{tag}"), m, se, ex.er, 3.0, Calibration::Theory));
            let (m, se) = squared_dev(&s, ex.es);
            report.add_test(TestResult::within_sigma(&format!("var-s-{tag}"), m, se, ex.var_s, 3.0, Calibration::Derived));
            let (m, se) = squared_dev(&r, ex.er);
            report.add_test(TestResult::within_sigma(&format!("var-r-{tag}"), m, se, ex.var_r, 3.0, Calibration::Derived));

            let lx = col(3 + n as usize);
            for d in 0..=n {
                let ly = col(3 + d as usize);
                let (c, se) = stats::covariance_se(&lx, &ly);
                report.add_test(TestResult::within_sigma(
                    &format!("cov-meet{d}-{tag}"),
                    c,
                    se,
                    cov_local_times(d, t),
                    3.0,
                    Calibration::Theory,
                ));
            }
            let centred: Vec<f64> = lx.iter().zip(&s_hat).map(|(a, b)| a - b).collect();
            let (c, se) = stats::covariance_se(&centred, &s_hat);
            report.add_test(TestResult::within_sigma(
                &format!("cov-centred-shat-{tag}"),
                c,
                se,
                centered_leaf_cross(n, t),
                3.0,
                Calibration::Theory,
            ));
            report.add_stat(&format!("s-{tag}"), s);
            report.add_stat(&format!("r-{tag}"), r);
        }
        report.params.insert("sampler".into(), Value::from(sampler.name()));
        Ok(report)
    }
}

/// Mean and standard error of `(x - mu)²`.
fn squared_dev(x: &[f64], mu: f64) -> (f64, f64) {
    let sq: Vec<f64> = x.iter().map(|v| (v - mu) * (v - mu)).collect();
    stats::mean_se(&sq)
}

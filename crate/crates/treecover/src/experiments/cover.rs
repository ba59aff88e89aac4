//! Cover times in both clocks: tightness and stability of the centred laws.

use super::{scaled, Experiment, RunContext};
use crate::error::{Error, Result};
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::stats::{self, centering::centering};
use crate::tree::TreeShape;
use crate::walk::{cover_times, WalkConfig};

pub struct CoverExperiment;

impl Experiment for CoverExperiment {
    fn name(&self) -> &'static str {
        "cover"
    }

    fn description(&self) -> &'static str {
        "√T^C - √t_n^C and the real-clock statistic across n: tightness, cross-n consistency, tail shape"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        let ns = if p.contains("n") {
            vec![p.u32("n", 10)?]
        } else {
            p.u32_list("ns", &[8, 10, 12])?
        };
        let reps = scaled(ctx, "replicas", 2000, 50)?;
        // 0 means no cap; a capped walk that stops short is a numeric failure
        let cap = p.u64("max_jumps", 0)?;
        let mut root_stats: Vec<Vec<f64>> = Vec::new();
        let mut real_stats: Vec<Vec<f64>> = Vec::new();
        let mut real_raw: Vec<Vec<f64>> = Vec::new();
        for &n in &ns {
            let c = centering(n)?;
            let shape = TreeShape::regular(n)?;
            let label = format!("cover/n{n}");
            let seed = ctx.stream_seed(&label);
            report.stream(&label);
            let rows = ctx.replicas(reps, |r| {
                let mut config = WalkConfig::new(shape, seed, r).track_internal(false);
                if cap > 0 {
                    config = config.with_max_jumps(cap);
                }
                let out = cover_times(&config)?;
                match (out.cover_root_clock, out.cover_real) {
                    (Some(a), Some(b)) => Ok((a, b)),
                    _ => Err(Error::Numeric(format!("replica {r} at n = {n} not covered after {} jumps", out.jump_count))),
                }
            })?;
            let root: Vec<f64> = rows.iter().map(|r| r.0.sqrt() - c.sqrt_t_c).collect();
            let real: Vec<f64> = rows.iter().map(|r| r.1 / c.cor4_scale - c.cor4_center).collect();
            for (tag, v) in [("root", &root), ("real", &real)] {
                report.add_test(
                    TestResult::below(&format!("iqr-{tag}-n{n}"), stats::iqr(v), 3.0, Calibration::Calibrated)
                        .with_detail("tightness surrogate, calibrated not paper-derived"),
                );
            }
            report.add_stat(&format!("root-centred-n{n}"), root.clone());
            report.add_stat(&format!("real-centred-n{n}"), real.clone());
            root_stats.push(root);
            real_stats.push(real);
            real_raw.push(rows.iter().map(|r| r.1).collect());
        }

        for (tag, all) in [("root", &root_stats), ("real", &real_stats)] {
            for i in 1..ns.len() {
                let ks = stats::ks_two_sample(&all[i - 1], &all[i])?;
                report.add_test(
                    TestResult::p_value(
                        &format!("ks-{tag}-n{}-n{}", ns[i - 1], ns[i]),
                        ks.statistic,
                        ks.p,
                        0.001,
                        Calibration::Calibrated,
                    )
                    .with_detail("consistency with a common limit, not a confirmation of the constant"),
                );
            }
            let medians: Vec<f64> = all.iter().map(|v| stats::median(v)).collect();
            let worst = medians.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
            report.add_test(
                TestResult::below(&format!("median-trend-{tag}"), worst, 1.0, Calibration::Calibrated)
                    .with_detail(format!("medians {medians:.4?} at n = {ns:?}")),
            );
        }

        // leading order of the real clock at the largest n
        let last = ns.len() - 1;
        let n = ns[last] as f64;
        let lead = std::f64::consts::LN_2 * 2f64.powf(n + 1.0) * n * n;
        let m = stats::mean(&real_raw[last]);
        report.add_test(
            TestResult::below("leading-order-mean", (m / lead - 1.0).abs(), 0.15, Calibration::Theory)
                .with_detail(format!("mean {m:.1} against (log 2) 2^(n+1) n² = {lead:.1} at n = {n}")),
        );

        // right tail of the real-clock statistic against rate-1 decay
        let tail = &real_stats[last];
        let lo = p.f64("tail_from", 0.5)?;
        let hi = p.f64("tail_to", 0.99)?;
        let slope = log_survival_slope(tail, lo, hi);
        report.add_test(
            TestResult::check("tail-slope", (-1.3..=-0.7).contains(&slope), Calibration::Calibrated)
                .with_detail(format!("log-survival slope {slope:.4} between quantiles {lo} and {hi}")),
        );
        Ok(report)
    }
}

/// Least-squares slope of `log P(X > x)` against `x` over the sample points
/// between quantiles `lo` and `hi`.
pub fn log_survival_slope(x: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let (a, b) = ((lo * n) as usize, ((hi * n) as usize).min(v.len() - 1));
    let xs: Vec<f64> = v[a..b].to_vec();
    let ys: Vec<f64> = (a..b).map(|i| ((n - i as f64) / n).ln()).collect();
    stats::ols_slope(&xs, &ys)
}

//! Derivative martingales: the 𝕋 / 𝕋̄ relation, stabilization, the
//! exponential martingale, the extreme value, and `𝐙Λ = Z` in law.

use super::{scaled, Experiment, RunContext};
use crate::error::Result;
use crate::gff::{
    derivative_martingale, gumbel_mixture_cdf, half_normal_step, martingale_from_level, sample_lambda,
    sample_negcorr, GaussianField, MartingaleVariant,
};
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::rng::{replica_rng, Rng};
use crate::stats::{self, centering::{m_n, sqrt_log2}};
use rand_distr::{Distribution, Normal};
use crate::tree::TreeKind;

/// Generate a DGFF level by level (same stream order as
/// [`crate::gff::sample_dgff`]) and call `visit` at every requested depth.
pub fn stream_levels(kind: TreeKind, depths: &[u32], rng: &mut Rng, mut visit: impl FnMut(u32, &[f64])) {
    let top = depths.iter().copied().max().unwrap_or(0);
    let mut level = vec![0.0];
    if depths.contains(&0) {
        visit(0, &level);
    }
    for d in 1..=top {
        let fan = if kind == TreeKind::UnaryRoot && d == 1 { 1 } else { 2 };
        let mut next = Vec::with_capacity(level.len() * fan);
        for &p in &level {
            for _ in 0..fan {
                next.push(p + half_normal_step(rng));
            }
        }
        level = next;
        if depths.contains(&d) {
            visit(d, &level);
        }
    }
}

fn martingale_at(kind: TreeKind, n: u32, rng: &mut Rng, variant: MartingaleVariant) -> Result<f64> {
    let mut out = Ok(0.0);
    stream_levels(kind, &[n], rng, |d, level| out = martingale_from_level(kind, d, level, variant));
    out
}

pub struct MartingaleExperiment;

impl Experiment for MartingaleExperiment {
    fn name(&self) -> &'static str {
        "martingale"
    }

    fn description(&self) -> &'static str {
        "2Z against the two halves on the unary-root tree, stabilization, exponential decay, extremes"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        let k = p.u32("truncation", 16)?;
        let samples = scaled(ctx, "samples", 2000, 100)?;

        let key = ctx.stream_seed("martingale/z");
        report.stream("martingale/z");
        let two_z = ctx.replicas(samples, |r| {
            Ok(2.0 * martingale_at(TreeKind::Regular, k, &mut replica_rng(key, "z", r), MartingaleVariant::Z)?)
        })?;
        let key = ctx.stream_seed("martingale/zbar");
        report.stream("martingale/zbar");
        let halves = ctx.replicas(samples, |r| {
            let l = martingale_at(TreeKind::UnaryRoot, k, &mut replica_rng(key, "left", r), MartingaleVariant::ZBar)?;
            let rr = martingale_at(TreeKind::UnaryRoot, k, &mut replica_rng(key, "right", r), MartingaleVariant::ZBar)?;
            Ok((l, rr))
        })?;
        let zbar: Vec<f64> = halves.iter().map(|h| h.0).collect();
        let sum: Vec<f64> = halves.iter().map(|h| h.0 + h.1).collect();
        let ks = stats::ks_two_sample(&two_z, &sum)?;
        report.add_test(TestResult::p_value("two-z-vs-halves", ks.statistic, ks.p, 0.01, Calibration::Theory));

        // the limit-law evaluator on the positive Z̄ samples
        let positive: Vec<f64> = zbar.iter().copied().filter(|&z| z > 0.0).collect();
        let rate = 2.0 * crate::stats::centering::sqrt_log2();
        let grid: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.5).collect();
        let cdf = grid
            .iter()
            .map(|&s| gumbel_mixture_cdf(s, rate, 1.0, &positive))
            .collect::<Result<Vec<f64>>>()?;
        let increasing = cdf.windows(2).all(|w| w[1] > w[0]);
        report.add_test(
            TestResult::check("gumbel-cdf-increasing", increasing, Calibration::Derived)
                .with_detail(format!("{} of {} Z̄ samples positive", positive.len(), zbar.len())),
        );
        report.add_stat("two-z", two_z);
        report.add_stat("zbar-sum", sum);

        // one realization per replica, evaluated along the whole path
        let lo = p.u32("series_from", 8)?;
        let hi = p.u32("series_to", 24)?;
        if hi < lo + 3 {
            return Err(crate::error::Error::Config(format!("series_to {hi} < series_from {lo} + 3")));
        }
        let series_reps = scaled(ctx, "series_replicas", 100, 20)?;
        let depths: Vec<u32> = (lo.min(5)..=hi).collect();
        let key = ctx.stream_seed("martingale/series");
        report.stream("martingale/series");
        let rows = ctx.replicas(series_reps, |r| {
            let mut z = Vec::new();
            let mut w = Vec::new();
            let mut res = Ok(());
            stream_levels(TreeKind::Regular, &depths, &mut replica_rng(key, "h", r), |d, level| {
                let a = martingale_from_level(TreeKind::Regular, d, level, MartingaleVariant::Z);
                let b = martingale_from_level(TreeKind::Regular, d, level, MartingaleVariant::Exponential);
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        z.push(a);
                        w.push(b);
                    }
                    (Err(e), _) | (_, Err(e)) => res = Err(e),
                }
            });
            res.map(|_| (z, w))
        })?;
        let idx = |n: u32| (n - depths[0]) as usize;
        let mut medians = Vec::new();
        for n in lo + 1..=hi {
            let diffs: Vec<f64> = rows.iter().map(|(z, _)| (z[idx(n)] - z[idx(n - 1)]).abs()).collect();
            medians.push(stats::median(&diffs));
        }
        let ns: Vec<f64> = (lo + 1..=hi).map(|n| n as f64).collect();
        let logs: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
        let slope = stats::ols_slope(&ns, &logs);
        let pool = |ns: std::ops::RangeInclusive<u32>| {
            let v: Vec<f64> = ns
                .flat_map(|n| rows.iter().map(move |(z, _)| (z[idx(n)] - z[idx(n - 1)]).abs()))
                .collect();
            stats::median(&v)
        };
        let (early, late) = (pool(lo + 1..=lo + 3), pool(hi - 2..=hi));
        report.add_test(
            TestResult::below("stabilization-slope", slope, 0.0, Calibration::Calibrated)
                .with_detail(format!("log median |Z_n - Z_(n-1)| against n; medians {medians:.3?}")),
        );
        report.add_test(
            TestResult::below("stabilization-early-late", late / early, 1.0, Calibration::Calibrated)
                .with_detail(format!("pooled median over the last three depths {late:.4}, first three {early:.4}")),
        );
        let w_first: Vec<f64> = rows.iter().map(|(_, w)| w[idx(depths[0])]).collect();
        let w_last: Vec<f64> = rows.iter().map(|(_, w)| w[idx(hi)]).collect();
        let ratio = stats::median(&w_last) / stats::median(&w_first);
        report.add_test(
            TestResult::below("exponential-decay", ratio, 0.1, Calibration::Theory).with_detail(format!(
                "median W_{hi} / median W_{} = {ratio:.4}",
                depths[0]
            )),
        );
        report.add_stat(&format!("z-{hi}"), rows.iter().map(|(z, _)| z[idx(hi)]).collect());

        // centred maximum of |h| over the unary-root tree
        let max_ns = p.u32_list("max_ns", &[8, 12, 16])?;
        let max_reps = scaled(ctx, "max_replicas", 1000, 50)?;
        let mut meds = Vec::new();
        for &n in &max_ns {
            let key = ctx.stream_seed(&format!("martingale/max{n}"));
            report.stream(&format!("martingale/max{n}"));
            let centred = ctx.replicas(max_reps, |r| {
                let mut top = 0.0f64;
                stream_levels(TreeKind::UnaryRoot, &[n], &mut replica_rng(key, "h", r), |_, level| {
                    top = level.iter().fold(0.0f64, |a, h| a.max(h.abs()));
                });
                Ok(top - m_n(n as f64))
            })?;
            meds.push(stats::median(&centred));
            report.add_stat(&format!("max-centred-n{n}"), centred);
        }
        let spread = meds.iter().copied().fold(f64::NEG_INFINITY, f64::max) - meds.iter().copied().fold(f64::INFINITY, f64::min);
        report.add_test(
            TestResult::below("max-tight", spread, 1.0, Calibration::Calibrated)
                .with_detail(format!("medians {meds:.3?} at n = {max_ns:?}")),
        );
        Ok(report)
    }
}

pub struct ZLambdaExperiment;

impl Experiment for ZLambdaExperiment {
    fn name(&self) -> &'static str {
        "zlambda"
    }

    fn description(&self) -> &'static str {
        "(Z¹ + Z²) Λ from the two-tree field against Z in law"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        let k = p.u32("truncation", 16)?;
        let samples = scaled(ctx, "samples", 2000, 100)?;
        let key = ctx.stream_seed("zlambda/pair");
        report.stream("zlambda/pair");
        let bold = ctx.replicas(samples, |r| {
            let mut rng = replica_rng(key, "h", r);
            let f = sample_negcorr(k, &mut rng)?;
            let z1 = derivative_martingale(&f.copies[0], k, MartingaleVariant::Z)?;
            let z2 = derivative_martingale(&f.copies[1], k, MartingaleVariant::Z)?;
            let lambda = sample_lambda(&mut replica_rng(key, "lambda", r));
            let finite = two_tree_identity(&f.copies, k - 1, &mut replica_rng(key, "xi", r))?;
            Ok((z1 + z2, lambda, finite))
        })?;
        let key = ctx.stream_seed("zlambda/z");
        report.stream("zlambda/z");
        let z = ctx.replicas(samples, |r| {
            martingale_at(TreeKind::Regular, k, &mut replica_rng(key, "h", r), MartingaleVariant::Z)
        })?;
        let product: Vec<f64> = bold.iter().map(|b| b.0 * b.1).collect();
        let ks = stats::ks_two_sample(&product, &z)?;
        let (med_p, med_z) = (stats::median(&product), stats::median(&z));
        report.add_test(
            TestResult::p_value("zlambda-vs-z", ks.statistic, ks.p, 0.01, Calibration::Theory)
                .with_detail(format!("medians {med_p:.4} against {med_z:.4}; drops the depth-{k} exponential martingale")),
        );
        let finite: Vec<f64> = bold.iter().map(|b| b.2).collect();
        let ks = stats::ks_two_sample(&finite, &z)?;
        report.add_test(
            TestResult::p_value("two-tree-identity-vs-z", ks.statistic, ks.p, 0.01, Calibration::Exact)
                .with_detail(format!("depth-{} two-tree sum with ξ¹, ξ² and W terms against Z at depth {k}", k - 1)),
        );
        let lambdas: Vec<f64> = bold.iter().map(|b| b.1).collect();
        let (m, se) = stats::mean_se(&lambdas);
        report.add_test(TestResult::within_sigma("lambda-mean", m, se, 0.5, 3.0, Calibration::Exact));
        report.add_stat("bold-z", bold.iter().map(|b| b.0).collect());
        report.add_stat("bold-z-lambda", product);
        report.add_stat("two-tree-identity", finite);
        report.add_stat("z", z);
        Ok(report)
    }
}

/// `¼ Σ_i e^{2√log2 ξⁱ_n} (Zⁱ_n + (√log2 - ξⁱ_n) Wⁱ_n)` with
/// `ξⁱ_n = √(1 - 2^-n) ξ + 2^(-n/2) ξⁱ`, which has the law of `Z_{n+1}` for
/// every `n`.
pub fn two_tree_identity(copies: &[GaussianField; 2], n: u32, rng: &mut Rng) -> Result<f64> {
    let half = Normal::new(0.0, 0.5f64.sqrt()).expect("valid parameters");
    let common = half.sample(rng);
    let r = sqrt_log2();
    let w = 2f64.powi(-(n as i32));
    let mut total = 0.0;
    for copy in copies {
        let xi = (1.0 - w).sqrt() * common + w.sqrt() * half.sample(rng);
        let z = derivative_martingale(copy, n, MartingaleVariant::Z)?;
        let e = derivative_martingale(copy, n, MartingaleVariant::Exponential)?;
        total += (2.0 * r * xi).exp() * (z + (r - xi) * e);
    }
    Ok(total / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_tree_identity_matches_next_depth() {
        let n = 3;
        let lhs: Vec<f64> = (0..4000)
            .map(|r| {
                let f = sample_negcorr(n, &mut replica_rng(1, "h", r)).unwrap();
                two_tree_identity(&f.copies, n, &mut replica_rng(1, "xi", r)).unwrap()
            })
            .collect();
        let z: Vec<f64> = (0..4000)
            .map(|r| martingale_at(TreeKind::Regular, n + 1, &mut replica_rng(2, "h", r), MartingaleVariant::Z).unwrap())
            .collect();
        let ks = stats::ks_two_sample(&lhs, &z).unwrap();
        assert!(ks.p > 0.001, "{ks:?}");
    }
}

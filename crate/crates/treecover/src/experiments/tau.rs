//! Walks stopped when the leaf sum crosses a level: overshoot, leaf
//! covariances, the randomized stop `ν`, and `R̂ ≈ 2Ŝ`.

use rand_distr::{Distribution, Normal};

use super::{scaled, Experiment, RunContext};
use crate::error::Result;
use crate::oracles::centered_leaf_cov;
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::rng::replica_rng;
use crate::stats;
use crate::tree::TreeShape;
use crate::walk::{leaf_sums, stop_nu, stop_tau, WalkConfig};

/// `ξ ~ N(0, 1/2)` for replica `r`.
fn xi(key: u64, r: u64) -> f64 {
    Normal::new(0.0, 0.5f64.sqrt()).expect("sd").sample(&mut replica_rng(key, "xi", r))
}

/// Flat indices of leaf 0 and of the leaves meeting it at depth `0..n`
/// (the last entry is leaf 0 itself).
fn partners(shape: &TreeShape) -> Vec<usize> {
    let n = shape.n;
    (0..=n)
        .map(|d| shape.offset(n) + if d == n { 0 } else { 1usize << (n - d - 1) })
        .collect()
}

pub struct TauCltExperiment;

impl Experiment for TauCltExperiment {
    fn name(&self) -> &'static str {
        "tau-clt"
    }

    fn description(&self) -> &'static str {
        "overshoot at the leaf-sum stop, leaf covariances there, and the randomized stop against a fixed clock"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);

        // overshoot of S_k past 2^k s
        let k = p.u32("returns_k", 3)?;
        let s = p.f64("returns_s", 100.0)?;
        let reps = scaled(ctx, "returns_replicas", 50_000, 500)?;
        let shape = TreeShape::regular(k)?;
        let seed = ctx.stream_seed("tau-clt/returns");
        report.stream("tau-clt/returns");
        let rows = ctx.replicas(reps, |r| {
            let out = stop_tau(&WalkConfig::new(shape, seed, r).track_internal(false), k, 2f64.powi(k as i32 + 1) * s)?;
            Ok(out.field.leaves().iter().sum::<f64>())
        })?;
        let scale = 2f64.powi(k as i32);
        let over: Vec<f64> = rows.iter().map(|&sk| sk - scale * s).collect();
        let (m, se) = stats::mean_se(&over);
        report.add_test(TestResult::within_sigma("overshoot-mean", m, se, scale - 1.0, 3.0, Calibration::Theory));
        let s_hat: Vec<f64> = rows.iter().map(|&sk| sk / scale).collect();
        let (m, se) = stats::mean_se(&s_hat);
        report.add_test(
            TestResult::check("s-hat-in-range", m + 3.0 * se >= s && m - 3.0 * se <= s + 1.0, Calibration::Theory)
                .with_detail(format!("mean Ŝ {m:.4} ± {se:.4}, range [{s}, {}]", s + 1.0)),
        );
        report.add_test(TestResult::check(
            "s-hat-at-least-s",
            s_hat.iter().all(|&x| x >= s),
            Calibration::Exact,
        ));
        report.add_stat("overshoot", over);

        // centred leaf covariances at the stop
        let k = p.u32("k", 4)?;
        let s = p.f64("s", 1e4)?;
        let reps = scaled(ctx, "replicas", 2000, 100)?;
        let shape = TreeShape::regular(k)?;
        let seed = ctx.stream_seed("tau-clt/cov");
        report.stream("tau-clt/cov");
        let idx = partners(&shape);
        let fields = ctx.replicas(reps, |r| {
            let out = stop_tau(&WalkConfig::new(shape, seed, r).track_internal(false), k, 2f64.powi(k as i32 + 1) * s)?;
            Ok(idx.iter().map(|&f| (out.field.values[f] - s) / s.sqrt()).collect::<Vec<f64>>())
        })?;
        let col = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
        let x = col(&fields, k as usize);
        for d in 0..=k {
            let (c, se) = stats::covariance_se(&x, &col(&fields, d as usize));
            let target = centered_leaf_cov(k, d, 1.0);
            report.add_test(
                TestResult::within_sigma(&format!("tau-cov-meet{d}"), c, se, target, 3.0, Calibration::Derived)
                    .with_detail(format!("2(d - 1 + 2^-k) = {target:.4}; limit 2(d - 1) = {}", 2.0 * (d as f64 - 1.0))),
            );
        }
        report.add_stat("tau-centred-leaf0", x);

        // randomized stop against a fixed clock
        let nu_reps = scaled(ctx, "nu_replicas", 2000, 50)?;
        let sampler = ctx.sampler("branching")?;
        let seed = ctx.stream_seed("tau-clt/nu");
        let xkey = ctx.stream_seed("tau-clt/xi");
        report.stream("tau-clt/nu");
        report.stream("tau-clt/xi");
        let nu = ctx.replicas(nu_reps, |r| {
            let out = stop_nu(&WalkConfig::new(shape, seed, r).track_internal(false), k, s, xi(xkey, r))?;
            let th = out.theta;
            Ok(out.outcome.map(|o| {
                let mut row: Vec<f64> = idx.iter().map(|&f| o.field.values[f]).collect();
                row.push(th);
                row
            }))
        })?;
        let excluded = nu.iter().filter(|o| o.is_none()).count();
        let nu: Vec<Vec<f64>> = nu.into_iter().flatten().collect();
        let seed = ctx.stream_seed("tau-clt/fixed");
        report.stream("tau-clt/fixed");
        let fixed = ctx.replicas(nu_reps, |r| {
            let field = sampler.root_clock_field(&WalkConfig::new(shape, seed, r), s)?;
            Ok(idx.iter().map(|&f| field.values[f]).collect::<Vec<f64>>())
        })?;
        if excluded > 0 {
            report.note(format!("{excluded} replicas with θ <= 0 excluded"));
        }
        let centred = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter().map(|r| r.iter().map(|v| (v - s) / s.sqrt()).collect()).collect()
        };
        let (cn, cf) = (centred(&nu), centred(&fixed));
        let by_theta: Vec<Vec<f64>> = nu
            .iter()
            .map(|r| {
                let th = r[k as usize + 1];
                r[..=k as usize].iter().map(|v| (v - th) / s.sqrt()).collect()
            })
            .collect();
        let xt = col(&by_theta, k as usize);
        let (xn, xf) = (col(&cn, k as usize), col(&cf, k as usize));
        let two_k = 0.5f64.powi(k as i32);
        for d in 0..=k {
            let (c, se) = stats::covariance_se(&xn, &col(&cn, d as usize));
            let target = 2.0 * (d as f64 + two_k);
            report.add_test(
                TestResult::within_sigma(&format!("nu-cov-meet{d}"), c, se, target, 3.0, Calibration::Derived)
                    .with_detail(format!("2(d + 2^-k) = {target:.4}")),
            );
            let (c, se) = stats::covariance_se(&xt, &col(&by_theta, d as usize));
            report.add_test(TestResult::within_sigma(
                &format!("nu-theta-cov-meet{d}"),
                c,
                se,
                centered_leaf_cov(k, d, 1.0),
                3.0,
                Calibration::Derived,
            ));
            let (c, se) = stats::covariance_se(&xf, &col(&cf, d as usize));
            report.add_test(TestResult::within_sigma(
                &format!("fixed-cov-meet{d}"),
                c,
                se,
                2.0 * d as f64,
                3.0,
                Calibration::Theory,
            ));
        }
        for d in [0, k] {
            let a: Vec<f64> = col(&nu, d as usize).iter().map(|v| v.sqrt()).collect();
            let b: Vec<f64> = col(&fixed, d as usize).iter().map(|v| v.sqrt()).collect();
            let ks = stats::ks_two_sample(&a, &b)?;
            report.add_test(TestResult::p_value(
                &format!("nu-vs-fixed-ks-leaf{}", if d == k { 0 } else { 1usize << (k - d - 1) }),
                ks.statistic,
                ks.p,
                0.01,
                Calibration::Theory,
            ));
        }
        Ok(report)
    }
}

/// Envelope constant for `P(|R̂ - 2Ŝ| > ε) <= C (ε^-2 2^-k + ε^-1 2^-(n-k)) E Ŝ`,
/// fitted on a pilot grid (seed 1; (n, k, s) = (12, 6, 100), (14, 7, 50),
/// (12, 6, 25); 400 replicas each) as the largest ratio, plus 25%; see
/// `tests/pilots.rs`.
pub const RHAT_C: f64 = 0.90;

pub struct RhatExperiment;

impl Experiment for RhatExperiment {
    fn name(&self) -> &'static str {
        "rhat"
    }

    fn description(&self) -> &'static str {
        "R̂ ≈ 2Ŝ at the leaf-sum stop, and the randomized stop against the real clock"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        let n = p.u32("n", 16)?;
        let k = p.u32("k", 8)?;
        let s = p.f64("s", 100.0)?;
        let eps = p.f64("eps", 1.0)?;
        let c = p.f64("c", RHAT_C)?;
        let reps = scaled(ctx, "replicas", 200, 20)?;
        let gaps = rhat_gaps(ctx, &mut report, "rhat/bound", n, k, s, reps)?;
        let (gap, s_hat): (Vec<f64>, Vec<f64>) = gaps.into_iter().unzip();
        let prob = gap.iter().filter(|g| g.abs() > eps).count() as f64 / gap.len() as f64;
        let shape_term = (eps.powi(-2) * 0.5f64.powi(k as i32) + eps.recip() * 0.5f64.powi((n - k) as i32)) * stats::mean(&s_hat);
        report.add_test(
            TestResult::below("rhat-bound", prob, c * shape_term, Calibration::Calibrated)
                .with_detail(format!("P(|R̂ - 2Ŝ| > {eps}) = {prob:.4}, C = {c}, shape {shape_term:.4}")),
        );
        let huge = gap.iter().filter(|g| g.abs() > 1e6).count();
        report.add_test(TestResult::check("rhat-huge-eps", huge == 0, Calibration::Exact));
        report.add_stat("rhat-gap", gap);

        // k = n: the mean gap is exactly -2^-n times the root clock at the stop
        let gap_ns = p.u32_list("gap_ns", &[4, 6, 8])?;
        let gap_s = p.f64("gap_s", 10.0)?;
        let gap_reps = scaled(ctx, "gap_replicas", 4000, 200)?;
        let mut typical = Vec::new();
        for &m in &gap_ns {
            let shape = TreeShape::regular(m)?;
            let label = format!("rhat/gap{m}");
            let seed = ctx.stream_seed(&label);
            report.stream(&label);
            let rows = ctx.replicas(gap_reps, |r| {
                let out = stop_tau(&WalkConfig::new(shape, seed, r), m, 2f64.powi(m as i32 + 1) * gap_s)?;
                let sums = leaf_sums(&out.field, m)?;
                let g = sums.r_hat - 2.0 * sums.s_hat;
                Ok((g, g + out.field.root_local * 0.5f64.powi(m as i32)))
            })?;
            let adjusted: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let (mm, se) = stats::mean_se(&adjusted);
            report.add_test(TestResult::within_sigma(&format!("gap-mean-n{m}"), mm, se, 0.0, 3.0, Calibration::Exact));
            let abs: Vec<f64> = rows.iter().map(|r| r.0.abs()).collect();
            typical.push(stats::median(&abs));
        }
        report.add_test(
            TestResult::check("gap-shrinks", typical.windows(2).all(|w| w[1] < w[0]), Calibration::Derived)
                .with_detail(format!("median |R̂ - 2Ŝ| {typical:.4?} at n = {gap_ns:?}")),
        );

        // randomized stop, real clock
        let nu_n = p.u32("nu_n", 16)?;
        let nu_k = p.u32("nu_k", 8)?;
        let nu_s = p.f64("nu_s", 1e4)?;
        let nu_reps = scaled(ctx, "nu_replicas", 20, 5)?;
        let shape = TreeShape::regular(nu_n)?;
        let seed = ctx.stream_seed("rhat/nu");
        let xkey = ctx.stream_seed("rhat/xi");
        report.stream("rhat/nu");
        report.stream("rhat/xi");
        let dev = ctx.replicas(nu_reps, |r| {
            let x = xi(xkey, r);
            let out = stop_nu(&WalkConfig::new(shape, seed, r).track_internal(false), nu_k, nu_s, x)?;
            Ok(out.outcome.map(|o| {
                ((0.5f64.powi(nu_n as i32 + 1) * o.field.real_elapsed).sqrt() + x - nu_s.sqrt()).abs()
            }))
        })?;
        let excluded = dev.iter().filter(|d| d.is_none()).count();
        let dev: Vec<f64> = dev.into_iter().flatten().collect();
        if excluded > 0 {
            report.note(format!("{excluded} replicas with θ <= 0 excluded"));
        }
        let q90 = stats::quantile(&dev, 0.9);
        report.add_test(TestResult::below("nu-real-clock-q90", q90, 0.5, Calibration::Theory));
        report.add_stat("nu-real-clock-dev", dev);
        Ok(report)
    }
}

/// `(R̂_n - 2Ŝ_k, Ŝ_k)` at `τ_{k, 2^{k+1} s}` on `T_n`.
fn rhat_gaps(
    ctx: &RunContext,
    report: &mut ExperimentReport,
    label: &str,
    n: u32,
    k: u32,
    s: f64,
    reps: usize,
) -> Result<Vec<(f64, f64)>> {
    let shape = TreeShape::regular(n)?;
    let seed = ctx.stream_seed(label);
    report.stream(label);
    ctx.replicas(reps, |r| {
        let out = stop_tau(&WalkConfig::new(shape, seed, r), k, 2f64.powi(k as i32 + 1) * s)?;
        let full = leaf_sums(&out.field, n)?;
        let at_k = leaf_sums(&out.field, k)?;
        Ok((full.r_hat - 2.0 * at_k.s_hat, at_k.s_hat))
    })
}

/// Pilot fit of the `R̂` envelope constant: the largest ratio of the
/// empirical tail probability to the bound shape over `grid`.
pub fn fit_rhat_constant(ctx: &RunContext, grid: &[(u32, u32, f64)], eps: f64, reps: usize) -> Result<f64> {
    let mut scratch = ExperimentReport::new("pilot", ctx.seed);
    let mut worst: f64 = 0.0;
    for &(n, k, s) in grid {
        let rows = rhat_gaps(ctx, &mut scratch, &format!("rhat/pilot-{n}-{k}-{s}"), n, k, s, reps)?;
        let prob = rows.iter().filter(|g| g.0.abs() > eps).count() as f64 / rows.len() as f64;
        let mean_s: f64 = rows.iter().map(|g| g.1).sum::<f64>() / rows.len() as f64;
        let shape_term = (eps.powi(-2) * 0.5f64.powi(k as i32) + eps.recip() * 0.5f64.powi((n - k) as i32)) * mean_s;
        worst = worst.max(prob / shape_term);
    }
    Ok(worst)
}

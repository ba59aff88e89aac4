//! Phase A / phase B: overdispersion of Gaussian sub-level clusters, the
//! planted phase-B count, the repulsion surrogate and cluster counts.

use super::{scaled, Experiment, RunContext};
use crate::cluster::{
    ancestors_at, classify_trajectories, cluster_count_statistic, phase_b_unvisited_clusters, spread_leaves,
    sublevel_leaves, ClassParams,
};
use crate::error::Result;
use crate::gff::sample_dgff;
use crate::iso::g_set;
use crate::oracles::unvisited_count_law;
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::rng::replica_rng;
use crate::stats::{self, centering::centering};
use crate::tree::{TreeKind, TreeShape};
use crate::walk::{branching, phase_times, WalkConfig};

pub struct PhaseExperiment;

impl Experiment for PhaseExperiment {
    fn name(&self) -> &'static str {
        "phase-ab"
    }

    fn description(&self) -> &'static str {
        "mixed-Poisson overdispersion, planted phase-B counts, repulsion surrogate, cluster counts after phase A"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        overdispersion(ctx, &mut report)?;
        planted(ctx, &mut report)?;
        repulsion(ctx, &mut report)?;
        clusters(ctx, &mut report)?;
        Ok(report)
    }
}

/// `|[𝒢_n(u)]_{n-r}|` on `T̄_n`.
fn overdispersion(ctx: &RunContext, report: &mut ExperimentReport) -> Result<()> {
    let p = &ctx.params;
    let n = p.u32("n", 14)?;
    let u = p.f64("u", 1.0)?;
    let r = p.u32("r", 4)?;
    let reps = scaled(ctx, "replicas", 5000, 200)?;
    let resamples = p.usize("bootstrap", 2000)?;
    let shape = TreeShape::new(TreeKind::UnaryRoot, n)?;
    let key = ctx.stream_seed("phase-ab/g");
    report.stream("phase-ab/g");
    let counts = ctx.replicas(reps, |i| {
        let h = sample_dgff(shape, &mut replica_rng(key, "h", i));
        Ok(ancestors_at(&g_set(&h, u)?, n - r) as f64)
    })?;
    let disp = stats::dispersion(&counts)?;
    let mut rng = replica_rng(ctx.stream_seed("phase-ab/bootstrap"), "resample", 0);
    report.stream("phase-ab/bootstrap");
    let (lo, hi) = stats::bootstrap_ci(&counts, |x| stats::dispersion(x).unwrap_or(f64::NAN), resamples, 0.99, &mut rng);
    report.add_test(
        TestResult::above("dispersion-ci-low", lo, 1.0, Calibration::Theory)
            .with_detail(format!("dispersion {disp:.4}, 99% bootstrap CI [{lo:.4}, {hi:.4}], mean count {:.4}", stats::mean(&counts))),
    );
    report.add_stat("g-ancestors", counts);
    Ok(())
}

/// Phase B alone at `M = ⌈√n⌉` spread leaves of `T̄_n`.
fn planted(ctx: &RunContext, report: &mut ExperimentReport) -> Result<()> {
    let p = &ctx.params;
    let n = p.u32("planted_n", 16)?;
    let ss = p.f64_list("planted_s", &[0.0, 1.0])?;
    let reps = scaled(ctx, "planted_replicas", 20_000, 500)?;
    let shape = TreeShape::new(TreeKind::UnaryRoot, n)?;
    let m = (n as f64).sqrt().ceil() as usize;
    let leaves = spread_leaves(&shape, m)?;
    let idx: Vec<u64> = leaves.iter().map(|v| v.index).collect();
    let t_b = centering(n)?.t_b;
    for &s in &ss {
        let t = t_b + s * n as f64;
        let label = format!("phase-ab/planted-s{s}");
        let key = ctx.stream_seed(&label);
        report.stream(&label);
        let counts = ctx.replicas(reps, |i| {
            let l = branching::sample_paths(shape, t, &idx, &mut replica_rng(key, "path", i))?;
            Ok(l.iter().filter(|&&x| x == 0.0).count() as u64)
        })?;
        let q = (-t / n as f64).exp();
        let gof = stats::chi_square_pmf(&counts, |k| stats::binomial_pmf(m as u64, q, k), 0);
        report.add_test(
            TestResult::p_value(&format!("planted-binomial-s{s}"), gof.chi2, gof.p, 0.01, Calibration::Theory)
                .with_detail(format!("Binomial({m}, {q:.6}), q = e^-s/√n; df {}", gof.df)),
        );
        let gof = stats::chi_square_pmf(&counts, |k| stats::poisson_pmf(m as f64 * q, k), 0);
        report.add_test(
            TestResult::p_value(&format!("planted-poisson-s{s}"), gof.chi2, gof.p, 0.01, Calibration::Theory)
                .with_detail(format!("Poisson({:.6}); df {}", m as f64 * q, gof.df)),
        );
        let law = unvisited_count_law(&shape, &leaves, t)?;
        let gof = stats::chi_square_pmf(&counts, |k| law.get(k as usize).copied().unwrap_or(0.0), 0);
        report.add_test(
            TestResult::p_value(&format!("planted-exact-s{s}"), gof.chi2, gof.p, 0.01, Calibration::Exact)
                .with_detail(format!("exact law {law:.6?}; df {}", gof.df)),
        );
        let c: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let (mm, se) = stats::mean_se(&c);
        report.add_test(TestResult::within_sigma(
            &format!("planted-mean-s{s}"),
            mm,
            se,
            m as f64 * q,
            3.0,
            Calibration::Exact,
        ));
        report.add_stat(&format!("planted-count-s{s}"), c);
    }
    Ok(())
}

/// Fraction of zero leaves after phase A that fail the `𝒪` band, pooled
/// over replicas, per `√n`.
fn repulsion(ctx: &RunContext, report: &mut ExperimentReport) -> Result<()> {
    let p = &ctx.params;
    let ns = p.u32_list("repulsion_ns", &[10, 14, 18])?;
    let reps = scaled(ctx, "repulsion_replicas", 200, 20)?;
    let eta = p.f64("eta", 0.25)?;
    let eta_prime = p.f64("eta_prime", 0.1)?;
    let params = ClassParams {
        eta,
        eta_prime,
        u: 0.0,
        ..ClassParams::default()
    };
    let mut fractions = Vec::new();
    let mut counts = Vec::new();
    let mut raw = Vec::new();
    for &n in &ns {
        let shape = TreeShape::new(TreeKind::UnaryRoot, n)?;
        let (t_a, _) = phase_times(n, 0.0)?;
        let label = format!("phase-ab/repulsion-n{n}");
        let key = ctx.stream_seed(&label);
        report.stream(&label);
        let rows = ctx.replicas(reps, |i| {
            let field = branching::sample_field(shape, t_a, &mut replica_rng(key, "field", i))?;
            let class = classify_trajectories(&field, &params)?;
            Ok((class.count(|c| !c.in_o) as f64, class.leaves.len() as f64))
        })?;
        let root_n = (n as f64).sqrt();
        let failing: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let zeros: f64 = rows.iter().map(|r| r.1).sum();
        let fraction = if zeros > 0.0 { failing.iter().sum::<f64>() / zeros } else { 0.0 };
        raw.push(fraction);
        fractions.push(fraction / root_n);
        counts.push(stats::mean(&failing) / root_n);
        report.add_stat(&format!("repulsion-failing-n{n}"), failing);
        report.add_stat(&format!("repulsion-zeros-n{n}"), rows.iter().map(|r| r.1).collect());
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    report.add_test(
        TestResult::check("repulsion-fraction-decreasing", decreasing(&fractions), Calibration::Calibrated).with_detail(
            format!("pooled fraction failing / √n {fractions:.4?}, unscaled {raw:.4?} at n = {ns:?}"),
        ),
    );
    report.add_test(
        TestResult::check("repulsion-count-decreasing", decreasing(&counts), Calibration::Theory)
            .with_detail(format!("mean |F \\ O| / √n {counts:.4?} at n = {ns:?}")),
    );
    Ok(())
}

/// `|[F(0)]_{r_n}| / √n` after phase A, and phase-B survivors at large `s`.
fn clusters(ctx: &RunContext, report: &mut ExperimentReport) -> Result<()> {
    let p = &ctx.params;
    let ns = p.u32_list("cluster_ns", &[12, 16])?;
    let reps = scaled(ctx, "cluster_replicas", 2000, 50)?;
    let eta = p.f64("eta", 0.25)?;
    let sampler = ctx.sampler("branching")?;
    let mut samples = Vec::new();
    for &n in &ns {
        let shape = TreeShape::new(TreeKind::UnaryRoot, n)?;
        let (t_a, _) = phase_times(n, 0.0)?;
        let label = format!("phase-ab/clusters-n{n}");
        let seed = ctx.stream_seed(&label);
        report.stream(&label);
        let v = ctx.replicas(reps, |i| {
            let field = sampler.root_clock_field(&WalkConfig::new(shape, seed, i).track_internal(false), t_a)?;
            cluster_count_statistic(&field, eta)
        })?;
        report.add_stat(&format!("cluster-count-n{n}"), v.clone());
        samples.push(v);
    }
    for i in 1..ns.len() {
        let ks = stats::ks_two_sample(&samples[i - 1], &samples[i])?;
        report.add_test(
            TestResult::p_value(
                &format!("cluster-count-ks-n{}-n{}", ns[i - 1], ns[i]),
                ks.statistic,
                ks.p,
                0.01,
                Calibration::Calibrated,
            )
            .with_detail("consistency with a common limit"),
        );
    }

    let n = p.u32("survivor_n", 12)?;
    let s = p.f64("survivor_s", 10.0)?;
    let reps = scaled(ctx, "survivor_replicas", 500, 50)?;
    let shape = TreeShape::new(TreeKind::UnaryRoot, n)?;
    let label = "phase-ab/survivors";
    let seed = ctx.stream_seed(label);
    report.stream(label);
    let counts = ctx.replicas(reps, |i| {
        let run = sampler.phases(&WalkConfig::new(shape, seed, i), s)?;
        let zeros = sublevel_leaves(&run.a, 0.0).len();
        Ok((phase_b_unvisited_clusters(&run.a, &run.b_unvisited, eta)?, zeros))
    })?;
    let none = counts.iter().filter(|c| c.0 == 0).count() as f64 / counts.len() as f64;
    let mean_zeros = counts.iter().map(|c| c.1 as f64).sum::<f64>() / counts.len() as f64;
    report.add_test(
        TestResult::check("survivors-vanish", none >= 0.99, Calibration::Derived)
            .with_detail(format!("P(count = 0) = {none:.4} at s = {s}, n = {n}; mean phase-A zeros {mean_zeros:.2}")),
    );
    Ok(())
}
